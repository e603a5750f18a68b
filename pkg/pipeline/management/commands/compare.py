from pathlib import Path

from anatomy.exceptions import ConfigurationError
from emitters.documents import emit_json
from emitters.text import render_comparison
from profiles.parser import load_profile

from ...analysis import COMPARE_LEVELS, compare_profiles, load_both, ruleset_for
from ..base import AnalysisCommand


class Command(AnalysisCommand):
    help = (
        "Compare the anatomy of two programs from their Callgrind profiles: common and unique "
        "components, initialization order and idle or repeatedly called subsystems."
    )

    def add_command_arguments(self, parser):
        parser.add_argument("left", help="Callgrind output file of the first program.")
        parser.add_argument("right", help="Callgrind output file of the second program.")
        parser.add_argument("--left-name", help="Name of the first program (default: its file name).")
        parser.add_argument("--right-name", help="Name of the second program (default: its file name).")
        parser.add_argument("--level", choices=COMPARE_LEVELS, help="Granularity (default: class).")
        parser.add_argument("--ruleset", help="YAML category ruleset (default: the shipped one).")
        parser.add_argument("--fuzzy-threshold", help="Minimum token overlap for a fuzzy pair (default: 0.5).")
        parser.add_argument("--idle-threshold", help="Share below which a subsystem counts as idle (default: 0.01).")
        parser.add_argument("--repeat-threshold", type=int, help="Calls from which a node counts as repeated.")

    def run(self, config, **options):
        if config.level not in COMPARE_LEVELS:
            raise ConfigurationError(f"compare works at {', '.join(COMPARE_LEVELS)} level, not {config.level}")
        ruleset = ruleset_for(config)
        left, right = load_both(load_profile, options["left"], options["right"], workers=config.workers)
        report = compare_profiles(
            left,
            right,
            config,
            ruleset,
            left_name=options["left_name"] or Path(options["left"]).stem,
            right_name=options["right_name"] or Path(options["right"]).stem,
            level=config.level,
        )
        if config.output_format == "json":
            return emit_json(report)
        return render_comparison(report)
