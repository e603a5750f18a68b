import logging

from anatomy.exceptions import ConfigurationError
from callgraph.graph import build_graph
from comparison.matching import MatchReport, match_reference
from comparison.reference import load_reference
from emitters.documents import emit_json
from emitters.text import render_matches
from profiles.parser import load_profile
from symbols.aggregation import aggregate

from ..base import AnalysisCommand

logger = logging.getLogger(__name__)


class Command(AnalysisCommand):
    help = "Match the classes of a Callgrind profile against a reference architecture."

    def add_command_arguments(self, parser):
        parser.add_argument("profile", help="Callgrind output file.")
        parser.add_argument("--reference", help="YAML reference architecture.")
        parser.add_argument("--fuzzy-threshold", help="Minimum token overlap for a fuzzy match (default: 0.5).")

    def run(self, config, **options):
        if not config.reference_path:
            raise ConfigurationError("No reference architecture given; pass --reference or set it in --config.")
        reference = load_reference(config.reference_path)
        graph = aggregate(build_graph(load_profile(options["profile"])), "class")

        report = MatchReport(reference.name, tuple(match_reference(graph, reference, config.fuzzy_threshold)))
        if report.unmatched:
            logger.info(f"Unmatched components: {', '.join(report.unmatched)}")
        if config.output_format == "json":
            return emit_json(report)
        return render_matches(report)
