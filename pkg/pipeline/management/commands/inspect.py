from callgraph.graph import build_graph
from emitters.documents import emit_json
from emitters.text import render_inspect
from profiles.parser import load_profile

from ..base import AnalysisCommand


class Command(AnalysisCommand):
    help = "Summarize a Callgrind profile: header, events, function and call counts, totals."

    def add_command_arguments(self, parser):
        parser.add_argument("profile", help="Callgrind output file.")

    def run(self, config, **options):
        profile = load_profile(options["profile"])
        if not profile.is_conserved():
            self.warn(f"{options['profile']}: self costs do not add up to the summary line")
        if config.output_format == "json":
            return emit_json(profile)
        return render_inspect(profile, build_graph(profile))
