from anatomy.exceptions import ConfigurationError
from callgraph.graph import COST_KINDS, build_graph
from emitters.text import emit_top
from profiles.parser import load_profile

from ...analysis import event_index
from ..base import AnalysisCommand


class Command(AnalysisCommand):
    help = "List the most expensive functions of a Callgrind profile."

    formats = ("text",)

    def add_command_arguments(self, parser):
        parser.add_argument("profile", help="Callgrind output file.")
        parser.add_argument("-n", "--limit", type=int, default=10, help="Number of functions (default: 10).")
        parser.add_argument("--kind", choices=COST_KINDS, default="self", help="Rank by self or inclusive cost.")
        parser.add_argument("--event", help="Event to rank by (default: the first one).")

    def run(self, config, **options):
        if options["limit"] < 1:
            raise ConfigurationError(f"--limit must be at least 1, got {options['limit']}")
        graph = build_graph(load_profile(options["profile"]))
        event = event_index(graph.events, config.event)
        return emit_top(graph, options["limit"], options["kind"], event)
