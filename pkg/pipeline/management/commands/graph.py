from callgraph.graph import CallGraph
from emitters.documents import emit_json
from emitters.dot import emit_dot
from emitters.text import emit_top, render_graph
from profiles.parser import load_profile

from ...analysis import event_index, graph_view, ruleset_for
from ...config import CALL_LEVEL, GRAPH_LEVELS
from ..base import AnalysisCommand


class Command(AnalysisCommand):
    help = (
        "Render the call graph of a Callgrind profile, or an aggregated view of it "
        "(function, class, file or category level) colored by category."
    )

    formats = ("dot", "json", "text")
    default_format = "dot"

    def add_command_arguments(self, parser):
        parser.add_argument("profile", help="Callgrind output file.")
        parser.add_argument("--level", choices=GRAPH_LEVELS, help="Granularity (default: class).")
        parser.add_argument("--ruleset", help="YAML category ruleset (default: the shipped one).")
        parser.add_argument("--threshold", help="Minimum inclusive share of a node, e.g. 0.01 or 1/100.")
        parser.add_argument("--max-depth", type=int, help="Maximum distance from the entry point.")
        parser.add_argument("--event", help="Event the shares are computed on (default: the first one).")

    def run(self, config, **options):
        profile = load_profile(options["profile"])
        ruleset = None if config.level == CALL_LEVEL else ruleset_for(config)
        graph = graph_view(profile, config.level, ruleset)
        event = event_index(graph.events, config.event)

        if config.output_format == "json":
            return emit_json(graph)
        if config.output_format == "text":
            if isinstance(graph, CallGraph):
                return emit_top(graph, max(1, len(graph.nodes)), "inclusive", event)
            return render_graph(graph, event)
        return emit_dot(graph, config.dot_options(event))
