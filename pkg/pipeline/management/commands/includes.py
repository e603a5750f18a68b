from anatomy.exceptions import ConfigurationError
from emitters.documents import emit_json
from emitters.dot import emit_dot
from emitters.text import render_graph, render_includes
from includes.analysis import aggregate_dirs, find_cycles
from includes.scanner import DEFAULT_EXTENSIONS, scan_includes

from ..base import AnalysisCommand


class Command(AnalysisCommand):
    help = "Build the #include graph of a C/C++ source tree, per file or per directory."

    formats = ("text", "json", "dot")

    def add_command_arguments(self, parser):
        parser.add_argument("root", help="Directory to scan.")
        parser.add_argument(
            "--ext",
            action="append",
            help=f"File extension to scan; repeatable (default: {' '.join(DEFAULT_EXTENSIONS)}).",
        )
        parser.add_argument(
            "--include-dir",
            action="append",
            default=[],
            help="Directory searched for includes, relative to the root; repeatable.",
        )
        parser.add_argument("--depth", type=int, help="Group files by this many directory levels.")
        parser.add_argument(
            "--include-frontier",
            action="store_true",
            help="Keep unresolved headers as one node of the directory graph.",
        )
        parser.add_argument("--cycles", action="store_true", help="Report include cycles.")
        parser.add_argument("--workers", type=int, help="Reader threads.")

    def run(self, config, **options):
        if options["depth"] is not None and options["depth"] < 1:
            raise ConfigurationError(f"--depth must be at least 1, got {options['depth']}")
        extensions = tuple(
            extension if extension.startswith(".") else f".{extension}"
            for extension in (options["ext"] or DEFAULT_EXTENSIONS)
        )
        graph = scan_includes(
            options["root"],
            extensions=extensions,
            include_dirs=options["include_dir"],
            workers=config.workers,
        )
        for issue in graph.issues:
            self.warn(f"{issue.path}: {issue.message}")

        cycles = find_cycles(graph) if options["cycles"] else None
        if cycles and (config.output_format != "text" or options["depth"] is not None):
            for cycle in cycles:
                self.warn(f"cycle: {' -> '.join(cycle + cycle[:1])}")

        if options["depth"] is not None:
            view = aggregate_dirs(graph, options["depth"], options["include_frontier"])
            if config.output_format == "text":
                return render_graph(view)
        else:
            view = graph
            if config.output_format == "text":
                return render_includes(graph, cycles)
        if config.output_format == "json":
            return emit_json(view)
        return emit_dot(view, config.dot_options(0))
