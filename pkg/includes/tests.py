import random
import tempfile
from pathlib import Path
from unittest import mock

import yaml
from django.test import SimpleTestCase

from .analysis import ROOT_GROUP, UNRESOLVED_GROUP, aggregate_dirs, directory_group, find_cycles
from .exceptions import ScanRootError
from .scanner import ANGLED, QUOTED, IncludeEdge, IncludeGraph, parse_includes, scan_includes, strip_comments

TESTDATA = Path(__file__).resolve().parent / "testdata"
ENGINE = TESTDATA / "engine"


def load_manifest():
    with (TESTDATA / "engine_manifest.yaml").open(encoding="utf-8") as stream:
        return yaml.safe_load(stream)


def graph_from_edges(edges, extra_files=()):
    files = sorted({path for edge in edges for path in edge} | set(extra_files))
    return IncludeGraph(
        scan_root="tree",
        nodes=tuple(files),
        edges=tuple(IncludeEdge(includer, included, QUOTED, included) for includer, included in edges),
    )


def mutually_reachable(files, successors):
    """Groups of two or more files that all reach each other."""
    reach = {}
    for path in files:
        seen = set()
        frontier = [path]
        while frontier:
            for following in successors[frontier.pop()]:
                if following not in seen:
                    seen.add(following)
                    frontier.append(following)
        reach[path] = seen
    groups = {frozenset(other for other in files if other in reach[path] and path in reach[other]) for path in files}
    return [group for group in groups if len(group) > 1]


class TreeTestCase(SimpleTestCase):
    def make_tree(self, files):
        directory = tempfile.TemporaryDirectory()
        self.addCleanup(directory.cleanup)
        root = Path(directory.name)
        for name, text in files.items():
            path = root / name
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text, encoding="utf-8")
        return root


class StripCommentsTests(SimpleTestCase):
    def test_line_and_block_comments(self):
        text = 'int a; // one\n/* two\nthree */ int b;\n"x" /* four */ y\n'

        self.assertEqual(strip_comments(text), "int a; \n\n int b;\n\"x\"  y\n")

    def test_unterminated_block_keeps_line_count(self):
        self.assertEqual(strip_comments("a\n/* b\nc\nd"), "a\n\n\n")

    def test_include_line_numbers_survive(self):
        text = '/*\n * header\n */\n#include "a.h" // why\n#include <b.h>\n'

        self.assertEqual(parse_includes(text), [(4, QUOTED, "a.h"), (5, ANGLED, "b.h")])

    def test_commented_include_is_ignored(self):
        self.assertEqual(parse_includes('// #include "x.h"\n'), [])
        self.assertEqual(parse_includes('/* #include "x.h" */\n'), [])

    def test_spacing_variants(self):
        text = '  #  include "a.h"\n#include<b.h>\n\t#\tinclude\t"c.h"\n#included "d.h"\n#import "e.h"\n'

        names = [name for _, _, name in parse_includes(text)]

        self.assertEqual(names, ["a.h", "b.h", "c.h"])

    def test_mismatched_delimiters_are_not_includes(self):
        text = '#include <foo.h"\n#include "bar.h>\n#include <ok.h>\n#include "fine.h"\n'

        self.assertEqual(parse_includes(text), [(3, ANGLED, "ok.h"), (4, QUOTED, "fine.h")])


class ScanIncludesTests(TreeTestCase):
    def test_engine_fixture_matches_manifest(self):
        manifest = load_manifest()

        graph = scan_includes(ENGINE, include_dirs=["."])

        self.assertEqual(list(graph.nodes), manifest["files"])
        self.assertEqual(
            [(edge.includer, edge.name, edge.kind, edge.resolved) for edge in graph.edges],
            [(edge["includer"], edge["name"], edge["kind"], edge["resolved"]) for edge in manifest["edges"]],
        )
        self.assertEqual(graph.frontier(), manifest["frontier"])
        self.assertEqual(len(graph.resolved_edges()), 11)
        self.assertEqual(graph.issues, ())

    def test_resolved_endpoints_are_nodes(self):
        graph = scan_includes(ENGINE, include_dirs=["."])

        for edge in graph.resolved_edges():
            self.assertIn(edge.includer, graph.nodes)
            self.assertIn(edge.resolved, graph.nodes)
        self.assertEqual(len({(edge.includer, edge.target) for edge in graph.edges}), len(graph.edges))

    def test_unresolved_names_are_not_under_include_dirs(self):
        graph = scan_includes(ENGINE, include_dirs=["."])

        for name in graph.frontier():
            self.assertFalse((ENGINE / name).exists(), name)

    def test_scanning_is_idempotent_and_thread_independent(self):
        first = scan_includes(ENGINE, include_dirs=["."], workers=1)
        second = scan_includes(ENGINE, include_dirs=["."], workers=8)

        self.assertEqual(first, second)

    def test_angled_includes_need_include_dirs(self):
        graph = scan_includes(ENGINE)

        edge = next(edge for edge in graph.edges if edge.includer == "servers/visual_server.h")
        self.assertIsNone(edge.resolved)
        self.assertIn("core/object.h", graph.frontier())

    def test_absolute_include_dir(self):
        graph = scan_includes(ENGINE, include_dirs=[str(ENGINE.resolve())])

        self.assertEqual(len(graph.resolved_edges()), 11)

    def test_empty_directory(self):
        graph = scan_includes(self.make_tree({}))

        self.assertEqual(graph.nodes, ())
        self.assertEqual(graph.edges, ())

    def test_comment_only_file(self):
        graph = scan_includes(self.make_tree({"a.cpp": '// #include "x.h"\n'}))

        self.assertEqual(graph.nodes, ("a.cpp",))
        self.assertEqual(graph.edges, ())

    def test_extension_filter(self):
        root = self.make_tree({"a.h": "", "notes.txt": '#include "a.h"\n', "b.ipp": '#include "a.h"\n'})

        self.assertEqual(scan_includes(root).nodes, ("a.h",))
        self.assertEqual(scan_includes(root, extensions=[".ipp", ".h"]).nodes, ("a.h", "b.ipp"))

    def test_repeated_include_counts_once(self):
        root = self.make_tree({"a.h": "", "b.cpp": '#include "a.h"\n#include "a.h"\n'})

        self.assertEqual(len(scan_includes(root).edges), 1)

    def test_unreadable_file_is_reported(self):
        root = self.make_tree({"a.h": "", "b.cpp": '#include "a.h"\n'})
        original = Path.read_text

        def read_text(path, *args, **kwargs):
            if path.name == "b.cpp":
                raise PermissionError("permission denied")
            return original(path, *args, **kwargs)

        with mock.patch.object(Path, "read_text", read_text), self.assertLogs("includes.scanner", "WARNING"):
            graph = scan_includes(root)

        self.assertEqual(graph.nodes, ("a.h", "b.cpp"))
        self.assertEqual(graph.edges, ())
        self.assertEqual([issue.path for issue in graph.issues], ["b.cpp"])

    def test_missing_root(self):
        with self.assertRaises(ScanRootError) as raised:
            scan_includes("/nonexistent/engine")
        self.assertEqual(raised.exception.exit_code, 2)


class AggregateDirsTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.graph = scan_includes(ENGINE, include_dirs=["."])

    def test_engine_fixture_matches_manifest(self):
        expected = load_manifest()["directories"]

        view = aggregate_dirs(self.graph, expected["depth"])

        self.assertEqual([node.label for node in view.nodes], expected["nodes"])
        self.assertEqual(
            {(edge.source, edge.target, edge.count) for edge in view.edges},
            {(edge["source"], edge["target"], edge["count"]) for edge in expected["edges"]},
        )
        self.assertEqual(view.level, "directory")
        self.assertTrue(all(node.self_cost == () for node in view.nodes))

    def test_edge_counts_are_conserved(self):
        for depth in (1, 2, 3):
            with self.subTest(depth=depth):
                view = aggregate_dirs(self.graph, depth)
                self.assertEqual(sum(edge.count for edge in view.edges), len(self.graph.resolved_edges()))

    def test_deep_grouping_is_per_directory(self):
        view = aggregate_dirs(self.graph, 10)

        self.assertEqual([node.label for node in view.nodes], ["core", "drivers/gles3", "main", "servers"])

    def test_direct_grouping(self):
        graph = graph_from_edges([("render/r.cpp", "core/a.h")], extra_files=["core/b.cpp"])

        view = aggregate_dirs(graph, 1)

        self.assertEqual([node.label for node in view.nodes], ["core", "render"])
        self.assertEqual([(edge.source, edge.target, edge.count) for edge in view.edges], [("render", "core", 1)])

    def test_frontier_node(self):
        view = aggregate_dirs(self.graph, 1, include_frontier=True)

        self.assertIn(UNRESOLVED_GROUP, view)
        into_frontier = {edge.source: edge.count for edge in view.edges if edge.target == UNRESOLVED_GROUP}
        self.assertEqual(into_frontier, {"core": 2, "drivers": 1})
        self.assertNotIn(UNRESOLVED_GROUP, aggregate_dirs(self.graph, 1))

    def test_top_level_files(self):
        self.assertEqual(directory_group("main.cpp", 1), ROOT_GROUP)
        self.assertEqual(directory_group("a/b/c.h", 1), "a")
        self.assertEqual(directory_group("a/b/c.h", 2), "a/b")

    def test_depth_must_be_positive(self):
        with self.assertRaises(ValueError):
            aggregate_dirs(self.graph, 0)


class FindCyclesTests(SimpleTestCase):
    def test_engine_fixture(self):
        graph = scan_includes(ENGINE, include_dirs=["."])

        self.assertEqual(find_cycles(graph), load_manifest()["cycles"])

    def test_mutual_include(self):
        graph = graph_from_edges([("b.h", "a.h"), ("a.h", "b.h")])

        self.assertEqual(find_cycles(graph), [["a.h", "b.h"]])

    def test_acyclic(self):
        graph = graph_from_edges([("a.h", "b.h"), ("b.h", "c.h"), ("a.h", "c.h")])

        self.assertEqual(find_cycles(graph), [])

    def test_shortest_cycle_through_smallest_file(self):
        graph = graph_from_edges([("a.h", "b.h"), ("b.h", "c.h"), ("c.h", "d.h"), ("d.h", "a.h"), ("b.h", "a.h")])

        self.assertEqual(find_cycles(graph), [["a.h", "b.h"]])

    def test_random_graphs(self):
        rng = random.Random(314)
        for _ in range(100):
            files = [f"f{index:02}.h" for index in range(rng.randint(1, 20))]
            edges = {(rng.choice(files), rng.choice(files)) for _ in range(rng.randint(0, 40))}
            edges = sorted(edge for edge in edges if edge[0] != edge[1])
            graph = graph_from_edges(edges, extra_files=files)
            successors = {path: set() for path in files}
            for includer, included in edges:
                successors[includer].add(included)

            cycles = find_cycles(graph)

            with self.subTest(edges=edges):
                for cycle in cycles:
                    self.assertGreaterEqual(len(cycle), 2)
                    self.assertEqual(cycle[0], min(cycle))
                    self.assertEqual(len(set(cycle)), len(cycle))
                    for current, following in zip(cycle, cycle[1:] + cycle[:1]):
                        self.assertIn(following, successors[current])
                groups = mutually_reachable(files, successors)
                self.assertEqual(sorted(cycle[0] for cycle in cycles), sorted(min(group) for group in groups))
                self.assertEqual([cycle[0] for cycle in cycles], sorted(cycle[0] for cycle in cycles))
                for cycle in cycles:
                    self.assertTrue(any(set(cycle) <= group for group in groups))
