import json
import random
import re
from fractions import Fraction
from pathlib import Path

from django.test import SimpleTestCase

from callgraph.graph import build_graph
from comparison.matching import MatchReport, match_reference
from comparison.reference import load_reference
from comparison.report import compare
from includes.scanner import scan_includes
from profiles.parser import load_profile
from profiles.profile import CallRecord, EventSpec, FunctionKey, FunctionRecord, Profile
from symbols.aggregation import aggregate
from symbols.categories import categorize, default_ruleset

from .documents import emit_json, load_json, to_document
from .dot import DotOptions, emit_dot
from .exceptions import DocumentError, InvalidDotOptionsError
from .text import emit_top, render_comparison, render_includes, render_inspect, render_matches

ROOT = Path(__file__).resolve().parent.parent
PROFILES = ROOT / "profiles" / "testdata"
SCENARIOS = ROOT / "scenarios"
ENGINE = ROOT / "includes" / "testdata" / "engine"

_DOT_TOKEN_RE = re.compile(
    r'(?P<arrow>->)|(?P<punct>[{}\[\]=,;])|(?P<id>[A-Za-z_][A-Za-z0-9_]*|-?(?:\.\d+|\d+(?:\.\d*)?))'
    r'|(?P<string>"(?:[^"\\]|\\.)*")',
    re.DOTALL,
)


def _unescape(text):
    if not text.startswith('"'):
        return text
    return re.sub(r"\\(.)", lambda match: {"n": "\n", "t": "\t"}.get(match.group(1), match.group(1)), text[1:-1])


def parse_dot(text):
    """
    Minimal validator for the DOT subset the emitter writes.

    Accepts ``digraph ID { stmt* }`` with attribute, node and edge
    statements, each ending in ";". Returns ``(nodes, edges)``: node id to
    attributes, and ``(source, target, attributes)`` triples. Raises
    AssertionError on anything else.
    """
    tokens = []
    position = 0
    while True:
        while position < len(text) and text[position].isspace():
            position += 1
        if position == len(text):
            break
        match = _DOT_TOKEN_RE.match(text, position)
        if match is None:
            raise AssertionError(f"bad DOT token at {position}: {text[position:position + 20]!r}")
        tokens.append((match.lastgroup, match.group()))
        position = match.end()

    index = 0

    def peek():
        return tokens[index] if index < len(tokens) else (None, None)

    def take(kind=None, value=None):
        nonlocal index
        token = peek()
        if token[0] is None or (kind and token[0] not in kind) or (value and token[1] != value):
            raise AssertionError(f"expected {value or kind}, got {token[1]!r}")
        index += 1
        return token[1]

    def ident():
        return _unescape(take(("id", "string")))

    def attributes():
        attrs = {}
        if peek()[1] != "[":
            return attrs
        take("punct", "[")
        while peek()[1] != "]":
            name = ident()
            take("punct", "=")
            attrs[name] = ident()
            if peek()[1] == ",":
                take("punct", ",")
        take("punct", "]")
        return attrs

    nodes, edges = {}, []
    take("id", "digraph")
    ident()
    take("punct", "{")
    while peek()[1] != "}":
        if peek()[0] == "id" and peek()[1] in ("graph", "node", "edge"):
            take("id")
            if peek()[1] != "[":
                raise AssertionError("attribute statement without attributes")
            attributes()
        else:
            source = ident()
            if peek()[0] == "arrow":
                take("arrow")
                target = ident()
                edges.append((source, target, attributes()))
            else:
                nodes[source] = attributes()
        take("punct", ";")
    take("punct", "}")
    if index != len(tokens):
        raise AssertionError("trailing tokens after the graph")
    return nodes, edges


def random_profile(rng, size):
    keys = [FunctionKey("", "", f"f{index}") for index in range(size)]
    functions = {}
    for index, key in enumerate(keys):
        calls = tuple(
            CallRecord(rng.choice(keys), rng.randint(1, 5), (rng.randint(0, 500),)) for _ in range(rng.randint(0, 3))
        )
        functions[key] = FunctionRecord((rng.randint(0, 500),), calls, index)
    return Profile({}, EventSpec(("Ir",)), functions)


def godot_class_graph():
    graph = build_graph(load_profile(SCENARIOS / "godot-scenario.cg"))
    return categorize(aggregate(graph, "class"), default_ruleset())


def node_by_label(nodes, label):
    return next(attrs for attrs in nodes.values() if attrs["label"].split("\n")[0] == label)


class EmitDotTests(SimpleTestCase):
    def test_minimal_fixture(self):
        graph = build_graph(load_profile(PROFILES / "minimal.cg"))

        nodes, edges = parse_dot(emit_dot(graph, DotOptions(threshold=Fraction(0))))

        self.assertEqual(len(nodes), 2)
        self.assertEqual([attrs["label"] for _, _, attrs in edges], ["1×"])
        self.assertEqual(nodes["n0"]["label"], "main\n100.00%\n(4.76%)\n0×")
        self.assertEqual(nodes["n1"]["label"], "helper\n95.24%\n(95.24%)\n1×")
        self.assertEqual(nodes["n0"]["fillcolor"], "white")

    def test_full_threshold_keeps_the_entry_chain(self):
        graph = build_graph(load_profile(PROFILES / "acyclic.cg"))

        nodes, edges = parse_dot(emit_dot(graph, DotOptions(threshold=Fraction(1))))

        self.assertEqual([attrs["label"].split("\n")[0] for attrs in nodes.values()], ["main"])
        self.assertEqual(edges, [])

    def test_max_depth(self):
        graph = build_graph(load_profile(PROFILES / "acyclic.cg"))

        for depth, expected in ((0, 1), (1, 3), (2, 5)):
            with self.subTest(depth=depth):
                nodes, _ = parse_dot(emit_dot(graph, DotOptions(threshold=Fraction(0), max_depth=depth)))
                self.assertEqual(len(nodes), expected)

    def test_category_colours(self):
        nodes, _ = parse_dot(emit_dot(godot_class_graph(), DotOptions(threshold=Fraction(0))))

        expected = {
            "ClassDB": "red",
            "Main": "orange",
            "OS": "orange",
            "RasterizerGLES3": "blue",
            "ProceduralSky": "blue",
            "X11Window": "gray",
            "MessageQueue": "white",
        }
        for label, colour in expected.items():
            with self.subTest(label=label):
                self.assertEqual(node_by_label(nodes, label)["fillcolor"], colour)
        self.assertTrue(node_by_label(nodes, "ClassDB")["label"].endswith("\n250×"))

    def test_custom_colour_map(self):
        options = DotOptions(threshold=Fraction(0), color_map={"graphics": "#00ff00"})

        nodes, _ = parse_dot(emit_dot(godot_class_graph(), options))

        self.assertEqual(node_by_label(nodes, "Theme")["fillcolor"], "#00ff00")
        self.assertEqual(node_by_label(nodes, "ClassDB")["fillcolor"], "white")

    def test_threshold_never_adds_nodes(self):
        rng = random.Random(20240612)
        thresholds = [Fraction(0), Fraction(1, 100), Fraction(1, 20), Fraction(1, 5), Fraction(1, 2), Fraction(1)]
        for _ in range(200):
            graph = build_graph(random_profile(rng, rng.randint(1, 12)))
            emitted = [set(parse_dot(emit_dot(graph, DotOptions(threshold=t)))[0]) for t in thresholds]
            with self.subTest(graph=graph.edges):
                for looser, stricter in zip(emitted, emitted[1:]):
                    self.assertLessEqual(stricter, looser)

    def test_awkward_names_stay_valid(self):
        profile = Profile(
            {},
            EventSpec(("Ir",)),
            {
                FunctionKey("", "", 'say "hi"\\now'): FunctionRecord((1,), (), 0),
                FunctionKey("", "", "node"): FunctionRecord((1,), (), 1),
            },
        )

        nodes, _ = parse_dot(emit_dot(build_graph(profile), DotOptions(threshold=Fraction(0))))

        self.assertEqual(nodes["n0"]["label"].split("\n")[0], 'say "hi"\\now')

    def test_include_graph(self):
        graph = scan_includes(ENGINE, include_dirs=["."])

        nodes, edges = parse_dot(emit_dot(graph))

        self.assertEqual(len(nodes), 13)
        self.assertEqual(len(edges), 14)
        dashed = sorted(
            attrs["label"].split("\n")[0] for attrs in nodes.values() if "dashed" in attrs.get("style", "")
        )
        self.assertEqual(dashed, ["GL/gl.h", "stdint.h", "string.h"])

    def test_output_is_deterministic(self):
        graph = godot_class_graph()

        self.assertEqual(emit_dot(graph), emit_dot(godot_class_graph()))

    def test_invalid_options(self):
        for kwargs in ({"threshold": Fraction(3, 2)}, {"threshold": -1}, {"max_depth": -1}):
            with self.subTest(**kwargs):
                with self.assertRaises(InvalidDotOptionsError) as raised:
                    DotOptions(**kwargs)
                self.assertEqual(raised.exception.exit_code, 3)

    def test_event_out_of_range(self):
        graph = build_graph(load_profile(PROFILES / "minimal.cg"))

        with self.assertRaises(InvalidDotOptionsError):
            emit_dot(graph, DotOptions(event_index=1))


class EmitJsonTests(SimpleTestCase):
    def test_empty_profile(self):
        document = json.loads(emit_json(Profile()))

        self.assertEqual(document["schema_version"], "1")
        self.assertEqual(document["kind"], "profile")
        self.assertEqual(document["events"], [])
        self.assertEqual(document["functions"], [])
        self.assertIsNone(document["summary"])

    def test_minimal_graph_costs(self):
        graph = build_graph(load_profile(PROFILES / "minimal.cg"))

        document = json.loads(emit_json(graph))

        self.assertEqual(list(document)[:2], ["schema_version", "kind"])
        self.assertEqual(
            [(node["key"]["name"], node["self_cost"], node["inclusive_cost"]) for node in document["nodes"]],
            [("main", [20], [420]), ("helper", [400], [400])],
        )
        self.assertEqual(document["edges"][0]["count"], 1)
        self.assertEqual(document["total"], [420])

    def test_round_trips(self):
        godot = godot_class_graph()
        urho = categorize(
            aggregate(build_graph(load_profile(SCENARIOS / "urho3d-scenario.cg")), "class"), default_ruleset()
        )
        layers = load_reference(SCENARIOS / "godot-layers.yaml")
        values = {
            "profile": load_profile(PROFILES / "compressed.cg"),
            "callgraph": build_graph(load_profile(PROFILES / "cycle.cg")),
            "abstractgraph": godot,
            "comparison": compare(godot, urho),
            "includegraph": scan_includes(ENGINE, include_dirs=["."]),
            "matches": MatchReport(layers.name, tuple(match_reference(godot, layers))),
        }
        for kind, value in values.items():
            with self.subTest(kind=kind):
                text = emit_json(value)
                self.assertEqual(json.loads(text)["kind"], kind)
                loaded = load_json(text)
                self.assertEqual(loaded, value)
                self.assertEqual(emit_json(loaded), text)

    def test_identical_comparison_has_no_exclusive_nodes(self):
        graph = godot_class_graph()

        document = to_document(compare(graph, graph))

        self.assertEqual(document["only_left"], [])
        self.assertEqual(document["only_right"], [])
        self.assertEqual(document["order_inversions"], [])

    def test_comparison_scores_are_exact(self):
        layers = load_reference(SCENARIOS / "godot-layers.yaml")
        report = MatchReport(layers.name, tuple(match_reference(godot_class_graph(), layers)))

        results = {result["component"]: result for result in to_document(report)["results"]}

        self.assertEqual(results["PhysicsServer"]["score"], "2/3")
        self.assertEqual(results["OS"]["score"], "1")
        self.assertEqual(to_document(report)["unmatched"], [])

    def test_undecodable_names_survive(self):
        key = FunctionKey("/bin/app", "src/\udcffmain.c", "caf\udce9")
        profile = Profile({"cmd": "app"}, EventSpec(("Ir",)), {key: FunctionRecord((3,), (), 0)}, (3,))

        text = emit_json(profile)

        self.assertTrue(text.isascii())
        self.assertEqual(load_json(text), profile)

    def test_invalid_documents(self):
        valid = json.loads(emit_json(build_graph(load_profile(PROFILES / "minimal.cg"))))
        negative = json.loads(json.dumps(valid))
        negative["nodes"][0]["self_cost"] = [-1]
        cases = {
            "not json": "{",
            "not an object": "[]",
            "unknown kind": json.dumps({**valid, "kind": "flamegraph"}),
            "wrong version": json.dumps({**valid, "schema_version": "2"}),
            "missing field": json.dumps({key: value for key, value in valid.items() if key != "edges"}),
            "negative cost": json.dumps(negative),
        }
        for case, text in cases.items():
            with self.subTest(case=case):
                with self.assertRaises(DocumentError) as raised:
                    load_json(text)
                self.assertEqual(raised.exception.exit_code, 2)


class EmitTopTests(SimpleTestCase):
    def setUp(self):
        self.graph = build_graph(load_profile(PROFILES / "minimal.cg"))

    def rows(self, table):
        return [line.split() for line in table.splitlines()[1:]]

    def test_self_cost(self):
        rows = self.rows(emit_top(self.graph, 2, "self"))

        self.assertEqual(rows, [["1", "400", "95.24%", "1", "helper"], ["2", "20", "4.76%", "0", "main"]])

    def test_inclusive_cost(self):
        rows = self.rows(emit_top(self.graph, 1, "inclusive"))

        self.assertEqual(rows, [["1", "420", "100.00%", "0", "main"]])

    def test_n_larger_than_graph(self):
        self.assertEqual(len(self.rows(emit_top(self.graph, 50))), 2)

    def test_ties_keep_record_order(self):
        profile = Profile(
            {},
            EventSpec(("Ir",)),
            {FunctionKey("", "", name): FunctionRecord((5,), (), index) for index, name in enumerate("cab")},
        )

        rows = self.rows(emit_top(build_graph(profile), 3))

        self.assertEqual([row[-1] for row in rows], ["c", "a", "b"])

    def test_invalid_arguments(self):
        with self.assertRaises(ValueError):
            emit_top(self.graph, 0)
        with self.assertRaises(ValueError):
            emit_top(self.graph, 1, "total")


class RenderTextTests(SimpleTestCase):
    def test_inspect(self):
        profile = load_profile(PROFILES / "minimal.cg")

        text = render_inspect(profile, build_graph(profile))

        self.assertIn("creator: hand-written", text.splitlines())
        self.assertEqual(text.splitlines()[-1], "functions: 2, calls: 1, total Ir: 420")

    def test_inspect_empty(self):
        profile = load_profile(PROFILES / "empty.cg")

        text = render_inspect(profile, build_graph(profile))

        self.assertTrue(text.splitlines()[-1].startswith("functions: 0"))

    def test_matches(self):
        layers = load_reference(SCENARIOS / "godot-layers.yaml")
        report = MatchReport(layers.name, tuple(match_reference(godot_class_graph(), layers)))

        text = render_matches(report)

        self.assertIn("  PhysicsServer -> Physics2DServer [fuzzy 2/3] (physics, server)", text.splitlines())
        self.assertEqual(text.splitlines()[-1], "matched 9 of 9 components")

    def test_comparison(self):
        godot = godot_class_graph()
        urho = categorize(
            aggregate(build_graph(load_profile(SCENARIOS / "urho3d-scenario.cg")), "class"), default_ruleset()
        )

        text = render_comparison(compare(godot, urho, left_name="godot", right_name="urho3d"))

        self.assertIn(
            "  godot initializes window-system before graphics, urho3d the other way round", text.splitlines()
        )

    def test_includes(self):
        graph = scan_includes(ENGINE, include_dirs=["."])

        text = render_includes(graph, cycles=[["core/class_db.h", "core/method_bind.h", "core/object.h"]])

        self.assertIn("unresolved: GL/gl.h, stdint.h, string.h", text.splitlines())
        self.assertIn(
            "  core/class_db.h -> core/method_bind.h -> core/object.h -> core/class_db.h", text.splitlines()
        )
