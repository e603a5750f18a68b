import json
import shutil
import subprocess
import tempfile
from fractions import Fraction
from io import StringIO
from pathlib import Path
from unittest import mock, skipUnless

import yaml
from django.core.files.uploadedfile import SimpleUploadedFile
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, override_settings
from rest_framework.test import APIClient

from anatomy.exceptions import ConfigurationError
from callgraph.graph import build_graph, entry_points
from emitters.documents import load_json
from emitters.tests import node_by_label, parse_dot
from profiles.parser import load_profile
from symbols.aggregation import aggregate
from symbols.categories import categorize, default_ruleset

from .analysis import load_both
from .config import CliConfig, parse_fraction

ROOT = Path(__file__).resolve().parent.parent
PROFILES = ROOT / "profiles" / "testdata"
SCENARIOS = ROOT / "scenarios"
INCLUDES = ROOT / "includes" / "testdata"

GODOT = SCENARIOS / "godot-scenario.cg"
URHO = SCENARIOS / "urho3d-scenario.cg"
LAYERS = SCENARIOS / "godot-layers.yaml"

PROGRAM = """
#include <stdio.h>

static long square(long value) {
    return value * value;
}

static long sum_of_squares(int count) {
    long total = 0;
    for (int i = 0; i < count; i++) {
        total += square(i);
    }
    return total;
}

int main(void) {
    printf("%ld\\n", sum_of_squares(100));
    return 0;
}
"""


class CommandTestCase(SimpleTestCase):
    def run_command(self, *args, **options):
        """Run a command; returns (stdout, stderr)."""
        stdout, stderr = StringIO(), StringIO()
        call_command(*args, stdout=stdout, stderr=stderr, **options)
        return stdout.getvalue(), stderr.getvalue()

    def assertExitCode(self, code, *args, **options):
        with self.assertRaises(CommandError) as raised:
            self.run_command(*args, **options)
        self.assertEqual(raised.exception.returncode, code)
        return str(raised.exception)

    def write_file(self, name, text):
        directory = tempfile.TemporaryDirectory()
        self.addCleanup(directory.cleanup)
        path = Path(directory.name) / name
        path.write_text(text, encoding="utf-8")
        return path


class ParseFractionTests(SimpleTestCase):
    def test_exact_values(self):
        cases = {"0.1": Fraction(1, 10), "1/3": Fraction(1, 3), 0.25: Fraction(1, 4), 1: Fraction(1), " 0 ": Fraction(0)}
        for value, expected in cases.items():
            with self.subTest(value=value):
                self.assertEqual(parse_fraction(value, "threshold"), expected)

    def test_invalid_values(self):
        for value in ("1.5", "-0.1", "abc", "1/0", True):
            with self.subTest(value=value):
                with self.assertRaises(ConfigurationError) as raised:
                    parse_fraction(value, "threshold")
                self.assertEqual(raised.exception.exit_code, 3)

    def test_zero_can_be_refused(self):
        with self.assertRaises(ConfigurationError):
            parse_fraction("0", "fuzzy_threshold", allow_zero=False)


class CliConfigTests(CommandTestCase):
    def test_settings_defaults(self):
        config = CliConfig.from_options({})

        self.assertEqual(config.fuzzy_threshold, Fraction(1, 2))
        self.assertEqual(config.idle_threshold, Fraction(1, 100))
        self.assertEqual(config.dot.threshold, Fraction(1, 100))
        self.assertEqual(config.repeat_threshold, 10)
        self.assertEqual(config.output_format, "text")
        self.assertEqual(config.dot.color_map["class-registration"], "red")

    @override_settings(ANATOMY={"FUZZY_THRESHOLD": "0.6", "DOT_THRESHOLD": "0", "REPEAT_THRESHOLD": 3})
    def test_settings_layer(self):
        config = CliConfig.from_options({})

        self.assertEqual(config.fuzzy_threshold, Fraction(3, 5))
        self.assertEqual(config.dot.threshold, 0)
        self.assertEqual(config.repeat_threshold, 3)

    def test_file_then_flags(self):
        path = self.write_file("anatomy.yaml", "fuzzy_threshold: 0.75\nidle_threshold: 1/20\nformat: json\n")

        config = CliConfig.from_options({"config": str(path), "fuzzy_threshold": "1/4", "idle_threshold": None})

        self.assertEqual(config.fuzzy_threshold, Fraction(1, 4))
        self.assertEqual(config.idle_threshold, Fraction(1, 20))
        self.assertEqual(config.output_format, "json")

    def test_empty_file(self):
        path = self.write_file("anatomy.yaml", "")

        self.assertEqual(CliConfig.from_options({"config": str(path)}), CliConfig.from_options({}))

    def test_invalid_files(self):
        cases = {
            "unknown key": "colour: red\n",
            "bad level": "level: module\n",
            "not a mapping": "- 1\n- 2\n",
            "bad yaml": "threshold: [0.1\n",
            "out of range": "threshold: 2\n",
        }
        for case, text in cases.items():
            with self.subTest(case=case):
                path = self.write_file("anatomy.yaml", text)
                with self.assertRaises(ConfigurationError):
                    CliConfig.from_options({"config": str(path)})

    def test_missing_file(self):
        with self.assertRaises(ConfigurationError):
            CliConfig.from_options({"config": "/nonexistent/anatomy.yaml"})

    def test_negative_max_depth(self):
        with self.assertRaises(ConfigurationError) as raised:
            CliConfig.from_options({"max_depth": -1})
        self.assertEqual(raised.exception.exit_code, 3)


class InspectCommandTests(CommandTestCase):
    def test_minimal_fixture(self):
        out, _ = self.run_command("inspect", str(PROFILES / "minimal.cg"))

        lines = out.splitlines()
        self.assertIn("creator: hand-written", lines)
        self.assertIn("events: Ir", lines)
        self.assertEqual(lines[-1], "functions: 2, calls: 1, total Ir: 420")

    def test_empty_profile(self):
        out, _ = self.run_command("inspect", str(PROFILES / "empty.cg"))

        self.assertTrue(out.splitlines()[-1].startswith("functions: 0"))

    def test_json(self):
        out, _ = self.run_command("inspect", str(PROFILES / "minimal.cg"), format="json")

        self.assertEqual(load_json(out), load_profile(PROFILES / "minimal.cg"))

    def test_missing_file(self):
        message = self.assertExitCode(2, "inspect", "/nonexistent/callgrind.out.1")

        self.assertIn("/nonexistent/callgrind.out.1", message)

    def test_syntax_error(self):
        path = self.write_file("callgrind.out.1", "events: Ir\nfn=main\n3 abc\n")

        message = self.assertExitCode(2, "inspect", str(path))

        self.assertIn("line 3", message)

    def test_not_conserved_is_a_warning(self):
        path = self.write_file("callgrind.out.1", "events: Ir\nfn=main\n1 10\ntotals: 11\n")

        out, err = self.run_command("inspect", str(path))

        self.assertIn("do not add up", err)
        self.assertTrue(out.splitlines()[-1].startswith("functions: 1"))


class GraphCommandTests(CommandTestCase):
    def test_godot_classes_are_colored(self):
        out, _ = self.run_command("graph", str(GODOT), level="class", threshold="0")

        nodes, _ = parse_dot(out)
        self.assertEqual(node_by_label(nodes, "Main")["fillcolor"], "orange")
        self.assertEqual(node_by_label(nodes, "X11Window")["fillcolor"], "gray")
        self.assertEqual(node_by_label(nodes, "ClassDB")["fillcolor"], "red")
        self.assertEqual(node_by_label(nodes, "RasterizerGLES3")["fillcolor"], "blue")

    def test_function_level_keeps_every_function(self):
        out, _ = self.run_command("graph", str(GODOT), level="function", threshold="0")

        nodes, _ = parse_dot(out)
        self.assertEqual(len(nodes), len(load_profile(GODOT).functions))

    def test_json_matches_direct_build(self):
        profile = load_profile(GODOT)
        expected = {
            "call": build_graph(profile),
            "class": categorize(aggregate(build_graph(profile), "class"), default_ruleset()),
        }
        for level, graph in expected.items():
            with self.subTest(level=level):
                out, _ = self.run_command("graph", str(GODOT), level=level, format="json")
                self.assertEqual(load_json(out), graph)

    def test_category_level(self):
        out, _ = self.run_command("graph", str(GODOT), level="category", format="json")

        labels = [node["label"] for node in json.loads(out)["nodes"]]
        self.assertEqual(
            sorted(labels), ["class-registration", "graphics", "initialization", "uncategorized", "window-system"]
        )

    def test_output_is_deterministic(self):
        first, _ = self.run_command("graph", str(URHO))
        second, _ = self.run_command("graph", str(URHO))

        self.assertEqual(first, second)

    def test_max_depth(self):
        out, _ = self.run_command("graph", str(PROFILES / "acyclic.cg"), level="call", threshold="0", max_depth=1)

        nodes, _ = parse_dot(out)
        self.assertEqual(len(nodes), 3)

    def test_text(self):
        out, _ = self.run_command("graph", str(PROFILES / "minimal.cg"), level="call", format="text")

        self.assertEqual(out.splitlines()[1].split(), ["1", "420", "100.00%", "0", "main"])

    def test_invalid_threshold(self):
        self.assertExitCode(3, "graph", str(GODOT), threshold="1.5")

    def test_invalid_ruleset(self):
        path = self.write_file("rules.yaml", "rules: 5\n")

        self.assertExitCode(3, "graph", str(GODOT), ruleset=str(path))

    def test_unknown_event(self):
        self.assertExitCode(3, "graph", str(GODOT), event="Dr")

    def test_parse_error(self):
        path = self.write_file("callgrind.out.1", "events: Ir\ncalls=1 0\n")

        self.assertExitCode(2, "graph", str(path))


class TopCommandTests(CommandTestCase):
    def test_self_cost(self):
        out, _ = self.run_command("top", str(PROFILES / "minimal.cg"), limit=2)

        rows = [line.split() for line in out.splitlines()[1:]]
        self.assertEqual([row[-1] for row in rows], ["helper", "main"])

    def test_limit_must_be_positive(self):
        self.assertExitCode(3, "top", str(PROFILES / "minimal.cg"), limit=0)


class MatchCommandTests(CommandTestCase):
    def test_every_component_is_matched(self):
        out, _ = self.run_command("match", str(GODOT), reference=str(LAYERS), format="json")

        document = json.loads(out)
        results = {result["component"]: result for result in document["results"]}
        self.assertEqual(document["unmatched"], [])
        self.assertEqual(len(results), 9)
        self.assertEqual(
            (results["PhysicsServer"]["matched_label"], results["PhysicsServer"]["tier"]),
            ("Physics2DServer", "fuzzy"),
        )
        self.assertEqual(
            (results["DisplayServer"]["matched_label"], results["DisplayServer"]["tier"]),
            ("OS", "method-evidence"),
        )

    def test_text(self):
        out, _ = self.run_command("match", str(GODOT), reference=str(LAYERS))

        self.assertEqual(out.splitlines()[-1], "matched 9 of 9 components")

    def test_empty_reference(self):
        path = self.write_file("empty.yaml", "name: empty\ncomponents: []\n")

        out, _ = self.run_command("match", str(GODOT), reference=str(path), format="json")

        self.assertEqual(json.loads(out)["results"], [])

    def test_known_methods_only(self):
        path = self.write_file(
            "display.yaml",
            "name: display\ncomponents:\n  - name: DisplayServer\n    known_methods: [get_singleton, has_feature]\n",
        )

        out, _ = self.run_command("match", str(GODOT), reference=str(path), format="json")

        [result] = json.loads(out)["results"]
        self.assertEqual((result["matched_label"], result["tier"]), ("OS", "method-evidence"))

    def test_reference_from_config_file(self):
        config = self.write_file("anatomy.yaml", f"reference: {LAYERS}\nformat: json\n")

        out, _ = self.run_command("match", str(GODOT), config=str(config))

        self.assertEqual(json.loads(out)["reference"], "godot-layers")

    def test_missing_reference(self):
        self.assertExitCode(3, "match", str(GODOT))

    def test_malformed_reference(self):
        path = self.write_file("bad.yaml", "name: bad\ncomponents:\n  - layer: 1\n")

        self.assertExitCode(3, "match", str(GODOT), reference=str(path))


class CompareCommandTests(CommandTestCase):
    def compare(self, left=GODOT, right=URHO, **options):
        out, _ = self.run_command(
            "compare", str(left), str(right), left_name="godot", right_name="urho3d", format="json", **options
        )
        return json.loads(out)

    def test_godot_against_urho3d(self):
        document = self.compare()

        self.assertEqual(document["kind"], "comparison")
        self.assertEqual(document["order_inversions"], [["window-system", "graphics"]])
        self.assertIn("class-registration", document["common_categories"])
        self.assertEqual(document["only_left_categories"], [])
        self.assertIn("godot: ClassDB is called repeatedly (250 calls)", document["notes"])
        self.assertIn("godot: Main has 3 initialization methods (setup, setup2, start)", document["notes"])

    def test_self_comparison_is_empty(self):
        document = self.compare(GODOT, GODOT)

        self.assertEqual(document["only_left"], [])
        self.assertEqual(document["only_right"], [])
        self.assertEqual(document["order_inversions"], [])

    def test_names_default_to_file_names(self):
        out, _ = self.run_command("compare", str(GODOT), str(URHO), format="json")

        document = json.loads(out)
        self.assertEqual((document["left"], document["right"]), ("godot-scenario", "urho3d-scenario"))

    def test_text(self):
        out, _ = self.run_command("compare", str(GODOT), str(URHO), left_name="godot", right_name="urho3d")

        self.assertIn("  godot initializes window-system before graphics, urho3d the other way round", out.splitlines())

    def test_concurrent_loading_matches_sequential(self):
        concurrent = self.run_command("compare", str(GODOT), str(URHO), format="json")
        with override_settings(ANATOMY={"SCAN_WORKERS": 1}):
            sequential = self.run_command("compare", str(GODOT), str(URHO), format="json")

        self.assertEqual(concurrent, sequential)

    def test_missing_profile(self):
        self.assertExitCode(2, "compare", str(GODOT), "/nonexistent/callgrind.out.2")

    def test_idle_threshold_out_of_range(self):
        self.assertExitCode(3, "compare", str(GODOT), str(URHO), idle_threshold="2")


class LoadBothTests(SimpleTestCase):
    def test_results_keep_argument_order(self):
        self.assertEqual(load_both(str.upper, "left", "right"), ("LEFT", "RIGHT"))
        self.assertEqual(load_both(str.upper, "left", "right", workers=1), ("LEFT", "RIGHT"))

    def test_errors_are_raised(self):
        def loader(name):
            if name == "right":
                raise ConfigurationError("bad right")
            return name

        with self.assertRaises(ConfigurationError):
            load_both(loader, "left", "right")


class IncludesCommandTests(CommandTestCase):
    def setUp(self):
        with (INCLUDES / "engine_manifest.yaml").open(encoding="utf-8") as stream:
            self.manifest = yaml.safe_load(stream)

    def test_engine_tree(self):
        out, _ = self.run_command("includes", str(INCLUDES / "engine"), include_dir=["."], format="json")

        document = json.loads(out)
        self.assertEqual(document["nodes"], self.manifest["files"])
        self.assertEqual(
            [(edge["includer"], edge["name"], edge["kind"], edge["resolved"]) for edge in document["edges"]],
            [(edge["includer"], edge["name"], edge["kind"], edge["resolved"]) for edge in self.manifest["edges"]],
        )
        self.assertEqual(document["frontier"], self.manifest["frontier"])

    def test_directories(self):
        out, _ = self.run_command("includes", str(INCLUDES / "engine"), include_dir=["."], depth=1, format="json")

        document = json.loads(out)
        expected = self.manifest["directories"]
        self.assertEqual([node["label"] for node in document["nodes"]], expected["nodes"])
        self.assertEqual(
            sorted((edge["source"], edge["target"], edge["count"]) for edge in document["edges"]),
            sorted((edge["source"], edge["target"], edge["count"]) for edge in expected["edges"]),
        )

    def test_cycles(self):
        out, _ = self.run_command("includes", str(INCLUDES / "engine"), include_dir=["."], cycles=True)

        self.assertIn("cycles: 1", out.splitlines())
        self.assertIn("  core/class_db.h -> core/method_bind.h -> core/object.h -> core/class_db.h", out.splitlines())

    def test_cycles_go_to_stderr_with_json(self):
        out, err = self.run_command(
            "includes", str(INCLUDES / "engine"), include_dir=["."], cycles=True, format="json"
        )

        self.assertEqual(json.loads(out)["kind"], "includegraph")
        self.assertIn("cycle: core/class_db.h -> core/method_bind.h -> core/object.h -> core/class_db.h", err)

    def test_dot(self):
        out, _ = self.run_command("includes", str(INCLUDES / "engine"), include_dir=["."], format="dot")

        nodes, edges = parse_dot(out)
        self.assertEqual((len(nodes), len(edges)), (13, 14))

    def test_empty_directory(self):
        with tempfile.TemporaryDirectory() as root:
            out, _ = self.run_command("includes", root, format="json")

        document = json.loads(out)
        self.assertEqual((document["nodes"], document["edges"]), ([], []))

    def test_unreadable_file_is_a_diagnostic(self):
        original = Path.read_text

        def read_text(path, *args, **kwargs):
            if path.name == "object.cpp":
                raise PermissionError("permission denied")
            return original(path, *args, **kwargs)

        with mock.patch.object(Path, "read_text", read_text), self.assertLogs("includes.scanner", "WARNING"):
            out, err = self.run_command("includes", str(INCLUDES / "engine"), include_dir=["."], format="json")

        self.assertIn("core/object.cpp: permission denied", err)
        self.assertIn("core/object.cpp", json.loads(out)["nodes"])

    def test_extension_filter(self):
        out, _ = self.run_command("includes", str(INCLUDES / "engine"), ext=["cpp"], format="json")

        self.assertTrue(all(path.endswith(".cpp") for path in json.loads(out)["nodes"]))

    def test_missing_root(self):
        self.assertExitCode(2, "includes", "/nonexistent/tree")

    def test_invalid_depth(self):
        self.assertExitCode(3, "includes", str(INCLUDES / "engine"), depth=0)


class ProfileApiTests(SimpleTestCase):
    def setUp(self):
        self.client = APIClient()

    def upload(self, path, name=None):
        return SimpleUploadedFile(name or path.name, path.read_bytes())

    def test_inspect(self):
        response = self.client.post(
            "/api/profiles/inspect/", {"profile": self.upload(PROFILES / "minimal.cg")}, format="multipart"
        )

        self.assertEqual(response.status_code, 200)
        self.assertEqual(load_json(response.content.decode()), load_profile(PROFILES / "minimal.cg"))

    def test_parse_error(self):
        response = self.client.post(
            "/api/profiles/inspect/",
            {"profile": SimpleUploadedFile("broken.cg", b"events: Ir\nfn=main\n3 abc\n")},
            format="multipart",
        )

        self.assertEqual(response.status_code, 400)
        self.assertEqual(response.json()["exit_code"], 2)
        self.assertIn("line 3", response.json()["error"])

    def test_missing_upload(self):
        response = self.client.post("/api/profiles/inspect/", {}, format="multipart")

        self.assertEqual(response.status_code, 400)
        self.assertIn("profile", response.json())

    def test_graph(self):
        response = self.client.post(
            "/api/profiles/graph/", {"profile": self.upload(GODOT), "level": "class"}, format="multipart"
        )

        self.assertEqual(response.status_code, 200)
        expected = categorize(aggregate(build_graph(load_profile(GODOT)), "class"), default_ruleset())
        self.assertEqual(load_json(response.content.decode()), expected)

    def test_graph_dot(self):
        response = self.client.post(
            "/api/profiles/graph/",
            {"profile": self.upload(PROFILES / "minimal.cg"), "level": "call", "output": "dot", "threshold": "0"},
            format="multipart",
        )

        self.assertEqual(response.status_code, 200)
        self.assertEqual(response["Content-Type"], "text/vnd.graphviz")
        nodes, edges = parse_dot(response.content.decode())
        self.assertEqual((len(nodes), len(edges)), (2, 1))

    def test_graph_invalid_threshold(self):
        response = self.client.post(
            "/api/profiles/graph/",
            {"profile": self.upload(PROFILES / "minimal.cg"), "threshold": "3"},
            format="multipart",
        )

        self.assertEqual(response.status_code, 400)
        self.assertEqual(response.json()["exit_code"], 3)

    def test_compare(self):
        response = self.client.post(
            "/api/profiles/compare/",
            {"left": self.upload(GODOT, "godot.cg"), "right": self.upload(URHO, "urho3d.cg")},
            format="multipart",
        )

        self.assertEqual(response.status_code, 200)
        document = response.json()
        self.assertEqual((document["left"], document["right"]), ("godot", "urho3d"))
        self.assertEqual(document["order_inversions"], [["window-system", "graphics"]])

    def test_schema(self):
        response = self.client.get("/swagger.json/")

        self.assertEqual(response.status_code, 200)
        self.assertIn("/api/profiles/compare/", response.json()["paths"])


@skipUnless(shutil.which("valgrind") and shutil.which("cc"), "needs valgrind and a C compiler")
class CallgrindIntegrationTests(SimpleTestCase):
    def test_profile_of_a_real_program(self):
        with tempfile.TemporaryDirectory() as directory:
            directory = Path(directory)
            (directory / "program.c").write_text(PROGRAM, encoding="utf-8")
            subprocess.run(
                ["cc", "-g", "-O0", "-o", str(directory / "program"), str(directory / "program.c")], check=True
            )
            output = directory / "callgrind.out"
            subprocess.run(
                ["valgrind", "--tool=callgrind", f"--callgrind-out-file={output}", str(directory / "program")],
                check=True,
                capture_output=True,
            )
            profile = load_profile(output)

        graph = build_graph(profile)
        self.assertTrue(profile.is_conserved())
        reachable = set()
        pending = [entry_points(graph)[0]]
        while pending:
            key = pending.pop()
            if key not in reachable:
                reachable.add(key)
                pending.extend(graph.successors(key))
        self.assertIn("main", {key.name for key in reachable})
        self.assertIn("square", {node.key.name for node in graph.nodes.values()})
