import random
import tempfile
from dataclasses import replace
from fractions import Fraction
from pathlib import Path

from django.test import SimpleTestCase

from callgraph.graph import build_graph
from profiles.parser import load_profile
from profiles.profile import CallRecord, EventSpec, FunctionKey, FunctionRecord, Profile
from symbols.aggregation import FREE_FUNCTIONS, UNCATEGORIZED, aggregate
from symbols.categories import categorize, default_ruleset

from .exceptions import ReferenceFileError, UnknownEntryError
from .matching import EXACT, FUZZY, METHOD_EVIDENCE, UNMATCHED, match_pairs, match_reference
from .reference import ReferenceArchitecture, ReferenceComponent, load_reference
from .report import compare
from .sequences import ORDER_NOTE, InitSequence, InitStep, diff_order, extract_init_sequence

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def scaled(profile, factor):
    functions = {
        key: replace(
            record,
            self_cost=tuple(cost * factor for cost in record.self_cost),
            calls=tuple(
                replace(call, inclusive_cost=tuple(cost * factor for cost in call.inclusive_cost))
                for call in record.calls
            ),
        )
        for key, record in profile.functions.items()
    }
    summary = None if profile.summary is None else tuple(cost * factor for cost in profile.summary)
    return replace(profile, functions=functions, summary=summary)


def categorized(profile):
    return categorize(aggregate(build_graph(profile), "class"), default_ruleset())


def class_view(*names):
    functions = {FunctionKey("", "", name): FunctionRecord((1,), (), index) for index, name in enumerate(names)}
    return categorized(Profile({}, EventSpec(("Ir",)), functions))


def sequence_of(*categories):
    return InitSequence(
        tuple(InitStep(f"n{position}", category, position, position) for position, category in enumerate(categories))
    )


class ScenarioTestCase(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.godot_profile = load_profile(SCENARIOS / "godot-scenario.cg")
        cls.urho_profile = load_profile(SCENARIOS / "urho3d-scenario.cg")
        cls.godot = categorized(cls.godot_profile)
        cls.urho = categorized(cls.urho_profile)
        cls.layers = load_reference(SCENARIOS / "godot-layers.yaml")


class MatchReferenceTests(ScenarioTestCase):
    def test_godot_layers(self):
        results = {result.component: result for result in match_reference(self.godot, self.layers)}

        expected = {
            "OS": ("OS", EXACT, Fraction(1)),
            "DisplayServer": ("OS", METHOD_EVIDENCE, Fraction(1)),
            "Window": ("X11Window", FUZZY, Fraction(1, 2)),
            "Rasterizer": ("RasterizerGLES3", FUZZY, Fraction(1, 2)),
            "RenderingServer": ("VisualServerRaster", FUZZY, Fraction(2, 3)),
            "PhysicsServer": ("Physics2DServer", FUZZY, Fraction(2, 3)),
            "AudioServer": ("AudioServer", EXACT, Fraction(1)),
            "SceneTree": ("SceneTree", EXACT, Fraction(1)),
            "Main": ("Main", EXACT, Fraction(1)),
        }
        for component, (label, tier, score) in expected.items():
            with self.subTest(component=component):
                result = results[component]
                self.assertEqual((result.matched_label, result.tier, result.score), (label, tier, score))
        self.assertEqual(results["DisplayServer"].evidence, ("get_singleton", "has_feature"))

    def test_results_follow_reference_order(self):
        results = match_reference(self.godot, self.layers)

        self.assertEqual([result.component for result in results], [c.name for c in self.layers.components])

    def test_empty_reference(self):
        self.assertEqual(match_reference(self.godot, ReferenceArchitecture("empty")), [])

    def test_unmatched_component(self):
        reference = ReferenceArchitecture("nav", (ReferenceComponent("NavigationMesh"),))

        (result,) = match_reference(self.godot, reference)

        self.assertFalse(result.matched)
        self.assertEqual(result.tier, UNMATCHED)

    def test_single_known_method_is_enough(self):
        reference = ReferenceArchitecture("q", (ReferenceComponent("EventLoop", known_methods=("flush",)),))

        (result,) = match_reference(self.godot, reference)

        self.assertEqual((result.matched_label, result.tier), ("MessageQueue", METHOD_EVIDENCE))

    def test_raising_the_threshold_never_adds_matches(self):
        thresholds = [Fraction(1, 5), Fraction(1, 3), Fraction(1, 2), Fraction(2, 3), Fraction(1)]
        matched = [
            {result.component for result in match_reference(self.godot, self.layers, threshold) if result.matched}
            for threshold in thresholds
        ]
        for looser, stricter in zip(matched, matched[1:]):
            self.assertLessEqual(stricter, looser)

    def test_invalid_threshold(self):
        for threshold in (0, Fraction(3, 2), -1):
            with self.subTest(threshold=threshold):
                with self.assertRaises(ValueError):
                    match_reference(self.godot, self.layers, threshold)

    def test_scaling_costs_does_not_change_matches(self):
        bigger = categorized(scaled(self.godot_profile, 7))

        self.assertEqual(match_reference(bigger, self.layers), match_reference(self.godot, self.layers))

    def test_exact_and_method_tiers_ignore_case(self):
        reference = ReferenceArchitecture(
            "cased",
            (
                ReferenceComponent("os"),
                ReferenceComponent("SCENETREE"),
                ReferenceComponent("Display", known_methods=("GET_SINGLETON", "Has_Feature")),
            ),
        )

        results = match_reference(self.godot, reference)

        self.assertEqual(
            [(result.matched_label, result.tier) for result in results],
            [("OS", EXACT), ("SceneTree", EXACT), ("OS", METHOD_EVIDENCE)],
        )


class MatchPairsTests(ScenarioTestCase):
    def test_godot_against_urho(self):
        pairs = {pair.left: pair for pair in match_pairs(self.godot, self.urho)}

        self.assertEqual(pairs[FREE_FUNCTIONS].right, FREE_FUNCTIONS)
        self.assertEqual(pairs[FREE_FUNCTIONS].tier, EXACT)
        self.assertEqual(pairs["Main"].right, "Urho3D::Application")
        self.assertEqual(pairs["Main"].tier, METHOD_EVIDENCE)
        self.assertEqual(pairs["Main"].score, Fraction(1, 2))
        self.assertEqual(pairs["Main"].evidence, ("setup", "start"))

    def test_shared_lifecycle_method_is_not_evidence(self):
        pairs = {pair.left: pair for pair in match_pairs(self.godot, self.urho)}

        self.assertNotIn("OS_X11", pairs)
        self.assertNotIn("Urho3D::Renderer", {pair.right for pair in pairs.values()})

    def test_generic_leaves_never_pair_alone(self):
        for leaf in ("init", "initialize", "update", "Initialize"):
            with self.subTest(leaf=leaf):
                left = class_view(f"OS_X11::{leaf}")
                right = class_view(f"Renderer::{leaf}")
                self.assertEqual(match_pairs(left, right), [])

    def test_specific_single_method_is_evidence(self):
        (pair,) = match_pairs(class_view("MessageQueue::flush"), class_view("EventBuffer::flush"))

        self.assertEqual((pair.left, pair.right, pair.tier), ("MessageQueue", "EventBuffer", METHOD_EVIDENCE))
        self.assertEqual(pair.evidence, ("flush",))

    def test_pairs_are_one_to_one(self):
        pairs = match_pairs(self.godot, self.urho)

        self.assertEqual(len({pair.left for pair in pairs}), len(pairs))
        self.assertEqual(len({pair.right for pair in pairs}), len(pairs))

    def test_swapping_sides_swaps_pairs(self):
        forward = {(pair.left, pair.right, pair.tier, pair.score) for pair in match_pairs(self.godot, self.urho)}
        backward = {(pair.right, pair.left, pair.tier, pair.score) for pair in match_pairs(self.urho, self.godot)}

        self.assertEqual(forward, backward)

    def test_self_match_is_exact(self):
        pairs = match_pairs(self.godot, self.godot)

        self.assertEqual(len(pairs), len(self.godot.nodes))
        self.assertTrue(all(pair.left == pair.right and pair.tier == EXACT for pair in pairs))


class InitSequenceTests(ScenarioTestCase):
    def test_godot_category_order(self):
        sequence = extract_init_sequence(self.godot)

        self.assertEqual(
            sequence.categories(),
            ["initialization", "class-registration", "window-system", "graphics", UNCATEGORIZED],
        )
        self.assertEqual(sequence.labels()[:4], [FREE_FUNCTIONS, "Main", "OS", "ClassDB"])

    def test_urho_category_order(self):
        sequence = extract_init_sequence(self.urho)

        self.assertEqual(sequence.categories(), ["initialization", "class-registration", "graphics", "window-system"])
        self.assertEqual(
            sequence.labels(),
            [
                FREE_FUNCTIONS,
                "Urho3D::Application",
                "Urho3D::Engine",
                "Urho3D",
                "Urho3D::Context",
                "Urho3D::Graphics",
                "SDL",
                "Urho3D::Renderer",
                "Urho3D::UI",
            ],
        )

    def test_every_reachable_node_appears_once(self):
        sequence = extract_init_sequence(self.godot)

        self.assertEqual(len(sequence), len(self.godot.nodes))
        self.assertEqual(len(set(sequence.labels())), len(sequence))
        self.assertEqual([step.position for step in sequence.steps], list(range(len(sequence))))

    def test_explicit_entry(self):
        entry = FunctionKey("/home/dev/godot/bin/godot.x11.tools.64", "main/main.cpp", "Main::start")

        sequence = extract_init_sequence(self.godot, entry)

        self.assertEqual(sequence.labels(), ["Main", "SceneTree", "MessageQueue", "ProceduralSky"])

    def test_unknown_entry(self):
        with self.assertRaises(UnknownEntryError) as raised:
            extract_init_sequence(self.godot, FunctionKey("", "", "nowhere"))
        self.assertEqual(raised.exception.exit_code, 1)

    def test_single_node(self):
        profile = Profile({}, EventSpec(("Ir",)), {FunctionKey("", "", "main"): FunctionRecord((5,))})

        sequence = extract_init_sequence(categorized(profile))

        self.assertEqual(sequence.labels(), [FREE_FUNCTIONS])
        self.assertEqual(sequence.categories(), [UNCATEGORIZED])

    def test_view_without_call_graph(self):
        detached = replace(self.urho, source=None)

        sequence = extract_init_sequence(detached)

        self.assertEqual(sequence.categories(), ["initialization", "class-registration", "graphics", "window-system"])


class DiffOrderTests(SimpleTestCase):
    def test_single_inversion(self):
        left = sequence_of("initialization", "class-registration", "window-system", "graphics")
        right = sequence_of("initialization", "class-registration", "graphics", "window-system")

        self.assertEqual(diff_order(left, right), [("window-system", "graphics")])
        self.assertEqual(diff_order(right, left), [("graphics", "window-system")])

    def test_identical_sequences(self):
        sequence = sequence_of("initialization", "graphics", "initialization", "window-system")

        self.assertEqual(diff_order(sequence, sequence), [])

    def test_disjoint_categories(self):
        self.assertEqual(diff_order(sequence_of("audio", "graphics"), sequence_of("physics", "input")), [])

    def test_uncategorized_never_counts(self):
        left = sequence_of(UNCATEGORIZED, "graphics")
        right = sequence_of("graphics", UNCATEGORIZED)

        self.assertEqual(diff_order(left, right), [])

    def test_first_occurrence_decides(self):
        left = sequence_of("graphics", "audio", "graphics")
        right = sequence_of("graphics", "audio")

        self.assertEqual(diff_order(left, right), [])

    def test_antisymmetric_on_random_orders(self):
        rng = random.Random(4242)
        categories = ["a", "b", "c", "d", "e", "f"]
        for _ in range(100):
            left = sequence_of(*rng.sample(categories, rng.randint(0, 6)))
            right = sequence_of(*rng.sample(categories, rng.randint(0, 6)))
            forward = {frozenset(pair) for pair in diff_order(left, right)}
            backward = {frozenset(pair) for pair in diff_order(right, left)}
            with self.subTest(left=left.categories(), right=right.categories()):
                self.assertEqual(forward, backward)
                for first, second in diff_order(left, right):
                    self.assertLess(left.categories().index(first), left.categories().index(second))


class CompareTests(ScenarioTestCase):
    def test_godot_against_urho(self):
        report = compare(self.godot, self.urho, ruleset=default_ruleset(), left_name="godot", right_name="urho3d")

        self.assertEqual(report.order_inversions, (("window-system", "graphics"),))
        self.assertIn("MessageQueue", report.only_left)
        self.assertIn("ClassDB", report.only_left)
        self.assertIn("SDL", report.only_right)
        self.assertEqual(
            report.common_categories, ("class-registration", "graphics", "initialization", "window-system")
        )
        self.assertEqual(report.only_left_categories, ())
        self.assertEqual(report.only_right_categories, ())
        self.assertEqual(report.notes[0], ORDER_NOTE)
        self.assertIn("godot: ProceduralSky is called repeatedly (30 calls)", report.notes)
        self.assertIn("godot: ClassDB is called repeatedly (250 calls)", report.notes)
        self.assertIn("urho3d: Urho3D::Context is called repeatedly (60 calls)", report.notes)
        self.assertIn("godot: OS (initialization) is initialized but barely used: 0.46% of total cost", report.notes)
        self.assertIn(
            "godot: AudioServer (initialization) is initialized but barely used: 0.07% of total cost", report.notes
        )
        self.assertIn("godot: Main has 3 initialization methods (setup, setup2, start)", report.notes)

    def test_common_and_exclusive_partition_the_nodes(self):
        report = compare(self.godot, self.urho)

        left = [pair.left for pair in report.common] + list(report.only_left)
        right = [pair.right for pair in report.common] + list(report.only_right)
        self.assertCountEqual(left, [node.label for node in self.godot.nodes])
        self.assertCountEqual(right, [node.label for node in self.urho.nodes])

    def test_self_compare(self):
        report = compare(self.urho, self.urho)

        self.assertEqual(report.only_left, ())
        self.assertEqual(report.only_right, ())
        self.assertEqual(report.order_inversions, ())
        self.assertEqual(len(report.common), len(self.urho.nodes))

    def test_swapping_sides(self):
        forward = compare(self.godot, self.urho)
        backward = compare(self.urho, self.godot)

        self.assertEqual(set(forward.only_left), set(backward.only_right))
        self.assertEqual(forward.common_categories, backward.common_categories)
        self.assertEqual(
            {frozenset(pair) for pair in forward.order_inversions},
            {frozenset(pair) for pair in backward.order_inversions},
        )

    def test_idle_threshold_of_zero_reports_nothing_idle(self):
        report = compare(self.godot, self.urho, idle_threshold=0)

        self.assertFalse([note for note in report.notes if "barely used" in note])

    def test_repeat_notes_count_only_calls_from_other_nodes(self):
        profile = Profile(
            {},
            EventSpec(("Ir",)),
            {
                FunctionKey("", "", "main"): FunctionRecord(
                    (1,), (CallRecord(FunctionKey("", "", "Loop::tick"), 1, (20,)),), 0
                ),
                FunctionKey("", "", "Loop::tick"): FunctionRecord(
                    (10,), (CallRecord(FunctionKey("", "", "Loop::step"), 50, (10,)),), 1
                ),
                FunctionKey("", "", "Loop::step"): FunctionRecord((10,), (), 2),
            },
        )
        graph = categorized(profile)

        report = compare(graph, graph)

        self.assertFalse([note for note in report.notes if "called repeatedly" in note])


class LoadReferenceTests(SimpleTestCase):
    def write(self, text):
        directory = tempfile.TemporaryDirectory()
        self.addCleanup(directory.cleanup)
        path = Path(directory.name) / "reference.yaml"
        path.write_text(text, encoding="utf-8")
        return path

    def test_godot_layers(self):
        reference = load_reference(SCENARIOS / "godot-layers.yaml")

        self.assertEqual(reference.name, "godot-layers")
        self.assertEqual(len(reference.components), 9)
        self.assertEqual(reference.components[4].aliases, ("VisualServer",))
        self.assertEqual(reference.components[8].layer, 4)

    def test_errors(self):
        cases = {
            "missing": None,
            "bad yaml": "name: [unterminated\n",
            "no components": "name: x\n",
            "negative layer": "name: x\ncomponents:\n  - name: A\n    layer: -1\n",
            "unknown field": "name: x\ncomponents:\n  - name: A\n    colour: red\n",
            "duplicate": "name: x\ncomponents:\n  - name: A\n  - name: A\n",
        }
        for case, text in cases.items():
            with self.subTest(case=case):
                path = Path("/nonexistent/reference.yaml") if text is None else self.write(text)
                with self.assertRaises(ReferenceFileError) as raised:
                    load_reference(path)
                self.assertEqual(raised.exception.exit_code, 3)
