import io
import random
from pathlib import Path

from django.test import SimpleTestCase

from anatomy.exceptions import InputError

from .exceptions import CallgrindSyntaxError, EmptyProfileError, EventMismatchError, UnwritableNameError
from .parser import load_profile, merge_parts, parse_parts, parse_profile
from .profile import CallRecord, EventDefinition, EventSpec, FunctionKey, FunctionRecord, Profile
from .writer import write_canonical

TESTDATA = Path(__file__).resolve().parent / "testdata"

CONSERVED_FIXTURES = [
    "minimal.cg",
    "empty.cg",
    "compressed.cg",
    "multipart.cg",
    "recursion.cg",
    "cycle.cg",
    "padded.cg",
    "acyclic.cg",
    "jumps.cg",
    "combined.cg",
]


def parse_text(text):
    return parse_profile(io.BytesIO(text.encode("utf-8")))


def key(name, file="", obj=""):
    return FunctionKey(obj, file, name)


class ParseProfileTests(SimpleTestCase):
    def test_minimal_fixture(self):
        profile = load_profile(TESTDATA / "minimal.cg")

        main = profile.functions[key("main", "main.c")]
        helper = profile.functions[key("helper", "main.c")]
        self.assertEqual(len(profile.functions), 2)
        self.assertEqual(profile.events.names, ("Ir",))
        self.assertEqual(main.self_cost, (20,))
        self.assertEqual(main.calls, (CallRecord(key("helper", "main.c"), 1, (400,)),))
        self.assertEqual(helper.self_cost, (400,))
        self.assertEqual(profile.summary, (420,))
        self.assertEqual(profile.header["creator"], "hand-written")

    def test_header_and_totals_only(self):
        profile = load_profile(TESTDATA / "empty.cg")

        self.assertEqual(profile.functions, {})
        self.assertEqual(profile.summary, (0,))
        self.assertEqual(profile.header["cmd"], "./empty")

    def test_name_compression_resolves_ids(self):
        profile = parse_text(
            "events: Ir\n"
            "fn=(1) Main::setup\n"
            "0 5\n"
            "fn=(2) main\n"
            "0 1\n"
            "cfn=(1)\n"
            "calls=1 0\n"
            "0 5\n"
        )

        main = profile.functions[key("main")]
        self.assertEqual(main.calls[0].callee, key("Main::setup"))
        self.assertIn(key("Main::setup"), profile.functions)

    def test_compressed_fixture(self):
        profile = load_profile(TESTDATA / "compressed.cg")

        main = key("main", "main/main.cpp", "/usr/bin/game")
        setup = key("Main::setup", "core/main_setup.cpp", "/usr/bin/game")
        display = key("XOpenDisplay", "x11/display.c", "/usr/lib/libX11.so")
        self.assertEqual(profile.events.names, ("Ir", "Dr", "Dw"))
        self.assertEqual(profile.events.definitions, (EventDefinition("Ir", "", "Instruction Fetch"),))
        self.assertEqual(profile.functions[main].self_cost, (15, 3, 1))
        self.assertEqual(profile.functions[setup].self_cost, (380, 100, 40))
        self.assertEqual(profile.functions[display].self_cost, (605, 197, 79))
        self.assertEqual(profile.functions[setup].calls, (CallRecord(display, 2, (605, 197, 79)),))
        self.assertEqual(profile.header["positions"], "instr line")

    def test_inlined_file_does_not_change_function(self):
        profile = load_profile(TESTDATA / "compressed.cg")

        files = {function.file for function in profile.functions}
        self.assertNotIn("core/inline.h", files)

    def test_ids_are_per_namespace(self):
        profile = parse_text(
            "events: Ir\n"
            "ob=(1) libfoo.so\n"
            "fl=(1) foo.c\n"
            "fn=(1) foo\n"
            "0 1\n"
            "fn=(2) bar\n"
            "0 2\n"
            "fn=(1)\n"
            "0 3\n"
        )

        self.assertEqual(profile.functions[key("foo", "foo.c", "libfoo.so")].self_cost, (4,))
        self.assertEqual(profile.functions[key("bar", "foo.c", "libfoo.so")].self_cost, (2,))

    def test_callee_context_defaults_to_caller(self):
        profile = parse_text(
            "events: Ir\n"
            "ob=app\n"
            "fl=a.c\n"
            "fn=main\n"
            "cob=libc.so\n"
            "cfn=puts\n"
            "calls=1 0\n"
            "0 7\n"
            "cfn=local\n"
            "calls=1 0\n"
            "0 3\n"
        )

        calls = profile.functions[key("main", "a.c", "app")].calls
        self.assertEqual(calls[0].callee, key("puts", "a.c", "libc.so"))
        self.assertEqual(calls[1].callee, key("local", "a.c", "app"))

    def test_trailing_costs_are_padded(self):
        profile = load_profile(TESTDATA / "padded.cg")

        self.assertEqual(profile.functions[key("a")].self_cost, (20, 3))
        self.assertEqual(profile.functions[key("b")].self_cost, (0, 0))

    def test_first_record_index_follows_text_order(self):
        profile = load_profile(TESTDATA / "acyclic.cg")

        names = [function.name for function, _ in profile.ordered_functions()]
        self.assertEqual(names, ["main", "init", "run", "load", "draw"])

    def test_repeated_fn_keeps_first_index(self):
        profile = load_profile(TESTDATA / "padded.cg")

        self.assertEqual(profile.functions[key("a")].first_record_index, 0)
        self.assertEqual(profile.functions[key("b")].first_record_index, 1)

    def test_multiple_desc_lines_are_joined(self):
        profile = parse_text("desc: I1 cache: 32768 B\ndesc: D1 cache: 32768 B\nevents: Ir\n")

        self.assertEqual(profile.header["desc"], "I1 cache: 32768 B\nD1 cache: 32768 B")

    def test_derived_events_are_kept_verbatim(self):
        profile = parse_text("events: Ir Dr\nevent: L1m = Ir + Dr : L1 misses\n")

        self.assertEqual(profile.events.derived, (("L1m", "Ir + Dr"),))

    def test_jump_lines_are_dropped(self):
        profile = load_profile(TESTDATA / "jumps.cg")

        main, step = key("main", "loop.c"), key("step", "helper.h")
        self.assertEqual(list(profile.functions), [main, step])
        self.assertEqual(profile.functions[main].self_cost, (25,))
        self.assertEqual(profile.functions[main].calls, (CallRecord(step, 4, (20,)),))
        self.assertEqual(profile.functions[step].self_cost, (20,))
        self.assertTrue(profile.is_conserved())

    def test_jump_target_ids_can_be_referenced(self):
        profile = parse_text("events: Ir\nfn=main\njfi=(1) a.c\njfn=(1) loop\njump=2 +1\n0 1\nfl=(1)\nfn=(1)\n0 2\n")

        self.assertEqual(profile.functions[key("loop", "a.c")].self_cost, (2,))

    def test_undecodable_bytes_survive(self):
        raw = b"events: Ir\nfn=caf\xe9\n0 1\n"

        profile = parse_profile(io.BytesIO(raw))

        self.assertEqual(write_canonical(profile).count(b"caf\xe9"), 1)


class CombinedDumpTests(SimpleTestCase):
    def setUp(self):
        self.parts = parse_parts(io.BytesIO((TESTDATA / "combined.cg").read_bytes()))

    def test_each_part_has_its_own_description(self):
        first, second = self.parts

        self.assertEqual(first.header["desc"], "I1 cache: 32768 B\nTrigger: Client Request: startup")
        self.assertEqual(second.header["desc"], "Trigger: Program termination")

    def test_process_lines_before_part_belong_to_the_next_part(self):
        first, second = self.parts

        self.assertEqual((first.header["pid"], first.header["cmd"], first.header["part"]), ("4242", "./game", "1"))
        self.assertEqual(
            (second.header["pid"], second.header["cmd"], second.header["part"]), ("4243", "./game --level 2", "2")
        )
        self.assertEqual(second.header["creator"], "callgrind-3.22.0")

    def test_summaries_stay_per_part(self):
        self.assertEqual([part.summary for part in self.parts], [(10,), (7,)])
        self.assertEqual(merge_parts(self.parts).summary, (17,))


class ParseErrorTests(SimpleTestCase):
    def assertSyntaxError(self, text, line_number, token=None):
        with self.assertRaises(CallgrindSyntaxError) as context:
            parse_text(text)
        self.assertEqual(context.exception.line_number, line_number)
        if token is not None:
            self.assertEqual(context.exception.token, token)
        self.assertEqual(context.exception.exit_code, 2)
        return context.exception

    def test_unknown_directive(self):
        self.assertSyntaxError("events: Ir\nfn=main\nbogus=1\n", 3, "bogus=")

    def test_unknown_header_key(self):
        self.assertSyntaxError("events: Ir\nflavour: vanilla\n", 2, "flavour:")

    def test_undefined_compression_id(self):
        self.assertSyntaxError("events: Ir\nfn=(7)\n", 2, "fn=(7)")

    def test_non_numeric_cost(self):
        self.assertSyntaxError("events: Ir\nfn=main\n1 ten\n", 3, "ten")

    def test_cost_before_fn(self):
        self.assertSyntaxError("events: Ir\n1 10\n", 2)

    def test_cost_before_events(self):
        self.assertSyntaxError("fn=main\n1 10\nevents: Ir\n", 2)

    def test_too_many_costs(self):
        self.assertSyntaxError("events: Ir\nfn=main\n1 10 20\n", 3, "20")

    def test_duplicate_event_names(self):
        self.assertSyntaxError("events: Ir Ir\n", 1)

    def test_calls_without_cfn(self):
        self.assertSyntaxError("events: Ir\nfn=main\ncalls=1 0\n0 1\n", 3)

    def test_zero_call_count(self):
        self.assertSyntaxError("events: Ir\nfn=main\ncfn=f\ncalls=0 0\n0 1\n", 4, "0")

    def test_calls_without_cost_line(self):
        self.assertSyntaxError("events: Ir\nfn=main\ncfn=f\ncalls=1 0\n", 4)

    def test_empty_function_name(self):
        self.assertSyntaxError("events: Ir\nfn=\n", 2)

    def test_message_names_line_and_token(self):
        error = self.assertSyntaxError("events: Ir\nfn=main\nbogus=1\n", 3)

        self.assertIn("line 3", str(error))
        self.assertIn("bogus=", str(error))

    def test_no_events_line(self):
        with self.assertRaises(EmptyProfileError):
            parse_text("version: 1\ncreator: nobody\n")

    def test_empty_input(self):
        with self.assertRaises(EmptyProfileError):
            parse_profile(io.BytesIO(b""))


class ConservationTests(SimpleTestCase):
    def test_self_costs_add_up_to_summary(self):
        for name in CONSERVED_FIXTURES:
            with self.subTest(fixture=name):
                profile = load_profile(TESTDATA / name)
                self.assertIsNotNone(profile.summary)
                self.assertEqual(profile.self_total(), profile.summary)
                self.assertTrue(profile.is_conserved())

    def test_mismatched_summary_is_only_a_warning(self):
        with self.assertLogs("profiles.parser", level="WARNING"):
            profile = parse_text("events: Ir\nfn=main\n0 5\ntotals: 6\n")

        self.assertFalse(profile.is_conserved())


class MergePartsTests(SimpleTestCase):
    def test_multipart_fixture(self):
        parts = parse_parts(io.BytesIO((TESTDATA / "multipart.cg").read_bytes()))
        profile = load_profile(TESTDATA / "multipart.cg")

        self.assertEqual(len(parts), 2)
        self.assertEqual(parts[1].header["part"], "2")
        self.assertEqual(parts[1].header["cmd"], "./tool")
        self.assertEqual(profile.functions[key("main", "tool.c")].self_cost, (20,))
        self.assertEqual(profile.functions[key("flush", "tool.c")].first_record_index, 2)
        self.assertEqual(profile.summary, (55,))
        self.assertNotIn("part", profile.header)

    def test_costs_are_summed(self):
        part = parse_text("events: Ir\nfn=main\n0 10\ncfn=f\ncalls=1 0\n0 4\nsummary: 10\n")

        merged = merge_parts([part, part])

        main = merged.functions[key("main")]
        self.assertEqual(main.self_cost, (20,))
        self.assertEqual(main.calls, (CallRecord(key("f"), 2, (8,)),))
        self.assertEqual(merged.summary, (20,))

    def test_single_part_is_unchanged(self):
        part = load_profile(TESTDATA / "minimal.cg")

        self.assertIs(merge_parts([part]), part)

    def test_disjoint_parts(self):
        f = parse_text("events: Ir\nfn=f\n0 3\n")
        g = parse_text("events: Ir\nfn=g\n0 4\n")

        merged = merge_parts([f, g])

        self.assertEqual(merged.functions[key("f")].self_cost, (3,))
        self.assertEqual(merged.functions[key("g")].self_cost, (4,))
        self.assertEqual(merged.functions[key("g")].first_record_index, 1)
        self.assertIsNone(merged.summary)

    def test_event_mismatch(self):
        left = parse_text("events: Ir\n")
        right = parse_text("events: Ir Dr\n")

        with self.assertRaises(EventMismatchError):
            merge_parts([left, right])


class LoadProfileTests(SimpleTestCase):
    def test_missing_file_names_the_path(self):
        with self.assertRaises(InputError) as context:
            load_profile(TESTDATA / "missing.cg")

        self.assertIn("missing.cg", str(context.exception))
        self.assertEqual(context.exception.exit_code, 2)


SYMBOLS = [
    "main",
    "(below main)",
    "Main::setup",
    "OS::get_singleton",
    "std::vector<std::pair<int, int> >::push_back(value_type&&)",
    "Foo::operator()(int) const",
    "ProceduralSky::_generate_sky",
    "0x0000000000401000",
    "(12) weird",
    "(7)",
    "(below main) (3)",
]
FILES = ["", "main/main.cpp", "core/os/os.cpp", "???", "(2) gen.cpp"]
OBJECTS = ["", "/usr/bin/godot", "/usr/lib/libX11.so.6", "(1)"]
EVENTS = ["Ir", "Dr", "Dw", "I1mr", "Bc", "Bcm"]


def random_profile(rng):
    events = tuple(rng.sample(EVENTS, rng.randint(1, 3)))
    definitions = ()
    if rng.random() < 0.3:
        definitions = (EventDefinition("Sum", " + ".join(events), "Sum of events"),)
    width = len(events)

    def costs():
        return tuple(rng.randint(0, 10**12) if rng.random() < 0.8 else 0 for _ in range(width))

    keys = []
    for index in range(rng.randint(0, 8)):
        name = f"{rng.choice(SYMBOLS)}'{index}" if rng.random() < 0.5 else rng.choice(SYMBOLS)
        candidate = FunctionKey(rng.choice(OBJECTS), rng.choice(FILES), name)
        if candidate not in keys:
            keys.append(candidate)
    frontier = [FunctionKey("/usr/lib/libc.so.6", "", "malloc"), FunctionKey("", "", "XOpenDisplay")]

    functions = {}
    for index, function in enumerate(keys):
        calls = tuple(
            CallRecord(rng.choice(keys + frontier), rng.randint(1, 50), costs())
            for _ in range(rng.randint(0, 3))
        )
        functions[function] = FunctionRecord(costs(), calls, index)

    header = {"version": "1", "creator": f"callgrind-3.{rng.randint(10, 22)}.0"}
    if rng.random() < 0.5:
        header["cmd"] = "./bin/game --path demo"
    if rng.random() < 0.3:
        header["desc"] = "I1 cache: 32768 B, 64 B, 8-way associative\nTimerange: Basic block 0 - 1000"
    if rng.random() < 0.3:
        header["positions"] = rng.choice(["line", "instr line", "instr"])

    profile = Profile(header, EventSpec(events, definitions), functions)
    summary = profile.self_total() if rng.random() < 0.7 else None
    return Profile(header, EventSpec(events, definitions), functions, summary)


class WriteCanonicalTests(SimpleTestCase):
    def test_minimal_fixture(self):
        text = write_canonical(load_profile(TESTDATA / "minimal.cg")).decode()

        self.assertIn("fl=(1) main.c\nfn=(1) main\n0 20\n", text)
        self.assertIn("cfl=(1)\ncfn=(2) helper\ncalls=1 0\n", text)
        self.assertIn("fl=(1)\nfn=(2)\n0 400\n", text)
        self.assertIn("summary: 420\n", text)

    def test_empty_profile(self):
        text = write_canonical(load_profile(TESTDATA / "empty.cg")).decode()

        self.assertIn("events: Ir\n", text)
        self.assertIn("summary: 0\n", text)
        self.assertNotIn("fn=", text)

    def test_fixtures_round_trip(self):
        for name in CONSERVED_FIXTURES:
            with self.subTest(fixture=name):
                profile = load_profile(TESTDATA / name)
                self.assertEqual(parse_profile(io.BytesIO(write_canonical(profile))), profile)

    def test_names_that_look_like_compression_ids(self):
        functions = {
            key("(12) weird"): FunctionRecord((1,), (CallRecord(key("(12)"), 1, (2,)),), 0),
            key("(12)"): FunctionRecord((2,), (), 1),
        }
        profile = Profile({}, EventSpec(("Ir",)), functions)

        self.assertEqual(parse_profile(io.BytesIO(write_canonical(profile))), profile)

    def test_names_that_cannot_be_written(self):
        for name in (" padded ", "trailing ", "two\nlines", ""):
            profile = Profile({}, EventSpec(("Ir",)), {key(name): FunctionRecord((1,))})
            with self.subTest(name=name):
                with self.assertRaises(UnwritableNameError) as raised:
                    write_canonical(profile)
                self.assertEqual(raised.exception.exit_code, 2)

    def test_random_profiles_round_trip(self):
        rng = random.Random(20240611)
        for iteration in range(200):
            profile = random_profile(rng)
            with self.subTest(iteration=iteration):
                self.assertEqual(parse_profile(io.BytesIO(write_canonical(profile))), profile)
