import random
import tempfile
from pathlib import Path

from django.test import SimpleTestCase, override_settings

from callgraph.graph import build_graph
from profiles.profile import CallRecord, EventSpec, FunctionKey, FunctionRecord, Profile

from .aggregation import FREE_FUNCTIONS, UNCATEGORIZED, UNKNOWN_FILE, aggregate, aggregate_categories
from .categories import CategoryRule, CategoryRuleset, categorize, default_ruleset, load_ruleset
from .exceptions import InvalidPatternError, RulesetFileError
from .names import parse_symbol, tokenize


def graph_of(functions, calls=()):
    """
    Call graph from ``{name: (file, self)}`` and ``(caller, callee, count, cost)`` rows.
    """
    keys = {name: FunctionKey("", file, name) for name, (file, _) in functions.items()}
    records = {name: [] for name in functions}
    for caller, callee, count, cost in calls:
        records[caller].append(CallRecord(keys[callee], count, (cost,)))
    profile = Profile(
        {},
        EventSpec(("Ir",)),
        {
            keys[name]: FunctionRecord((cost,), tuple(records[name]), index)
            for index, (name, (_, cost)) in enumerate(functions.items())
        },
    )
    return build_graph(profile)


def top_level_separators(raw):
    depth = 0
    count = 0
    index = 0
    while index < len(raw):
        char = raw[index]
        if char in "<([{":
            depth += 1
        elif char in ">)]}":
            depth -= 1
        elif depth == 0 and raw.startswith("::", index):
            count += 1
            index += 1
        index += 1
    return count


class ParseSymbolTests(SimpleTestCase):
    def test_method(self):
        parts = parse_symbol("ProceduralSky::_generate_sky")

        self.assertEqual(parts.scope_path, ("ProceduralSky",))
        self.assertEqual(parts.leaf, "_generate_sky")
        self.assertFalse(parts.had_signature)

    def test_free_function(self):
        parts = parse_symbol("main")

        self.assertEqual(parts.scope_path, ())
        self.assertEqual(parts.leaf, "main")

    def test_templates_and_signature(self):
        parts = parse_symbol("std::vector<std::pair<int,int>>::push_back(value_type&&)")

        self.assertEqual(parts.scope_path, ("std", "vector"))
        self.assertEqual(parts.leaf, "push_back")
        self.assertTrue(parts.had_template_args)
        self.assertTrue(parts.had_signature)

    def test_call_operator_is_a_leaf(self):
        parts = parse_symbol("Foo::operator()(int) const")

        self.assertEqual(parts.scope_path, ("Foo",))
        self.assertEqual(parts.leaf, "operator()")
        self.assertTrue(parts.had_signature)

    def test_operator_without_signature(self):
        parts = parse_symbol("Vector2::operator<<")

        self.assertEqual(parts.leaf, "operator<<")
        self.assertFalse(parts.had_template_args)

    def test_parenthesised_names_are_not_signatures(self):
        self.assertEqual(parse_symbol("(below main)").leaf, "(below main)")

        parts = parse_symbol("(anonymous namespace)::_register_classes()")
        self.assertEqual(parts.scope_path, ("(anonymous namespace)",))
        self.assertEqual(parts.leaf, "_register_classes")

    def test_unbalanced_brackets_give_opaque_leaf(self):
        parts = parse_symbol("Foo::bar<int")

        self.assertEqual(parts.scope_path, ("Foo",))
        self.assertEqual(parts.leaf, "bar<int")
        self.assertFalse(parts.had_template_args)

    def test_return_type_of_template_function_is_dropped(self):
        parts = parse_symbol("void foo<int>(int)")

        self.assertEqual((parts.scope_path, parts.leaf), ((), "foo"))
        self.assertTrue(parts.had_template_args)
        self.assertTrue(parts.had_signature)

    def test_return_type_of_template_method_is_dropped(self):
        parts = parse_symbol("void ClassDB::register_class<Node>()")

        self.assertEqual((parts.scope_path, parts.leaf), (("ClassDB",), "register_class"))

    def test_qualified_return_types_are_dropped(self):
        samples = {
            "std::vector<int, std::allocator<int> > Foo::make(int) const": (("Foo",), "make"),
            "unsigned long Vector<String>::size() const": (("Vector",), "size"),
            "Ref<Resource> (anonymous namespace)::load(String const&)": (("(anonymous namespace)",), "load"),
            "non-virtual thunk to Node::notification(int)": (("Node",), "notification"),
        }
        for raw, expected in samples.items():
            with self.subTest(raw=raw):
                parts = parse_symbol(raw)
                self.assertEqual((parts.scope_path, parts.leaf), expected)

    def test_conversion_operator_keeps_its_type(self):
        parts = parse_symbol("Variant::operator unsigned int() const")

        self.assertEqual((parts.scope_path, parts.leaf), (("Variant",), "operator unsigned int"))

    def test_spaces_without_signature_are_kept(self):
        self.assertEqual(parse_symbol("Foo::some name").leaf, "some name")

    def test_reconstruction_is_stable(self):
        samples = [
            "ProceduralSky::_generate_sky",
            "Urho3D::Engine::Initialize(Urho3D::HashMap<Urho3D::StringHash, Urho3D::Variant> const&)",
            "std::_Rb_tree<int, int, std::_Identity<int> >::_M_insert_unique(int const&)",
            "ClassDB::register_class<Node2D>()",
            "void ClassDB::register_class<Node>()",
            "Foo::operator()(int) const",
            "(anonymous namespace)::helper",
            "Vector<String>::push_back(String)",
        ]
        for raw in samples:
            with self.subTest(raw=raw):
                parts = parse_symbol(raw)
                again = parse_symbol("::".join(parts.scope_path + (parts.leaf,)))
                self.assertEqual((again.scope_path, again.leaf), (parts.scope_path, parts.leaf))

    def test_scope_depth_matches_top_level_separators(self):
        samples = [
            "main",
            "OS::get_singleton",
            "Urho3D::Context::RegisterFactory(Urho3D::ObjectFactory*, char const*)",
            "std::map<std::string, std::vector<int>>::operator[](std::string const&)",
            "a::b<c::d>::e(f::g)",
        ]
        for raw in samples:
            with self.subTest(raw=raw):
                self.assertEqual(len(parse_symbol(raw).scope_path), top_level_separators(raw))


class TokenizeTests(SimpleTestCase):
    def test_camel_case_and_digits(self):
        self.assertEqual(tokenize("Physics2DServer"), ("physics", "2d", "server"))
        self.assertEqual(tokenize("X11Window"), ("x11", "window"))
        self.assertEqual(tokenize("RasterizerGLES3"), ("rasterizer", "gles3"))

    def test_underscores_and_scopes(self):
        self.assertEqual(tokenize("_generate_sky"), ("generate", "sky"))
        self.assertEqual(tokenize("Urho3D::UI"), ("urho3d", "ui"))


class AggregateTests(SimpleTestCase):
    def test_methods_group_by_class(self):
        graph = graph_of(
            {"main": ("main.cpp", 1), "Main::setup": ("main.cpp", 10), "Main::setup2": ("main.cpp", 5)},
            [("main", "Main::setup", 1, 15), ("Main::setup", "Main::setup2", 1, 5)],
        )

        abstract = aggregate(graph, "class")

        node = abstract.node("Main")
        self.assertEqual(len(node.members), 2)
        self.assertEqual(node.self_cost, (15,))
        self.assertEqual(node.inclusive_cost, (15,))
        self.assertEqual(node.member_leaves, ("setup", "setup2"))

    def test_return_types_do_not_split_a_class(self):
        graph = graph_of(
            {
                "ClassDB::get_class": ("class_db.cpp", 2),
                "void ClassDB::register_class<Node>()": ("class_db.h", 3),
                "void ClassDB::register_class<Node2D>()": ("class_db.h", 4),
            }
        )

        abstract = aggregate(graph, "class")

        self.assertEqual([node.label for node in abstract.nodes], ["ClassDB"])
        self.assertEqual(abstract.node("ClassDB").member_leaves, ("get_class", "register_class"))

    def test_free_functions(self):
        abstract = aggregate(graph_of({"main": ("", 3)}), "class")

        self.assertEqual([node.label for node in abstract.nodes], [FREE_FUNCTIONS])

    def test_intra_class_calls_become_a_self_loop(self):
        graph = graph_of(
            {"OS::get_singleton": ("os.cpp", 4), "OS::has_feature": ("os.cpp", 12)},
            [("OS::get_singleton", "OS::has_feature", 12, 12)],
        )

        abstract = aggregate(graph, "class")

        self.assertEqual(len(abstract.nodes), 1)
        (edge,) = abstract.edges
        self.assertEqual((edge.source, edge.target, edge.count), ("OS", "OS", 12))
        self.assertEqual(abstract.node("OS").inclusive_cost, (16,))

    def test_file_level(self):
        graph = graph_of(
            {"main": ("main.cpp", 1), "helper": ("util.cpp", 2), "XOpenDisplay": ("", 3)},
            [("main", "helper", 1, 2), ("helper", "XOpenDisplay", 1, 3)],
        )

        abstract = aggregate(graph, "file")

        self.assertEqual([node.label for node in abstract.nodes], ["main.cpp", "util.cpp", UNKNOWN_FILE])
        self.assertEqual(abstract.node("main.cpp").inclusive_cost, (3,))

    def test_function_level_disambiguates_files(self):
        profile_keys = [FunctionKey("", "a.cpp", "init"), FunctionKey("", "b.cpp", "init")]
        profile = Profile(
            {},
            EventSpec(("Ir",)),
            {key: FunctionRecord((1,), (), index) for index, key in enumerate(profile_keys)},
        )
        graph = build_graph(profile)

        labels = [node.label for node in aggregate(graph, "function").nodes]

        self.assertEqual(labels, ["init [a.cpp]", "init [b.cpp]"])

    def test_function_level_keeps_own_inclusive(self):
        graph = graph_of({"f": ("", 1)}, [("f", "f", 3, 9)])

        node = aggregate(graph, "function").node("f")

        self.assertEqual(node.inclusive_cost, graph.nodes[FunctionKey("", "", "f")].inclusive_cost)

    def test_unknown_level(self):
        with self.assertRaises(ValueError):
            aggregate(graph_of({"main": ("", 1)}), "module")

    def test_aggregation_conserves_cost_and_calls(self):
        rng = random.Random(99)
        scopes = ["", "Main::", "OS::", "Urho3D::Engine::", "std::vector<int>::"]
        files = ["", "a.cpp", "b.cpp", "core/c.cpp"]
        for iteration in range(50):
            names = list({f"{rng.choice(scopes)}f{rng.randint(0, 20)}" for _ in range(rng.randint(1, 25))})
            functions = {name: (rng.choice(files), rng.randint(0, 1000)) for name in names}
            calls = [
                (caller, callee, rng.randint(1, 9), rng.randint(0, 500))
                for caller in names
                for callee in names
                if rng.random() < 0.1
            ]
            graph = graph_of(functions, calls)
            for level in ("function", "class", "file"):
                abstract = aggregate(graph, level)
                with self.subTest(iteration=iteration, level=level):
                    self.assertEqual(sum(node.self_cost[0] for node in abstract.nodes), graph.total[0])
                    self.assertEqual(
                        sum(edge.count for edge in abstract.edges), sum(edge.count for edge in graph.edges)
                    )
                    labels = [node.label for node in abstract.nodes]
                    self.assertEqual(len(labels), len(set(labels)))
                    members = [member for node in abstract.nodes for member in node.members]
                    self.assertEqual(len(members), len(set(members)))


class CategorizeTests(SimpleTestCase):
    def setUp(self):
        self.rules = default_ruleset()

    def test_default_ruleset(self):
        categories = [rule.category for rule in self.rules.rules]

        self.assertEqual(categories, ["initialization", "class-registration", "graphics", "window-system"])

    def test_member_leaf_decides(self):
        graph = graph_of({"register_core_types": ("register_core_types.cpp", 5)})

        abstract = categorize(aggregate(graph, "class"), self.rules)

        self.assertEqual(abstract.node(FREE_FUNCTIONS).category, "class-registration")

    def test_label_decides_first(self):
        graph = graph_of({"X11Window::create": ("x11_window.cpp", 5)})

        abstract = categorize(aggregate(graph, "class"), self.rules)

        self.assertEqual(abstract.node("X11Window").category, "window-system")

    def test_rule_order_is_significant(self):
        graph = graph_of({"initialize_theme": ("default_theme.cpp", 5)})

        abstract = categorize(aggregate(graph, "function"), self.rules)

        self.assertEqual(abstract.node("initialize_theme").category, "initialization")

    def test_member_rules_are_tried_in_order(self):
        graph = graph_of({"OS::get_singleton": ("os.cpp", 1), "OS::initialize_core": ("os.cpp", 1)})

        abstract = categorize(aggregate(graph, "class"), self.rules)

        self.assertEqual(abstract.node("OS").category, "initialization")

    def test_uncategorized(self):
        graph = graph_of({"MessageQueue::flush": ("message_queue.cpp", 1)})

        abstract = categorize(aggregate(graph, "class"), self.rules)

        self.assertEqual(abstract.node("MessageQueue").category, UNCATEGORIZED)

    def test_regex_rules(self):
        rules = CategoryRuleset((CategoryRule("io", (r"^(read|write)_",), is_regex=True),))
        graph = graph_of({"read_file": ("", 1), "prepare_read": ("", 1)})

        abstract = categorize(aggregate(graph, "function"), rules)

        self.assertEqual(abstract.node("read_file").category, "io")
        self.assertEqual(abstract.node("prepare_read").category, UNCATEGORIZED)

    def test_invalid_pattern_names_the_rule(self):
        rules = CategoryRuleset((CategoryRule("ok", ("init",)), CategoryRule("bad", ("(unclosed",), is_regex=True)))

        with self.assertRaises(InvalidPatternError) as context:
            categorize(aggregate(graph_of({"main": ("", 1)}), "class"), rules)

        self.assertEqual(context.exception.rule_index, 1)
        self.assertEqual(context.exception.exit_code, 3)

    def test_every_node_gets_a_category(self):
        graph = graph_of({"a::x": ("", 1), "b::init": ("", 1), "c::register": ("", 1)})

        abstract = categorize(aggregate(graph, "class"), self.rules)

        self.assertTrue(all(node.category for node in abstract.nodes))

    def test_category_view(self):
        graph = graph_of(
            {"main": ("", 1), "Main::setup": ("", 2), "ClassDB::register_class": ("", 4), "Queue::flush": ("", 8)},
            [("main", "Main::setup", 1, 6), ("Main::setup", "ClassDB::register_class", 3, 4), ("main", "Queue::flush", 1, 8)],
        )
        abstract = categorize(aggregate(graph, "class"), self.rules)

        view = aggregate_categories(abstract)

        self.assertEqual([node.label for node in view.nodes], [UNCATEGORIZED, "initialization", "class-registration"])
        self.assertEqual(view.node("initialization").self_cost, (2,))
        self.assertEqual(view.node("initialization").inclusive_cost, (6,))
        self.assertEqual(len(view.node(UNCATEGORIZED).members), 2)
        self.assertEqual(view.node("class-registration").category, "class-registration")
        self.assertEqual(sum(node.self_cost[0] for node in view.nodes), view.total[0])


class LoadRulesetTests(SimpleTestCase):
    def write(self, text):
        directory = tempfile.TemporaryDirectory()
        self.addCleanup(directory.cleanup)
        path = Path(directory.name) / "rules.yaml"
        path.write_text(text, encoding="utf-8")
        return path

    def test_valid_file(self):
        path = self.write("rules:\n  - category: io\n    patterns: [read, write]\n")

        ruleset = load_ruleset(path)

        self.assertEqual(ruleset.rules, (CategoryRule("io", ("read", "write"), False),))
        self.assertEqual(ruleset.name, "rules")

    def test_missing_file(self):
        with self.assertRaises(RulesetFileError):
            load_ruleset("/nonexistent/rules.yaml")

    def test_schema_violation(self):
        path = self.write("rules:\n  - category: io\n    pattern: read\n")

        with self.assertRaises(RulesetFileError) as context:
            load_ruleset(path)

        self.assertEqual(context.exception.exit_code, 3)

    def test_bad_regex_in_file(self):
        path = self.write("rules:\n  - category: io\n    patterns: ['[']\n    is_regex: true\n")

        with self.assertRaises(InvalidPatternError):
            load_ruleset(path)

    def test_configured_default(self):
        path = self.write("rules:\n  - category: only\n    patterns: [x]\n")

        with override_settings(ANATOMY={"DEFAULT_RULESET": str(path)}):
            self.assertEqual(default_ruleset().rules[0].category, "only")
