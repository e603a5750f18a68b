import random
from fractions import Fraction
from pathlib import Path

from django.test import SimpleTestCase

from profiles.parser import load_profile
from profiles.profile import CallRecord, EventSpec, FunctionKey, FunctionRecord, Profile

from .exceptions import EmptyGraphError, UnknownFunctionError
from .graph import CallGraph, build_graph, entry_points, percent_of_total, strongly_connected_components
from .scc import tarjan

PROFILES = Path(__file__).resolve().parent.parent / "profiles" / "testdata"


def key(name, file=""):
    return FunctionKey("", file, name)


def make_profile(self_costs, calls=(), summary=None):
    """
    Build a one-event profile from ``{name: self}`` and ``(caller, callee, count, cost)``.
    """
    records = {name: [] for name in self_costs}
    for caller, callee, count, cost in calls:
        records[caller].append(CallRecord(key(callee), count, (cost,)))
    functions = {
        key(name): FunctionRecord((cost,), tuple(records[name]), index)
        for index, (name, cost) in enumerate(self_costs.items())
    }
    return Profile({}, EventSpec(("Ir",)), functions, None if summary is None else (summary,))


def expanded_inclusive(profile):
    """
    Inclusive costs by walking the expanded call tree.

    Every invocation of a function is assumed to cost the same; the tree is
    expanded from each node and scaled by its number of invocations.
    """
    invocations = {}
    for function, record in profile.functions.items():
        invocations.setdefault(function, 0)
        for call in record.calls:
            invocations[call.callee] = invocations.get(call.callee, 0) + call.count
    for function in invocations:
        invocations[function] = invocations[function] or 1

    def expand(function):
        record = profile.functions.get(function)
        if record is None:
            return Fraction(0)
        cost = Fraction(record.self_cost[0], invocations[function])
        for call in record.calls:
            cost += Fraction(call.count, invocations[function]) * expand(call.callee)
        return cost

    return {function: invocations[function] * expand(function) for function in profile.functions}


def reachability_components(vertices, successors):
    reach = {}
    for vertex in vertices:
        seen = {vertex}
        frontier = [vertex]
        while frontier:
            current = frontier.pop()
            for nxt in successors[current]:
                if nxt not in seen:
                    seen.add(nxt)
                    frontier.append(nxt)
        reach[vertex] = seen
    return {
        frozenset(other for other in vertices if other in reach[vertex] and vertex in reach[other])
        for vertex in vertices
    }


class BuildGraphTests(SimpleTestCase):
    def test_minimal_fixture(self):
        graph = build_graph(load_profile(PROFILES / "minimal.cg"))

        main, helper = key("main", "main.c"), key("helper", "main.c")
        self.assertEqual(len(graph.nodes), 2)
        self.assertEqual(len(graph.edges), 1)
        self.assertEqual((graph.edges[0].count, graph.edges[0].cost), (1, (400,)))
        self.assertEqual(graph.nodes[main].inclusive_cost, (420,))
        self.assertEqual(graph.nodes[helper].inclusive_cost, (400,))
        self.assertEqual(graph.total, (420,))

    def test_single_function(self):
        graph = build_graph(make_profile({"main": 7}))

        node = graph.nodes[key("main")]
        self.assertEqual(graph.edges, ())
        self.assertEqual(node.inclusive_cost, node.self_cost)
        self.assertFalse(node.cyclic)

    def test_self_recursion_is_cyclic_and_capped(self):
        graph = build_graph(load_profile(PROFILES / "recursion.cg"))

        fact = graph.nodes[key("fact")]
        self.assertTrue(fact.cyclic)
        self.assertEqual(fact.inclusive_cost, (55,))
        self.assertEqual(strongly_connected_components(graph)[fact.scc_id], (key("fact"),))
        self.assertEqual(graph.nodes[key("main")].inclusive_cost, (55,))

    def test_mutual_recursion_shares_a_component(self):
        graph = build_graph(load_profile(PROFILES / "cycle.cg"))

        ping, pong = graph.nodes[key("ping")], graph.nodes[key("pong")]
        self.assertEqual(ping.scc_id, pong.scc_id)
        self.assertTrue(ping.cyclic and pong.cyclic)
        self.assertFalse(graph.nodes[key("log")].cyclic)
        self.assertEqual(ping.inclusive_cost, (90,))

    def test_callee_only_functions_become_nodes(self):
        graph = build_graph(make_profile({"main": 5}, [("main", "XOpenDisplay", 2, 0)]))

        frontier = graph.nodes[key("XOpenDisplay")]
        self.assertEqual(frontier.self_cost, (0,))
        self.assertEqual(frontier.first_record_index, 1)

    def test_parallel_calls_are_merged(self):
        profile = make_profile({"a": 1, "b": 2}, [("a", "b", 2, 10), ("a", "b", 3, 5)])

        graph = build_graph(profile)

        self.assertEqual(len(graph.edges), 1)
        self.assertEqual((graph.edges[0].count, graph.edges[0].cost), (5, (15,)))

    def test_conservation_and_edge_counts(self):
        for name in ("minimal.cg", "compressed.cg", "multipart.cg", "recursion.cg", "cycle.cg", "acyclic.cg"):
            with self.subTest(fixture=name):
                profile = load_profile(PROFILES / name)
                graph = build_graph(profile)
                for event in range(len(profile.events)):
                    self.assertEqual(sum(node.self_cost[event] for node in graph.nodes.values()), graph.total[event])
                recorded = sum(call.count for record in profile.functions.values() for call in record.calls)
                self.assertEqual(sum(edge.count for edge in graph.edges), recorded)

    def test_acyclic_entry_covers_the_total(self):
        graph = build_graph(load_profile(PROFILES / "acyclic.cg"))

        (entry,) = entry_points(graph)
        self.assertEqual(graph.nodes[entry].inclusive_cost, graph.total)

    def test_inclusive_matches_expanded_call_tree(self):
        profile = load_profile(PROFILES / "acyclic.cg")

        graph = build_graph(profile)

        expected = expanded_inclusive(profile)
        self.assertEqual(expected[key("main", "app.c")], 370)
        for function, cost in expected.items():
            self.assertEqual(graph.nodes[function].inclusive_cost[0], cost)

    def test_adjacency_helpers(self):
        graph = build_graph(load_profile(PROFILES / "acyclic.cg"))

        run, load = key("run", "app.c"), key("load", "app.c")
        self.assertEqual(graph.successors(run), [load, key("draw", "app.c")])
        self.assertEqual(graph.predecessors(load), [key("init", "app.c"), run])
        self.assertEqual(graph.calls_in(load), 6)


class PercentOfTotalTests(SimpleTestCase):
    def setUp(self):
        self.graph = build_graph(load_profile(PROFILES / "minimal.cg"))

    def test_entry_is_everything(self):
        self.assertEqual(percent_of_total(self.graph, key("main", "main.c"), "inclusive", 0), 1)

    def test_callee_share(self):
        self.assertEqual(percent_of_total(self.graph, key("helper", "main.c")), Fraction(400, 420))

    def test_self_share(self):
        self.assertEqual(percent_of_total(self.graph, key("main", "main.c"), "self"), Fraction(20, 420))

    def test_zero_total(self):
        graph = build_graph(make_profile({"idle": 0}))

        self.assertEqual(percent_of_total(graph, key("idle")), 0)

    def test_unknown_function(self):
        with self.assertRaises(UnknownFunctionError):
            percent_of_total(self.graph, key("missing"))

    def test_share_is_capped(self):
        graph = build_graph(load_profile(PROFILES / "cycle.cg"))

        for node in graph.nodes.values():
            share = percent_of_total(graph, node.key)
            self.assertTrue(0 <= share <= 1)


class EntryPointTests(SimpleTestCase):
    def test_minimal_fixture(self):
        graph = build_graph(load_profile(PROFILES / "minimal.cg"))

        self.assertEqual(entry_points(graph), [key("main", "main.c")])

    def test_roots_ordered_by_inclusive_cost(self):
        graph = build_graph(make_profile({"b": 50, "a": 100}))

        self.assertEqual(entry_points(graph), [key("a"), key("b")])

    def test_fully_cyclic_graph(self):
        profile = make_profile({"a": 10, "b": 5}, [("a", "b", 1, 5), ("b", "a", 1, 10)])

        self.assertEqual(entry_points(build_graph(profile)), [key("a")])

    def test_self_recursion_does_not_hide_a_root(self):
        profile = make_profile({"main": 1, "f": 4}, [("main", "f", 1, 4), ("f", "f", 2, 3)])

        self.assertEqual(entry_points(build_graph(profile)), [key("main")])

    def test_self_recursive_function_is_still_a_root(self):
        profile = make_profile({"a": 1, "b": 10}, [("a", "a", 2, 1)])

        self.assertEqual(entry_points(build_graph(profile)), [key("b"), key("a")])

    def test_empty_graph(self):
        with self.assertRaises(EmptyGraphError):
            entry_points(CallGraph(events=EventSpec(("Ir",)), total=(0,)))


class StronglyConnectedComponentTests(SimpleTestCase):
    def test_chain(self):
        profile = make_profile({"a": 1, "b": 1, "c": 1}, [("a", "b", 1, 2), ("b", "c", 1, 1)])

        components = strongly_connected_components(build_graph(profile))

        self.assertEqual(components, [(key("a"),), (key("b"),), (key("c"),)])

    def test_two_cycle_and_singleton(self):
        profile = make_profile({"c": 1, "a": 1, "b": 1}, [("a", "b", 1, 1), ("b", "a", 1, 1)])

        components = strongly_connected_components(build_graph(profile))

        self.assertEqual(components, [(key("c"),), (key("a"), key("b"))])

    def test_deep_chain_does_not_recurse(self):
        size = 5000
        successors = {index: [index + 1] for index in range(size - 1)}
        successors[size - 1] = [0]

        components = tarjan(range(size), successors.__getitem__)

        self.assertEqual(len(components), 1)
        self.assertEqual(len(components[0]), size)

    def test_random_graphs_match_reachability(self):
        rng = random.Random(1729)
        for iteration in range(100):
            size = rng.randint(1, 50)
            density = rng.choice([0.02, 0.05, 0.1, 0.2])
            names = [f"f{index}" for index in range(size)]
            calls = [
                (caller, callee, rng.randint(1, 5), rng.randint(0, 100))
                for caller in names
                for callee in names
                if rng.random() < density
            ]
            graph = build_graph(make_profile({name: rng.randint(0, 100) for name in names}, calls))

            successors = {key(name): [] for name in names}
            for caller, callee, _, _ in calls:
                successors[key(caller)].append(key(callee))
            expected = reachability_components(list(graph.nodes), successors)
            components = strongly_connected_components(graph)

            with self.subTest(iteration=iteration, size=size):
                self.assertEqual({frozenset(component) for component in components}, expected)
                firsts = [graph.nodes[component[0]].first_record_index for component in components]
                self.assertEqual(firsts, sorted(firsts))
