import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Mapping

from profiles.costs import CostVector, add_costs, cap_costs, zero_costs
from profiles.profile import EventSpec, FunctionKey

from .exceptions import EmptyGraphError, UnknownFunctionError
from .scc import tarjan

logger = logging.getLogger(__name__)

COST_KINDS = ("self", "inclusive")


@dataclass(frozen=True)
class FunctionNode:
    key: FunctionKey
    self_cost: CostVector
    inclusive_cost: CostVector
    first_record_index: int
    scc_id: int = 0
    cyclic: bool = False


@dataclass(frozen=True)
class CallEdge:
    caller: FunctionKey
    callee: FunctionKey
    count: int
    cost: CostVector


@dataclass(frozen=True)
class CallGraph:
    """
    Weighted call graph of one profile.

    ``nodes`` is ordered by first_record_index and ``edges`` by the
    (caller, callee) record order, so every traversal is deterministic.
    """

    events: EventSpec
    nodes: Mapping[FunctionKey, FunctionNode] = field(default_factory=dict)
    edges: tuple = ()
    total: CostVector = ()

    def node(self, key):
        try:
            return self.nodes[key]
        except KeyError:
            raise UnknownFunctionError(f"Unknown function: {key.name} ({key.file or 'no file'})")

    def ordered_nodes(self):
        return list(self.nodes.values())

    @cached_property
    def _outgoing(self):
        outgoing = {key: [] for key in self.nodes}
        for edge in self.edges:
            outgoing[edge.caller].append(edge)
        return outgoing

    @cached_property
    def _incoming(self):
        incoming = {key: [] for key in self.nodes}
        for edge in self.edges:
            incoming[edge.callee].append(edge)
        return incoming

    def outgoing(self, key):
        return self._outgoing[self.node(key).key]

    def incoming(self, key):
        return self._incoming[self.node(key).key]

    def successors(self, key):
        """Callees of ``key`` in first_record_index order."""
        return sorted(
            (edge.callee for edge in self.outgoing(key)),
            key=lambda callee: self.nodes[callee].first_record_index,
        )

    def predecessors(self, key):
        """Callers of ``key`` in first_record_index order."""
        return sorted(
            (edge.caller for edge in self.incoming(key)),
            key=lambda caller: self.nodes[caller].first_record_index,
        )

    def calls_in(self, key):
        """Number of calls received from other functions."""
        return sum(edge.count for edge in self.incoming(key) if edge.caller != edge.callee)


def build_graph(profile):
    """
    Build the call graph of ``profile``.

    Functions only seen as callees become zero-cost nodes numbered after the
    profiled functions. Inclusive cost is the self cost plus the cost the
    profiler attributed to each outgoing call; it is not propagated.
    """
    width = len(profile.events)
    self_costs = {}
    order = {}
    for key, record in profile.ordered_functions():
        self_costs[key] = record.self_cost
        order[key] = len(order)

    merged = {}
    for key, record in profile.ordered_functions():
        for call in record.calls:
            if call.callee not in order:
                order[call.callee] = len(order)
                self_costs[call.callee] = zero_costs(width)
            count, cost = merged.get((key, call.callee), (0, zero_costs(width)))
            merged[(key, call.callee)] = (count + call.count, add_costs(cost, call.inclusive_cost))

    edges = tuple(
        CallEdge(caller, callee, count, cost)
        for (caller, callee), (count, cost) in sorted(
            merged.items(), key=lambda item: (order[item[0][0]], order[item[0][1]])
        )
    )

    total = tuple(profile.summary) if profile.summary is not None else profile.self_total()
    inclusive = dict(self_costs)
    for edge in edges:
        inclusive[edge.caller] = add_costs(inclusive[edge.caller], edge.cost)

    recursive = {edge.caller for edge in edges if edge.caller == edge.callee}
    for key in recursive:
        inclusive[key] = cap_costs(inclusive[key], total)

    callees = {key: [] for key in order}
    for edge in edges:
        callees[edge.caller].append(edge.callee)
    components = tarjan(list(order), callees.__getitem__)
    components.sort(key=lambda component: min(order[member] for member in component))

    scc_ids = {}
    cyclic = set(recursive)
    for scc_id, component in enumerate(components):
        for member in component:
            scc_ids[member] = scc_id
        if len(component) > 1:
            cyclic.update(component)

    nodes = {
        key: FunctionNode(
            key=key,
            self_cost=self_costs[key],
            inclusive_cost=inclusive[key],
            first_record_index=index,
            scc_id=scc_ids[key],
            cyclic=key in cyclic,
        )
        for key, index in order.items()
    }
    logger.info(f"Built call graph: {len(nodes)} nodes, {len(edges)} edges, {len(components)} components")
    return CallGraph(events=profile.events, nodes=nodes, edges=edges, total=total)


def percent_of_total(graph, key, kind="inclusive", event_index=0):
    """
    Share of the program total spent in ``key``, as an exact fraction.

    Capped at 1, since members of a cycle can exceed the total; 0 when the
    total itself is 0.
    """
    if kind not in COST_KINDS:
        raise ValueError(f"kind must be one of {COST_KINDS}, got {kind!r}")
    node = graph.node(key)
    total = graph.total[event_index]
    if total == 0:
        return Fraction(0)
    cost = node.self_cost if kind == "self" else node.inclusive_cost
    return min(Fraction(cost[event_index], total), Fraction(1))


def entry_points(graph):
    """
    Functions nobody calls, most expensive first.

    Self-recursion does not count as being called. When every function is
    called (the graph is one big cycle) the single most expensive node is
    returned.
    """
    if not graph.nodes:
        raise EmptyGraphError()

    def rank(node):
        return (-node.inclusive_cost[0] if node.inclusive_cost else 0, node.first_record_index)

    roots = [
        node
        for node in graph.nodes.values()
        if all(caller == node.key for caller in graph.predecessors(node.key))
    ]
    if not roots:
        return [min(graph.nodes.values(), key=rank).key]
    return [node.key for node in sorted(roots, key=rank)]


def strongly_connected_components(graph):
    """Components indexed by ``scc_id``; members in first_record_index order."""
    components = {}
    for node in graph.nodes.values():
        components.setdefault(node.scc_id, []).append(node.key)
    return [tuple(components[scc_id]) for scc_id in sorted(components)]
