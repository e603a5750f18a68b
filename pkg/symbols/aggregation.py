import logging
from collections import Counter
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Any, Optional

from profiles.costs import CostVector, add_costs, zero_costs
from profiles.profile import EventSpec

from .names import parse_symbol

logger = logging.getLogger(__name__)

LEVELS = ("function", "class", "file", "category")
FREE_FUNCTIONS = "<free functions>"
UNKNOWN_FILE = "<unknown>"
UNCATEGORIZED = "uncategorized"


@dataclass(frozen=True)
class AbstractNode:
    label: str
    members: frozenset
    self_cost: CostVector
    inclusive_cost: CostVector
    first_record_index: int
    category: Optional[str] = None

    @cached_property
    def member_leaves(self):
        """Leaf names of the member functions, sorted."""
        return tuple(sorted({parse_symbol(member.name).leaf for member in self.members}))


@dataclass(frozen=True)
class AbstractEdge:
    source: str
    target: str
    count: int
    cost: CostVector


@dataclass(frozen=True)
class AbstractGraph:
    """
    A call graph (or include graph) seen at a coarser granularity.

    ``source`` is the call graph the view was built from, when there is one;
    it is not part of the value and is lost on serialization.
    """

    level: str
    events: EventSpec
    nodes: tuple = ()
    edges: tuple = ()
    total: CostVector = ()
    source: Any = field(default=None, compare=False, repr=False)

    @cached_property
    def _by_label(self):
        return {node.label: node for node in self.nodes}

    def node(self, label):
        return self._by_label[label]

    def __contains__(self, label):
        return label in self._by_label

    @cached_property
    def label_of_member(self):
        return {member: node.label for node in self.nodes for member in node.members}

    def successors(self, label):
        index = self._by_label
        return sorted(
            {edge.target for edge in self.edges if edge.source == label},
            key=lambda target: index[target].first_record_index,
        )

    def calls_in(self, label):
        return sum(edge.count for edge in self.edges if edge.target == label and edge.source != label)

    def with_categories(self, categories):
        """Copy with ``categories`` (label -> category) applied."""
        nodes = tuple(replace(node, category=categories.get(node.label, node.category)) for node in self.nodes)
        return replace(self, nodes=nodes)


def merge_groups(level, rows, edges, total, events, source, own_inclusive=False, label_is_category=False):
    """
    Group ``rows`` by label and merge the edges between groups.

    rows: (label, members, self_cost, inclusive_cost, first_record_index) in
    first_record_index order. edges: (source label, target label, count, cost).
    """
    width = len(total)
    groups = {}
    for label, members, self_cost, inclusive_cost, index in rows:
        group = groups.get(label)
        if group is None:
            group = groups[label] = {
                "members": set(),
                "self_cost": zero_costs(width),
                "inclusive_cost": inclusive_cost,
                "first_record_index": index,
            }
        group["members"].update(members)
        group["self_cost"] = add_costs(group["self_cost"], self_cost)
        group["first_record_index"] = min(group["first_record_index"], index)

    merged = {}
    leaving = {label: zero_costs(width) for label in groups}
    for source_label, target_label, count, cost in edges:
        previous_count, previous_cost = merged.get((source_label, target_label), (0, zero_costs(width)))
        merged[(source_label, target_label)] = (previous_count + count, add_costs(previous_cost, cost))
        if source_label != target_label:
            leaving[source_label] = add_costs(leaving[source_label], cost)

    nodes = tuple(
        AbstractNode(
            label=label,
            members=frozenset(group["members"]),
            self_cost=group["self_cost"],
            inclusive_cost=group["inclusive_cost"] if own_inclusive else add_costs(group["self_cost"], leaving[label]),
            first_record_index=group["first_record_index"],
            category=label if label_is_category else None,
        )
        for label, group in sorted(groups.items(), key=lambda item: item[1]["first_record_index"])
    )
    order = {node.label: node.first_record_index for node in nodes}
    abstract_edges = tuple(
        AbstractEdge(source_label, target_label, count, cost)
        for (source_label, target_label), (count, cost) in sorted(
            merged.items(), key=lambda item: (order[item[0][0]], order[item[0][1]])
        )
    )
    logger.debug(f"Aggregated to {level}: {len(nodes)} nodes, {len(abstract_edges)} edges")
    return AbstractGraph(level=level, events=events, nodes=nodes, edges=abstract_edges, total=total, source=source)


def _function_labels(graph):
    names = Counter(key.name for key in graph.nodes)
    located = Counter((key.name, key.file) for key in graph.nodes)
    labels = {}
    for key in graph.nodes:
        if names[key.name] == 1:
            labels[key] = key.name
        elif located[(key.name, key.file)] == 1:
            labels[key] = f"{key.name} [{key.file or UNKNOWN_FILE}]"
        else:
            labels[key] = f"{key.name} [{key.file or UNKNOWN_FILE}, {key.obj or UNKNOWN_FILE}]"
    return labels


def aggregate(graph, level="class"):
    """
    Group the functions of ``graph`` by class, by file or not at all.

    class: the scope of the symbol ("<free functions>" when unscoped).
    file: the source file ("<unknown>" when the profile has none).
    function: one node per function; clashing names get their file appended.

    Edges inside a group become a self-loop on it. A group's inclusive cost is
    its self cost plus the cost of the calls leaving it.
    """
    if level == "function":
        labels = _function_labels(graph)
    elif level == "class":
        labels = {key: parse_symbol(key.name).scope or FREE_FUNCTIONS for key in graph.nodes}
    elif level == "file":
        labels = {key: key.file or UNKNOWN_FILE for key in graph.nodes}
    else:
        raise ValueError(f"level must be one of 'function', 'class', 'file', got {level!r}")

    rows = [
        (labels[node.key], {node.key}, node.self_cost, node.inclusive_cost, node.first_record_index)
        for node in graph.ordered_nodes()
    ]
    edges = [(labels[edge.caller], labels[edge.callee], edge.count, edge.cost) for edge in graph.edges]
    return merge_groups(level, rows, edges, graph.total, graph.events, graph, own_inclusive=level == "function")


def aggregate_categories(graph):
    """One node per category of a categorized graph; unset categories count as uncategorized."""
    labels = {node.label: node.category or UNCATEGORIZED for node in graph.nodes}
    rows = [
        (labels[node.label], node.members, node.self_cost, node.inclusive_cost, node.first_record_index)
        for node in graph.nodes
    ]
    edges = [(labels[edge.source], labels[edge.target], edge.count, edge.cost) for edge in graph.edges]
    return merge_groups("category", rows, edges, graph.total, graph.events, graph.source, label_is_category=True)
