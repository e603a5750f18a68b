import logging
from dataclasses import dataclass

from callgraph.graph import entry_points
from profiles.profile import FunctionKey
from symbols.aggregation import UNCATEGORIZED

from .exceptions import UnknownEntryError

logger = logging.getLogger(__name__)

ORDER_NOTE = (
    "Initialization order is approximated from call-record order "
    "(depth-first from the entry point); the profile holds no timestamps."
)


@dataclass(frozen=True)
class InitStep:
    label: str
    category: str
    first_record_index: int
    position: int


@dataclass(frozen=True)
class InitSequence:
    """Abstract nodes in the order they are first reached from the entry point."""

    steps: tuple = ()

    def __len__(self):
        return len(self.steps)

    def labels(self):
        return [step.label for step in self.steps]

    def categories(self):
        """Categories in order of first appearance."""
        seen = []
        for step in self.steps:
            if step.category not in seen:
                seen.append(step.category)
        return seen


def default_entry(graph):
    """First entry point of the underlying call graph, or the first uncalled node."""
    if graph.source is not None and graph.source.nodes:
        return entry_points(graph.source)[0]
    called = {edge.target for edge in graph.edges if edge.source != edge.target}
    for node in graph.nodes:
        if node.label not in called:
            return node.label
    return graph.nodes[0].label if graph.nodes else None


def _depth_first(start, successors):
    """Pre-order depth-first walk; children in the order ``successors`` gives them."""
    visited = {start}
    order = [start]
    stack = [iter(successors(start))]
    while stack:
        for child in stack[-1]:
            if child not in visited:
                visited.add(child)
                order.append(child)
                stack.append(iter(successors(child)))
                break
        else:
            stack.pop()
    return order


def extract_init_sequence(graph, entry=None):
    """
    Order in which the nodes of ``graph`` are first reached from ``entry``.

    The walk runs over the functions of the call graph the view was built
    from, callees in record order, and emits each abstract node at the first
    visit of one of its members. Views without a call graph (loaded from
    JSON) are walked over their own edges; ``entry`` may then be a label.

    Raises
        UnknownEntryError: if ``entry`` is not in the graph.
    """
    if entry is None:
        entry = default_entry(graph)
    if entry is None:
        return InitSequence()

    if graph.source is not None:
        if entry not in graph.source.nodes:
            raise UnknownEntryError(f"Unknown entry point: {entry}")
        label_of = graph.label_of_member
        labels = []
        for function in _depth_first(entry, graph.source.successors):
            label = label_of[function]
            if label not in labels:
                labels.append(label)
    else:
        if isinstance(entry, FunctionKey):
            entry = graph.label_of_member.get(entry, entry)
        if entry not in graph:
            raise UnknownEntryError(f"Unknown entry point: {entry}")
        labels = _depth_first(entry, graph.successors)

    steps = tuple(
        InitStep(
            label=label,
            category=graph.node(label).category or UNCATEGORIZED,
            first_record_index=graph.node(label).first_record_index,
            position=position,
        )
        for position, label in enumerate(labels)
    )
    logger.debug(f"Initialization sequence of {len(steps)} nodes from {entry}")
    return InitSequence(steps)


def diff_order(left, right):
    """
    Category pairs whose first occurrences come in opposite orders.

    Only categories present in both sequences count; "uncategorized" never
    does. Each pair is given in its order in ``left``; the list is sorted by
    the pair's categories.
    """
    def first_positions(sequence):
        positions = {}
        for step in sequence.steps:
            if step.category != UNCATEGORIZED:
                positions.setdefault(step.category, step.position)
        return positions

    left_first, right_first = first_positions(left), first_positions(right)
    shared = [category for category in left_first if category in right_first]

    inversions = []
    for index, first in enumerate(shared):
        for second in shared[index + 1:]:
            left_order = left_first[first] < left_first[second]
            if left_order != (right_first[first] < right_first[second]):
                inversions.append((first, second) if left_order else (second, first))
    return sorted(inversions, key=lambda pair: tuple(sorted(pair)))
