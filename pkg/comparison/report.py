import logging
from dataclasses import dataclass, field
from fractions import Fraction

from symbols.aggregation import UNCATEGORIZED

from .matching import DEFAULT_FUZZY_THRESHOLD, match_pairs
from .sequences import ORDER_NOTE, InitSequence, diff_order, extract_init_sequence

logger = logging.getLogger(__name__)

DEFAULT_IDLE_THRESHOLD = Fraction(1, 100)
DEFAULT_REPEAT_THRESHOLD = 10


@dataclass(frozen=True)
class ComparisonReport:
    left: str
    right: str
    common: tuple = ()
    only_left: tuple = ()
    only_right: tuple = ()
    common_categories: tuple = ()
    only_left_categories: tuple = ()
    only_right_categories: tuple = ()
    left_sequence: InitSequence = field(default_factory=InitSequence)
    right_sequence: InitSequence = field(default_factory=InitSequence)
    order_inversions: tuple = ()
    notes: tuple = ()


def _categories(graph):
    return {node.category for node in graph.nodes if node.category and node.category != UNCATEGORIZED}


def _idle_notes(name, graph, idle_threshold):
    total = graph.total[0] if graph.total else 0
    if total == 0:
        return []
    notes = []
    for node in graph.nodes:
        if not node.category or node.category == UNCATEGORIZED:
            continue
        share = min(Fraction(node.inclusive_cost[0], total), Fraction(1))
        if share < idle_threshold:
            notes.append(
                f"{name}: {node.label} ({node.category}) is initialized but barely used: "
                f"{float(share * 100):.2f}% of total cost"
            )
    return notes


def _repeat_notes(name, graph, repeat_threshold):
    notes = []
    for node in graph.nodes:
        calls = graph.calls_in(node.label)
        if calls >= repeat_threshold:
            notes.append(f"{name}: {node.label} is called repeatedly ({calls} calls)")
    return notes


def _method_notes(name, graph, ruleset):
    predicates = ruleset.compile()
    notes = []
    for node in graph.nodes:
        if not node.category or node.category == UNCATEGORIZED:
            continue
        own = [
            leaf
            for leaf in node.member_leaves
            if next((rule.category for rule, matches in zip(ruleset.rules, predicates) if matches(leaf)), None)
            == node.category
        ]
        if len(own) > 1:
            notes.append(f"{name}: {node.label} has {len(own)} {node.category} methods ({', '.join(own)})")
    return notes


def compare(
    left,
    right,
    fuzzy_threshold=DEFAULT_FUZZY_THRESHOLD,
    idle_threshold=DEFAULT_IDLE_THRESHOLD,
    repeat_threshold=DEFAULT_REPEAT_THRESHOLD,
    ruleset=None,
    left_name="left",
    right_name="right",
):
    """
    Compare the anatomy of two categorized graphs.

    Nodes are paired one-to-one with the tiered matcher; the unpaired rest
    is reported per side. Initialization sequences are extracted from each
    side's default entry point and diffed by category.
    """
    pairs = match_pairs(left, right, fuzzy_threshold)
    paired_left = {pair.left for pair in pairs}
    paired_right = {pair.right for pair in pairs}

    left_sequence = extract_init_sequence(left)
    right_sequence = extract_init_sequence(right)

    left_categories, right_categories = _categories(left), _categories(right)

    notes = [ORDER_NOTE]
    for name, graph in ((left_name, left), (right_name, right)):
        notes.extend(_idle_notes(name, graph, idle_threshold))
        notes.extend(_repeat_notes(name, graph, repeat_threshold))
        if ruleset is not None:
            notes.extend(_method_notes(name, graph, ruleset))

    report = ComparisonReport(
        left=left_name,
        right=right_name,
        common=tuple(pairs),
        only_left=tuple(node.label for node in left.nodes if node.label not in paired_left),
        only_right=tuple(node.label for node in right.nodes if node.label not in paired_right),
        common_categories=tuple(sorted(left_categories & right_categories)),
        only_left_categories=tuple(sorted(left_categories - right_categories)),
        only_right_categories=tuple(sorted(right_categories - left_categories)),
        left_sequence=left_sequence,
        right_sequence=right_sequence,
        order_inversions=tuple(diff_order(left_sequence, right_sequence)),
        notes=tuple(notes),
    )
    logger.info(
        f"Compared {left_name} and {right_name}: {len(pairs)} common, "
        f"{len(report.only_left)} only in {left_name}, {len(report.only_right)} only in {right_name}"
    )
    return report
