"""Plain-text tables and reports for the terminal."""

from fractions import Fraction

from callgraph.graph import COST_KINDS, percent_of_total
from comparison.matching import UNMATCHED
from symbols.aggregation import UNCATEGORIZED


def _percent(share):
    return f"{float(share * 100):.2f}%"


def _share(cost, total):
    return min(Fraction(cost, total), Fraction(1)) if total else Fraction(0)


def emit_top(graph, n=10, kind="self", event_index=0):
    """
    Table of the ``n`` most expensive functions of a call graph.

    Columns: rank, cost, share of the total (capped at 100%), calls in,
    name. Equal costs keep record order.
    """
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    if kind not in COST_KINDS:
        raise ValueError(f"kind must be one of {COST_KINDS}, got {kind!r}")

    def cost(node):
        vector = node.self_cost if kind == "self" else node.inclusive_cost
        return vector[event_index]

    ranked = sorted(graph.ordered_nodes(), key=lambda node: (-cost(node), node.first_record_index))[:n]
    event = graph.events.names[event_index] if graph.events.names else ""
    width = max([len(str(cost(node))) for node in ranked] + [len(event), 4])
    lines = [f"{'rank':>4}  {event:>{width}}  {'%':>7}  {'calls':>7}  function"]
    for rank, node in enumerate(ranked, start=1):
        share = percent_of_total(graph, node.key, kind, event_index)
        lines.append(
            f"{rank:>4}  {cost(node):>{width}}  {_percent(share):>7}  {graph.calls_in(node.key):>7}  {node.key.name}"
        )
    return "\n".join(lines)


def render_inspect(profile, graph):
    """Header fields, events and the function / call / total summary line."""
    lines = [f"{key}: {value}" for key, value in profile.header.items()]
    lines.append(f"events: {' '.join(profile.events.names)}")
    totals = ", ".join(f"total {name}: {value}" for name, value in zip(profile.events.names, graph.total))
    summary = f"functions: {len(profile.functions)}, calls: {len(graph.edges)}"
    lines.append(f"{summary}, {totals}" if totals else summary)
    return "\n".join(lines)


def render_graph(graph, event_index=0):
    """One line per node of an abstract graph: shares, calls in and category."""
    total = graph.total[event_index] if graph.total else 0
    lines = [f"{graph.level}: {len(graph.nodes)} nodes, {len(graph.edges)} edges"]
    for node in graph.nodes:
        inclusive = node.inclusive_cost[event_index] if node.inclusive_cost else 0
        own = node.self_cost[event_index] if node.self_cost else 0
        lines.append(
            f"  {node.label}  {_percent(_share(inclusive, total))} ({_percent(_share(own, total))})"
            f"  {graph.calls_in(node.label)}x  [{node.category or UNCATEGORIZED}]"
        )
    return "\n".join(lines)


def render_matches(report):
    lines = [f"reference: {report.reference}"]
    for result in report.results:
        if result.tier == UNMATCHED:
            lines.append(f"  {result.component}: unmatched")
            continue
        evidence = ", ".join(result.evidence)
        lines.append(f"  {result.component} -> {result.matched_label} [{result.tier} {result.score}] ({evidence})")
    matched = len(report.results) - len(report.unmatched)
    lines.append(f"matched {matched} of {len(report.results)} components")
    return "\n".join(lines)


def render_comparison(report):
    lines = [f"{report.left} vs {report.right}", "", "common:"]
    lines.extend(f"  {pair.left} <-> {pair.right} [{pair.tier} {pair.score}]" for pair in report.common)
    lines.append(f"only in {report.left}:")
    lines.extend(f"  {label}" for label in report.only_left)
    lines.append(f"only in {report.right}:")
    lines.extend(f"  {label}" for label in report.only_right)
    lines.append("")
    lines.append(f"categories in common: {', '.join(report.common_categories) or '-'}")
    lines.append(f"categories only in {report.left}: {', '.join(report.only_left_categories) or '-'}")
    lines.append(f"categories only in {report.right}: {', '.join(report.only_right_categories) or '-'}")
    lines.append(f"{report.left} initialization: {' > '.join(report.left_sequence.categories()) or '-'}")
    lines.append(f"{report.right} initialization: {' > '.join(report.right_sequence.categories()) or '-'}")
    lines.append("order inversions:")
    lines.extend(
        f"  {report.left} initializes {first} before {second}, {report.right} the other way round"
        for first, second in report.order_inversions
    )
    lines.append("")
    lines.append("notes:")
    lines.extend(f"  {note}" for note in report.notes)
    return "\n".join(lines)


def render_includes(graph, cycles=None):
    lines = [f"{graph.scan_root}: {len(graph.nodes)} files, {len(graph.edges)} includes"]
    for edge in graph.edges:
        target = edge.resolved if edge.resolved is not None else f"{edge.name} (unresolved)"
        lines.append(f"  {edge.includer} -> {target}")
    frontier = graph.frontier()
    if frontier:
        lines.append(f"unresolved: {', '.join(frontier)}")
    if cycles is not None:
        lines.append(f"cycles: {len(cycles)}")
        lines.extend(f"  {' -> '.join(cycle + cycle[:1])}" for cycle in cycles)
    return "\n".join(lines)
