"""
DOT rendering of call graphs, abstract graphs and include graphs.

Nodes below ``DotOptions.threshold`` of the program total, or further than
``max_depth`` hops from the entry point, are left out. Output only depends
on the graph and the options.
"""

import logging
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional

from callgraph.graph import CallGraph, entry_points
from comparison.sequences import default_entry
from includes.scanner import IncludeGraph
from symbols.aggregation import AbstractGraph

from .exceptions import InvalidDotOptionsError

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLD = Fraction(1, 100)
DEFAULT_COLOR_MAP = {
    "initialization": "orange",
    "class-registration": "red",
    "graphics": "blue",
    "window-system": "gray",
}
DEFAULT_FILL = "white"
FONT = "Arial"
KEYWORDS = {"node", "edge", "graph", "digraph", "subgraph", "strict"}


@dataclass(frozen=True)
class DotOptions:
    threshold: Fraction = DEFAULT_THRESHOLD
    max_depth: Optional[int] = None
    color_map: Mapping = field(default_factory=lambda: dict(DEFAULT_COLOR_MAP))
    event_index: int = 0

    def __post_init__(self):
        if not 0 <= self.threshold <= 1:
            raise InvalidDotOptionsError(f"threshold must be in [0, 1], got {self.threshold}")
        if self.max_depth is not None and self.max_depth < 0:
            raise InvalidDotOptionsError(f"max_depth must be at least 0, got {self.max_depth}")
        if self.event_index < 0:
            raise InvalidDotOptionsError(f"event_index must be at least 0, got {self.event_index}")


@dataclass
class _Node:
    label: str
    self_cost: int = 0
    inclusive_cost: int = 0
    calls_in: int = 0
    category: Optional[str] = None
    frontier: bool = False


class DotWriter:
    """Writer for the DOT language (https://graphviz.org/doc/info/lang.html)."""

    def __init__(self):
        self.parts = []

    def getvalue(self):
        return "".join(self.parts)

    def begin_graph(self, name):
        self.write("digraph ")
        self.id(name)
        self.write(" {\n")

    def end_graph(self):
        self.write("}\n")

    def attr(self, what, **attrs):
        self.write("\t")
        self.write(what)
        self.attr_list(attrs)
        self.write(";\n")

    def node(self, node, **attrs):
        self.write("\t")
        self.id(node)
        self.attr_list(attrs)
        self.write(";\n")

    def edge(self, src, dst, **attrs):
        self.write("\t")
        self.id(src)
        self.write(" -> ")
        self.id(dst)
        self.attr_list(attrs)
        self.write(";\n")

    def attr_list(self, attrs):
        if not attrs:
            return
        self.write(" [")
        for position, name in enumerate(sorted(attrs)):
            if position:
                self.write(", ")
            self.id(name)
            self.write("=")
            self.id(attrs[name])
        self.write("]")

    def id(self, value):
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            text = str(value)
        elif isinstance(value, str):
            bare = value.isascii() and value.isidentifier() and value.lower() not in KEYWORDS
            text = value if bare else self.escape(value)
        else:
            raise TypeError(f"Cannot write {value!r} as a DOT id")
        self.write(text)

    def escape(self, text):
        text = text.replace("\\", r"\\").replace("\n", r"\n").replace("\t", r"\t").replace('"', r"\"")
        return f'"{text}"'

    def write(self, text):
        self.parts.append(text)


def _percent(part, total):
    return f"{float(min(Fraction(part, total), Fraction(1)) * 100):.2f}%"


def _call_graph_view(graph, event):
    keys = [node.key for node in graph.ordered_nodes()]
    nodes = {
        key: _Node(
            label=key.name,
            self_cost=graph.nodes[key].self_cost[event],
            inclusive_cost=graph.nodes[key].inclusive_cost[event],
            calls_in=graph.calls_in(key),
        )
        for key in keys
    }
    edges = [(edge.caller, edge.callee, edge.count) for edge in graph.edges]
    entry = entry_points(graph)[0] if keys else None
    return keys, nodes, edges, graph.successors, entry


def _abstract_view(graph, event):
    labels = [node.label for node in graph.nodes]
    nodes = {
        node.label: _Node(
            label=node.label,
            self_cost=node.self_cost[event] if node.self_cost else 0,
            inclusive_cost=node.inclusive_cost[event] if node.inclusive_cost else 0,
            calls_in=graph.calls_in(node.label),
            category=node.category,
        )
        for node in graph.nodes
    }
    edges = [(edge.source, edge.target, edge.count) for edge in graph.edges]
    entry = default_entry(graph) if labels else None
    if entry is not None and entry not in nodes:
        entry = graph.label_of_member[entry]
    return labels, nodes, edges, graph.successors, entry


def _include_view(graph):
    frontier = graph.frontier()
    names = list(graph.nodes) + frontier
    nodes = {name: _Node(label=name) for name in graph.nodes}
    nodes.update({name: _Node(label=name, frontier=True) for name in frontier})
    edges = [(edge.includer, edge.target, 1) for edge in graph.edges]
    for _, target, _ in edges:
        nodes[target].calls_in += 1
    successors = {name: [] for name in names}
    for source, target, _ in edges:
        successors[source].append(target)
    included = {target for _, target, _ in edges}
    entry = next((name for name in graph.nodes if name not in included), names[0] if names else None)
    return names, nodes, edges, successors.__getitem__, entry


def _depths(entry, successors):
    depth = {entry: 0}
    queue = deque([entry])
    while queue:
        current = queue.popleft()
        for child in successors(current):
            if child not in depth:
                depth[child] = depth[current] + 1
                queue.append(child)
    return depth


def emit_dot(graph, options=None):
    """
    Render ``graph`` as a DOT digraph.

    Parameters
        graph: a CallGraph, AbstractGraph or IncludeGraph.
        options (DotOptions): threshold, depth limit, colours and event.
    Returns
        str: the DOT text, ending in a newline.
    """
    options = options or DotOptions()
    event = options.event_index

    if isinstance(graph, IncludeGraph):
        order, nodes, edges, successors, entry = _include_view(graph)
        total = 0
        name = "includes"
    elif isinstance(graph, AbstractGraph):
        if graph.nodes and graph.total and event >= len(graph.total):
            raise InvalidDotOptionsError(f"event_index {event} out of range for {len(graph.total)} events")
        order, nodes, edges, successors, entry = _abstract_view(graph, event if graph.total else 0)
        total = graph.total[event] if graph.total else 0
        name = graph.level
    elif isinstance(graph, CallGraph):
        if graph.nodes and event >= len(graph.events):
            raise InvalidDotOptionsError(f"event_index {event} out of range for {len(graph.events)} events")
        order, nodes, edges, successors, entry = _call_graph_view(graph, event)
        total = graph.total[event] if graph.nodes else 0
        name = "callgraph"
    else:
        raise TypeError(f"Cannot render {type(graph).__name__} as DOT")

    kept = list(order)
    if total:
        kept = [key for key in kept if Fraction(nodes[key].inclusive_cost, total) >= options.threshold]
    if options.max_depth is not None and entry is not None:
        depth = _depths(entry, successors)
        kept = [key for key in kept if depth.get(key, options.max_depth + 1) <= options.max_depth]
    ids = {key: f"n{index}" for index, key in enumerate(order)}
    kept_set = set(kept)

    writer = DotWriter()
    writer.begin_graph(name)
    writer.attr("graph", fontname=FONT, nodesep="0.125", ranksep="0.25")
    writer.attr("node", fontname=FONT, height="0", shape="box", style="filled", width="0")
    writer.attr("edge", fontname=FONT)
    for key in kept:
        node = nodes[key]
        lines = [node.label]
        if total:
            lines.append(_percent(node.inclusive_cost, total))
            lines.append(f"({_percent(node.self_cost, total)})")
        lines.append(f"{node.calls_in}×")
        attrs = {"label": "\n".join(lines), "fillcolor": options.color_map.get(node.category, DEFAULT_FILL)}
        if node.frontier:
            attrs["style"] = "filled,dashed"
        writer.node(ids[key], **attrs)
    for source, target, count in edges:
        if source in kept_set and target in kept_set:
            writer.edge(ids[source], ids[target], label=f"{count}×")
    writer.end_graph()

    logger.debug(f"Emitted DOT with {len(kept)} of {len(order)} nodes")
    return writer.getvalue()
