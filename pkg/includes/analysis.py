import logging
import posixpath
from collections import deque

from callgraph.scc import tarjan
from profiles.profile import EventSpec, FunctionKey
from symbols.aggregation import merge_groups

logger = logging.getLogger(__name__)

ROOT_GROUP = "."
UNRESOLVED_GROUP = "<unresolved>"


def directory_group(path, depth):
    parts = posixpath.dirname(path).split("/") if posixpath.dirname(path) else []
    return "/".join(parts[:depth]) or ROOT_GROUP


def aggregate_dirs(graph, depth=1, include_frontier=False):
    """
    Directory-level view of an include graph.

    Files group by the first ``depth`` components of their directory; files
    at the top of the tree group under ".". Edge counts are numbers of
    file-level includes and every cost is empty. Unresolved headers are left
    out unless ``include_frontier`` is set, in which case they share one
    "<unresolved>" node.
    """
    if depth < 1:
        raise ValueError(f"depth must be at least 1, got {depth}")

    labels = {path: directory_group(path, depth) for path in graph.nodes}
    rows = [(labels[path], {FunctionKey("", path, path)}, (), (), index) for index, path in enumerate(graph.nodes)]
    edges = [(labels[edge.includer], labels[edge.resolved], 1, ()) for edge in graph.resolved_edges()]

    if include_frontier:
        frontier = graph.frontier()
        if frontier:
            members = {FunctionKey("", "", name) for name in frontier}
            rows.append((UNRESOLVED_GROUP, members, (), (), len(graph.nodes)))
        edges.extend(
            (labels[edge.includer], UNRESOLVED_GROUP, 1, ()) for edge in graph.edges if edge.resolved is None
        )

    return merge_groups("directory", rows, edges, (), EventSpec(), None)


def _shortest_cycle(start, successors):
    parents = {start: None}
    queue = deque([start])
    while queue:
        current = queue.popleft()
        for child in successors(current):
            if child == start:
                cycle = [current]
                while parents[cycle[-1]] is not None:
                    cycle.append(parents[cycle[-1]])
                return cycle[::-1]
            if child not in parents:
                parents[child] = current
                queue.append(child)
    return [start]


def find_cycles(graph):
    """
    One include cycle per group of mutually including files.

    Each cycle is the shortest one through the smallest file of its group,
    listed from that file on; the cycles come sorted by that file.
    """
    successors = {path: set() for path in graph.nodes}
    for edge in graph.resolved_edges():
        successors[edge.includer].add(edge.resolved)

    cycles = []
    for component in tarjan(graph.nodes, lambda path: sorted(successors[path])):
        if len(component) < 2:
            continue
        members = set(component)

        def inside(path, members=members):
            return [child for child in sorted(successors[path]) if child in members]

        cycles.append(_shortest_cycle(min(members), inside))

    cycles.sort(key=lambda cycle: cycle[0])
    logger.debug(f"Found {len(cycles)} include cycles")
    return cycles
