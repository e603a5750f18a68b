import itertools


def tarjan(vertices, successors):
    """
    Strongly connected components of a directed graph.

    Iterative form of Tarjan's algorithm, so deep call chains and long include
    chains do not hit the recursion limit.

    Parameters
        vertices: iterable of hashable vertices; roots are tried in this order.
        successors: callable returning the successors of a vertex.
    Returns
        list[list]: components in reverse topological order (a component comes
        before every component that reaches it).
    """
    counter = itertools.count()
    index = {}
    lowlink = {}
    stack = []
    on_stack = set()
    components = []

    def visit(vertex):
        index[vertex] = lowlink[vertex] = next(counter)
        stack.append(vertex)
        on_stack.add(vertex)
        return vertex, iter(successors(vertex))

    for root in vertices:
        if root in index:
            continue
        work = [visit(root)]
        while work:
            vertex, children = work[-1]
            for child in children:
                if child not in index:
                    work.append(visit(child))
                    break
                if child in on_stack:
                    lowlink[vertex] = min(lowlink[vertex], index[child])
            else:
                work.pop()
                if work:
                    parent = work[-1][0]
                    lowlink[parent] = min(lowlink[parent], lowlink[vertex])
                if lowlink[vertex] == index[vertex]:
                    component = []
                    while True:
                        member = stack.pop()
                        on_stack.discard(member)
                        component.append(member)
                        if member == vertex:
                            break
                    components.append(component)
    return components
