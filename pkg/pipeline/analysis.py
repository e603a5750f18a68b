"""Steps shared by the management commands and the REST views."""

import logging
from concurrent.futures import ThreadPoolExecutor

from anatomy.exceptions import ConfigurationError
from callgraph.graph import build_graph
from comparison.report import compare
from symbols.aggregation import aggregate, aggregate_categories
from symbols.categories import categorize, default_ruleset, load_ruleset

from .config import CALL_LEVEL

logger = logging.getLogger(__name__)

COMPARE_LEVELS = ("function", "class", "file")


def ruleset_for(config):
    return load_ruleset(config.ruleset_path) if config.ruleset_path else default_ruleset()


def graph_view(profile, level, ruleset):
    """
    The graph of ``profile`` at ``level``.

    ``call`` is the call graph itself; every other level is an aggregated,
    categorized view. ``category`` groups a categorized class view by
    category.
    """
    graph = build_graph(profile)
    if level == CALL_LEVEL:
        return graph
    base_level = "class" if level == "category" else level
    view = categorize(aggregate(graph, base_level), ruleset)
    if level == "category":
        view = aggregate_categories(view)
    logger.info(f"Built {level} view: {len(view.nodes)} nodes, {len(view.edges)} edges")
    return view


def load_both(loader, left, right, workers=2):
    """
    Load two inputs with ``loader``, concurrently when ``workers`` allows.

    Results come back in argument order; an error from either side is raised
    after both loads have finished.
    """
    with ThreadPoolExecutor(max_workers=max(1, min(workers, 2))) as executor:
        futures = [executor.submit(loader, source) for source in (left, right)]
        exceptions = [future.exception() for future in futures]
    for error in exceptions:
        if error is not None:
            raise error
    return futures[0].result(), futures[1].result()


def compare_profiles(left, right, config, ruleset, left_name, right_name, level="class"):
    """Categorized ``level`` views of two profiles, compared."""
    left_view = graph_view(left, level, ruleset)
    right_view = graph_view(right, level, ruleset)
    return compare(
        left_view,
        right_view,
        fuzzy_threshold=config.fuzzy_threshold,
        idle_threshold=config.idle_threshold,
        repeat_threshold=config.repeat_threshold,
        ruleset=ruleset,
        left_name=left_name,
        right_name=right_name,
    )


def event_index(events, name):
    """Position of the event called ``name``; the first event when no name is given."""
    if name is None:
        return 0
    try:
        return events.index(name)
    except ValueError:
        raise ConfigurationError(
            f"Unknown event {name!r}; the profile records {', '.join(events.names) or 'no events'}"
        )
