"""
Cost vectors are plain tuples of non-negative integers, one entry per event.

Arithmetic stays in Python integers so conservation checks are exact.
"""

from typing import Iterable, Sequence

CostVector = tuple


def zero_costs(width: int) -> CostVector:
    return (0,) * width


def pad_costs(values: Sequence[int], width: int) -> CostVector:
    """
    Right-pad ``values`` with zeros up to ``width`` entries.

    Raises:
        ValueError: if there are more values than events.
    """
    if len(values) > width:
        raise ValueError(f"{len(values)} cost values for {width} events")
    return tuple(values) + (0,) * (width - len(values))


def add_costs(left: Sequence[int], right: Sequence[int]) -> CostVector:
    return tuple(a + b for a, b in zip(left, right))


def sum_costs(vectors: Iterable[Sequence[int]], width: int) -> CostVector:
    total = zero_costs(width)
    for vector in vectors:
        total = add_costs(total, vector)
    return total


def cap_costs(values: Sequence[int], ceiling: Sequence[int]) -> CostVector:
    return tuple(min(value, cap) for value, cap in zip(values, ceiling))
