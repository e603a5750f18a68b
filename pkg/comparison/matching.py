"""
Name-based matching of graph nodes against reference components, and of the
nodes of two systems against each other.

Three tiers, strongest first:

    exact            case-insensitive label equality (name or alias)
    fuzzy            token-set Jaccard >= threshold, or one token set
                     contains the other; score = Jaccard
    method-evidence  enough shared method names among the member leaves;
                     between two systems, generic lifecycle names such as
                     ``init`` never count as shared evidence
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from symbols.names import tokenize

logger = logging.getLogger(__name__)

EXACT = "exact"
FUZZY = "fuzzy"
METHOD_EVIDENCE = "method-evidence"
UNMATCHED = "unmatched"
TIERS = (EXACT, FUZZY, METHOD_EVIDENCE, UNMATCHED)
TIER_RANK = {tier: rank for rank, tier in enumerate(TIERS)}

DEFAULT_FUZZY_THRESHOLD = Fraction(1, 2)

# Lifecycle method names too common to count as shared evidence.
GENERIC_LEAVES = frozenset({"init", "initialize", "update"})


@dataclass(frozen=True)
class MatchResult:
    component: str
    matched_label: Optional[str] = None
    tier: str = UNMATCHED
    evidence: tuple = ()
    score: Fraction = Fraction(0)

    @property
    def matched(self):
        return self.matched_label is not None


@dataclass(frozen=True)
class NodePair:
    """A node of the left system matched to a node of the right one."""

    left: str
    right: str
    tier: str
    score: Fraction
    evidence: tuple = ()


def jaccard(left, right):
    union = left | right
    return Fraction(len(left & right), len(union)) if union else Fraction(0)


def fuzzy_score(left_tokens, right_tokens, threshold):
    """Jaccard score when the token sets match fuzzily, otherwise None."""
    if not left_tokens or not right_tokens:
        return None
    score = jaccard(left_tokens, right_tokens)
    if score >= threshold or left_tokens <= right_tokens or right_tokens <= left_tokens:
        return score
    return None


def _check_threshold(threshold):
    threshold = Fraction(threshold)
    if not 0 < threshold <= 1:
        raise ValueError(f"fuzzy threshold must be in (0, 1], got {threshold}")
    return threshold


def _leaf_set(node):
    return {leaf.lower() for leaf in node.member_leaves}


def _component_match(component, node, threshold):
    """Best (tier, score, evidence) of ``node`` for ``component``, or None."""
    names = (component.name,) + tuple(component.aliases)
    label = node.label.lower()
    for name in names:
        if name.lower() == label:
            return EXACT, Fraction(1), (name,)

    label_tokens = set(tokenize(node.label))
    fuzzy = None
    for name in names:
        name_tokens = set(tokenize(name))
        score = fuzzy_score(name_tokens, label_tokens, threshold)
        if score is not None and (fuzzy is None or score > fuzzy[1]):
            fuzzy = (FUZZY, score, tuple(sorted(name_tokens & label_tokens)))
    if fuzzy is not None:
        return fuzzy

    known = {method.lower() for method in component.known_methods}
    if known:
        found = tuple(sorted(known & _leaf_set(node)))
        required = 1 if len(known) == 1 else 2
        if len(found) >= required:
            return METHOD_EVIDENCE, Fraction(len(found), len(known)), found
    return None


def match_reference(graph, reference, fuzzy_threshold=DEFAULT_FUZZY_THRESHOLD):
    """
    Find the best node of ``graph`` for every component of ``reference``.

    Components are matched independently, so two components may share a
    node. Ties go to the higher score, then to the earlier node.

    Returns
        list[MatchResult]: one per component, in reference order.
    """
    threshold = _check_threshold(fuzzy_threshold)
    results = []
    for component in reference.components:
        best = None
        for node in graph.nodes:
            found = _component_match(component, node, threshold)
            if found is None:
                continue
            rank = (TIER_RANK[found[0]], -found[1], node.first_record_index)
            if best is None or rank < best[0]:
                best = (rank, node, found)
        if best is None:
            results.append(MatchResult(component=component.name))
            continue
        _, node, (tier, score, evidence) = best
        results.append(MatchResult(component.name, node.label, tier, evidence, score))

    matched = sum(result.matched for result in results)
    logger.info(f"Matched {matched}/{len(results)} components of {reference.name}")
    return results


def _pair_match(left, right, left_tokens, right_tokens, left_leaves, right_leaves, threshold):
    if left.label.lower() == right.label.lower():
        return EXACT, Fraction(1), (left.label,)
    score = fuzzy_score(left_tokens, right_tokens, threshold)
    if score is not None:
        return FUZZY, score, tuple(sorted(left_tokens & right_tokens))
    shared = (left_leaves & right_leaves) - GENERIC_LEAVES
    required = 1 if min(len(left_leaves), len(right_leaves)) == 1 else 2
    if shared and len(shared) >= required:
        return METHOD_EVIDENCE, jaccard(left_leaves, right_leaves), tuple(sorted(shared))
    return None


def match_pairs(left, right, fuzzy_threshold=DEFAULT_FUZZY_THRESHOLD):
    """
    One-to-one matching between the nodes of two graphs.

    Every candidate pair is ranked by tier, then score, then the record order
    of both nodes; pairs are taken greedily. The ranking does not depend on
    which graph is on which side.

    Returns
        list[NodePair]: in record order of the left nodes.
    """
    threshold = _check_threshold(fuzzy_threshold)
    right_info = [(node, set(tokenize(node.label)), _leaf_set(node)) for node in right.nodes]

    candidates = []
    for left_node in left.nodes:
        left_tokens, left_leaves = set(tokenize(left_node.label)), _leaf_set(left_node)
        for right_node, right_tokens, right_leaves in right_info:
            found = _pair_match(left_node, right_node, left_tokens, right_tokens, left_leaves, right_leaves, threshold)
            if found is None:
                continue
            tier, score, evidence = found
            indices = sorted((left_node.first_record_index, right_node.first_record_index))
            labels = sorted((left_node.label, right_node.label))
            rank = (TIER_RANK[tier], -score, *indices, *labels, left_node.label, right_node.label)
            candidates.append((rank, left_node, right_node, found))

    candidates.sort(key=lambda candidate: candidate[0])
    taken_left, taken_right = set(), set()
    pairs = []
    for _, left_node, right_node, (tier, score, evidence) in candidates:
        if left_node.label in taken_left or right_node.label in taken_right:
            continue
        taken_left.add(left_node.label)
        taken_right.add(right_node.label)
        pairs.append((left_node.first_record_index, NodePair(left_node.label, right_node.label, tier, score, evidence)))

    pairs.sort(key=lambda item: item[0])
    return [pair for _, pair in pairs]


@dataclass(frozen=True)
class MatchReport:
    """Results of matching one graph against a named reference architecture."""

    reference: str
    results: tuple = ()

    @property
    def unmatched(self):
        return [result.component for result in self.results if not result.matched]
