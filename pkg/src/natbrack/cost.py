"""Per-span 0/1 costs against a partial bracket set, and their sum over trees.

Two variants: the loose cost only penalizes spans that cross a bracket,
the strict cost penalizes every span that is not itself a bracket.
"""

from __future__ import annotations

import enum

from .core import BinaryTree, BracketSet, Span, crosses, spans_of_tree


class CostKind(enum.Enum):
    LOOSE = "loose"
    STRICT = "strict"


def preprocess_brackets(b: BracketSet, n: int) -> BracketSet:
    """Drop width-1 spans and the full-sentence span.

    Both appear in (or around) every binary tree and carry no discriminative
    signal; under the strict cost an un-removable width-1 span would poison
    every scored span.
    """
    b.check_bounds(n)
    kept = frozenset(s for s in b if s.width >= 2 and not (s.i == 0 and s.j == n))
    return BracketSet(kept)


def span_cost(kind: CostKind, s: Span, partial: BracketSet) -> int:
    """0/1 cost of proposing span `s` given preprocessed brackets."""
    if kind is CostKind.LOOSE:
        return 1 if any(crosses(s, b) for b in partial) else 0
    return 0 if s in partial else 1


def delta(kind: CostKind, t: BinaryTree, partial: BracketSet) -> int:
    """Total cost of a tree: sum of span_cost over its internal spans."""
    return sum(span_cost(kind, s, partial) for s in spans_of_tree(t))
