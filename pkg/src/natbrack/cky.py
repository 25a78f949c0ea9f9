"""Exact max decoding over span-factored scores.

The decoder is the classic O(n^3) chart algorithm; cost-augmented and
cost-diminished variants fold a per-span 0/1 cost into the chart before
decoding. Tie-breaking is deterministic: the smaller split point wins.
"""

from __future__ import annotations

from typing import Iterator, Mapping

import numpy as np

from .core import BinaryTree, BracketSet, Span, StructureError, tree_from_splits
from .cost import CostKind, span_cost

ORACLE_MAX_N = 10


class ScoreChart:
    """Scores for every width->=2 span of a length-n sentence.

    Width-1 spans carry implicit score 0 and are never stored.
    """

    __slots__ = ("n", "scores")

    def __init__(self, n: int, scores: np.ndarray):
        assert scores.shape == (n + 1, n + 1)
        if not np.all(np.isfinite(scores)):
            raise ValueError("chart scores must be finite")
        self.n = n
        self.scores = scores

    @classmethod
    def from_dict(cls, n: int, entries: Mapping[Span, float]) -> "ScoreChart":
        scores = np.zeros((n + 1, n + 1))
        for (i, j), v in entries.items():
            if not (0 <= i and i + 2 <= j <= n):
                raise ValueError(f"({i},{j}) is not a scorable span for n={n}")
            scores[i, j] = v
        return cls(n, scores)

    def get(self, span: Span) -> float:
        return float(self.scores[span.i, span.j])

    def spans(self) -> Iterator[Span]:
        for i in range(self.n):
            for j in range(i + 2, self.n + 1):
                yield Span(i, j)

    def shifted(self, offsets: np.ndarray) -> "ScoreChart":
        return ScoreChart(self.n, self.scores + offsets)


def tree_score(chart: ScoreChart, t: BinaryTree) -> float:
    from .core import spans_of_tree

    return float(sum(chart.get(s) for s in spans_of_tree(t)))


def _decode_array(n: int, scores: np.ndarray) -> tuple[BinaryTree, float]:
    if n == 1:
        return BinaryTree.leaf(0), 0.0
    best = np.zeros((n + 1, n + 1))
    split = np.zeros((n + 1, n + 1), dtype=np.int64)
    for width in range(2, n + 1):
        for i in range(n - width + 1):
            j = i + width
            ks = np.arange(i + 1, j)
            totals = best[i, ks] + best[ks, j]
            a = int(np.argmax(totals))  # argmax returns the first max: smallest k
            best[i, j] = scores[i, j] + totals[a]
            split[i, j] = ks[a]
    splits = {}
    stack = [(0, n)]
    while stack:
        i, j = stack.pop()
        if j - i >= 2:
            k = int(split[i, j])
            splits[Span(i, j)] = k
            stack.append((i, k))
            stack.append((k, j))
    return tree_from_splits(n, splits), float(best[0, n])


def decode(chart: ScoreChart) -> BinaryTree:
    """Highest-scoring binary tree under the chart."""
    tree, _ = _decode_array(chart.n, chart.scores)
    return tree


def cost_offsets(n: int, partial: BracketSet, kind: CostKind) -> np.ndarray:
    out = np.zeros((n + 1, n + 1))
    for i in range(n):
        for j in range(i + 2, n + 1):
            out[i, j] = span_cost(kind, Span(i, j), partial)
    return out


def decode_with_cost(chart: ScoreChart, partial: BracketSet, kind: CostKind,
                     sign: int) -> tuple[BinaryTree, float]:
    """Argmax of tree score plus/minus the tree's total bracket cost.

    Returns the tree and its augmented score.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    aug = chart.scores + sign * cost_offsets(chart.n, partial, kind)
    return _decode_array(chart.n, aug)


def enumerate_trees(n: int, max_n: int = ORACLE_MAX_N) -> Iterator[BinaryTree]:
    """Yield every binary tree over n leaves exactly once (Catalan(n-1) total).

    Guarded against combinatorial blowup; raise for n beyond the bound.
    """
    if n < 1:
        raise StructureError("n must be >= 1")
    if n > max_n:
        raise ValueError(f"n={n} exceeds the oracle bound {max_n}")

    def gen(i: int, j: int) -> Iterator[BinaryTree]:
        if j - i == 1:
            yield BinaryTree.leaf(i)
            return
        for k in range(i + 1, j):
            for left in gen(i, k):
                for right in gen(k, j):
                    yield BinaryTree.branch(left, right)

    return gen(0, n)
