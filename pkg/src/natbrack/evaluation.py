"""Sentence-level unlabeled F1 with punctuation and trivial-span filtering,
plus the branching baselines and the binarization upper bound."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .core import BinaryTree, NaryTree, Sentence, Span, spans_of_tree
from .data import CorpusRecord

DEFAULT_PUNCT_POS = frozenset({"``", "''", ".", ",", ":", "-LRB-", "-RRB-", "#", "$"})


class EvalError(ValueError):
    pass


@dataclass(frozen=True)
class EvalConfig:
    punct_pos: frozenset = DEFAULT_PUNCT_POS
    # sentences whose filtered gold set is empty are excluded from the mean
    exclude_empty_gold: bool = True

    def __post_init__(self):
        if not self.punct_pos:
            raise EvalError("punctuation POS set must be non-empty")


def project_no_punct(pos: Sequence[str], spans: Iterable[Span],
                     config: EvalConfig = EvalConfig()) -> tuple[int, set[Span]]:
    """Drop punctuation tokens and remap spans onto the surviving tokens.

    Returns the surviving token count and the remapped spans; spans that
    collapse to width 0 are dropped.
    """
    if pos is None:
        raise EvalError("POS tags required for punctuation filtering")
    kept_before = [0]
    for p in pos:
        kept_before.append(kept_before[-1] + (0 if p in config.punct_pos else 1))
    new_n = kept_before[-1]
    out = set()
    for s in spans:
        i, j = kept_before[s.i], kept_before[s.j]
        if j - i >= 1:
            out.add(Span(i, j))
    return new_n, out


def nontrivial(spans: Iterable[Span], n: int) -> set[Span]:
    """Drop width-1 spans and the full-sentence span."""
    return {s for s in spans if s.width >= 2 and not (s.i == 0 and s.j == n)}


def sentence_f1(pred: set[Span], gold: set[Span]) -> float:
    """Span-set F1; both sides already filtered. Empty vs empty counts as 1."""
    if not pred and not gold:
        return 1.0
    tp = len(pred & gold)
    if tp == 0:
        return 0.0
    p = tp / len(pred)
    r = tp / len(gold)
    return 2 * p * r / (p + r)


def filtered_sets(record: CorpusRecord, pred_spans: Iterable[Span],
                  config: EvalConfig) -> tuple[set[Span], set[Span]]:
    if record.gold is None:
        raise EvalError(f"sentence {record.sentence.id} has no gold tree")
    pos = record.sentence.pos or tuple(record.gold.pos_tags())
    new_n, pred = project_no_punct(pos, pred_spans, config)
    _, gold = project_no_punct(pos, record.gold.span_set(), config)
    return nontrivial(pred, new_n), nontrivial(gold, new_n)


@dataclass
class CorpusF1:
    mean_f1: float
    evaluated: int
    skipped_empty_gold: int


def corpus_f1(records: Sequence[CorpusRecord],
              predictor: Callable[[CorpusRecord], Iterable[Span]],
              config: EvalConfig = EvalConfig()) -> CorpusF1:
    """Mean of per-sentence F1 over sentences with non-empty filtered gold."""
    scores = []
    skipped = 0
    for rec in records:
        pred, gold = filtered_sets(rec, predictor(rec), config)
        if not gold and config.exclude_empty_gold:
            skipped += 1
            continue
        scores.append(sentence_f1(pred, gold))
    mean = sum(scores) / len(scores) if scores else 0.0
    return CorpusF1(mean, len(scores), skipped)


def per_label_recall(records: Sequence[CorpusRecord],
                     predictor: Callable[[CorpusRecord], Iterable[Span]],
                     config: EvalConfig = EvalConfig()) -> dict[str, float]:
    """Recall of gold spans per constituent label, after the same filtering."""
    found: dict[str, int] = {}
    total: dict[str, int] = {}
    for rec in records:
        pos = rec.sentence.pos or tuple(rec.gold.pos_tags())
        new_n, pred = project_no_punct(pos, predictor(rec), config)
        pred = nontrivial(pred, new_n)
        for label, span in rec.gold.labeled_spans():
            _, projected = project_no_punct(pos, [span], config)
            projected = nontrivial(projected, new_n)
            if not projected:
                continue
            g = next(iter(projected))
            total[label] = total.get(label, 0) + 1
            if g in pred:
                found[label] = found.get(label, 0) + 1
    return {label: found.get(label, 0) / n for label, n in total.items()}


def left_branching(n: int) -> BinaryTree:
    tree = BinaryTree.leaf(0)
    for k in range(1, n):
        tree = BinaryTree.branch(tree, BinaryTree.leaf(k))
    return tree


def right_branching(n: int) -> BinaryTree:
    tree = BinaryTree.leaf(n - 1)
    for k in range(n - 2, -1, -1):
        tree = BinaryTree.branch(BinaryTree.leaf(k), tree)
    return tree


def random_tree(n: int, rng: np.random.Generator) -> BinaryTree:
    """Recursively sample a uniform split point inside each span."""

    def build(i: int, j: int) -> BinaryTree:
        if j - i == 1:
            return BinaryTree.leaf(i)
        k = int(rng.integers(i + 1, j))
        return BinaryTree.branch(build(i, k), build(k, j))

    return build(0, n)


def binarize(tree: NaryTree) -> BinaryTree:
    """Binary tree containing every gold span, completed left-branching
    inside nodes with more than two children."""
    if tree.is_leaf:
        return BinaryTree.leaf(tree.i)
    out = binarize(tree.children[0])
    for child in tree.children[1:]:
        out = BinaryTree.branch(out, binarize(child))
    return out


def binarized_upper_bound(records: Sequence[CorpusRecord],
                          config: EvalConfig = EvalConfig()) -> CorpusF1:
    """F1 of the binarized gold trees against the gold spans: the best any
    binary-only parser can score. Recall is 1 by construction."""
    return corpus_f1(records, lambda rec: spans_of_tree(binarize(rec.gold)), config)
