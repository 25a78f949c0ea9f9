import numpy as np
import pytest

from natbrack.cky import ScoreChart
from natbrack.core import BinaryTree, BracketSet, NaryTree, Sentence, Span, spans_of_tree
from natbrack.data import CorpusRecord


def random_chart(rng, n, scale=1.0):
    scores = np.zeros((n + 1, n + 1))
    for i in range(n):
        for j in range(i + 2, n + 1):
            scores[i, j] = scale * rng.normal()
    return ScoreChart(n, scores)


def random_bracket_set(rng, n, max_spans=4):
    k = int(rng.integers(0, max_spans + 1))
    spans = []
    for _ in range(k):
        i = int(rng.integers(0, n))
        j = int(rng.integers(i + 1, n + 1))
        spans.append((i, j))
    return BracketSet.of(spans)


def random_binary_tree(rng, n):
    def build(i, j):
        if j - i == 1:
            return BinaryTree.leaf(i)
        k = int(rng.integers(i + 1, j))
        return BinaryTree.branch(build(i, k), build(k, j))

    return build(0, n)


# ---------------------------------------------------------------------------
# Seeded toy grammar for end-to-end runs. All rules are binary, so the gold
# trees are exact targets for a binary parser. Word classes make span
# boundaries predictable from token identity.

_WORDS = {
    "D": [f"d{k}" for k in range(5)],
    "N": [f"n{k}" for k in range(20)],
    "A": [f"a{k}" for k in range(10)],
    "V": [f"v{k}" for k in range(10)],
    "P": [f"p{k}" for k in range(5)],
}

TOY_VOCAB = [w for ws in _WORDS.values() for w in ws]  # 50 words


def _leaf(rng, cls):
    return ("leaf", cls, _WORDS[cls][int(rng.integers(0, len(_WORDS[cls])))])


def _nbar(rng, depth):
    if depth > 3 or rng.random() > 0.35:
        return _leaf(rng, "N")
    return ("node", _leaf(rng, "A"), _nbar(rng, depth + 1))


def _np(rng, depth):
    if depth <= 3 and rng.random() < 0.25:
        return ("node", _np(rng, depth + 1), _pp(rng, depth + 1))
    return ("node", _leaf(rng, "D"), _nbar(rng, depth))


def _pp(rng, depth):
    return ("node", _leaf(rng, "P"), _np(rng, depth + 1))


def _vp(rng, depth):
    if depth <= 3 and rng.random() < 0.3:
        return ("node", _vp(rng, depth + 1), _pp(rng, depth + 1))
    return ("node", _leaf(rng, "V"), _np(rng, depth + 1))


def _sentence(rng):
    return ("node", _np(rng, 0), _vp(rng, 0))


def _to_trees(struct, offset, tokens, pos):
    if struct[0] == "leaf":
        _, cls, word = struct
        tokens.append(word)
        pos.append(cls)
        return (BinaryTree.leaf(offset),
                NaryTree.make_leaf(cls, word, offset), offset + 1)
    _, ls, rs = struct
    lb, ln, offset = _to_trees(ls, offset, tokens, pos)
    rb, rn, offset = _to_trees(rs, offset, tokens, pos)
    return (BinaryTree.branch(lb, rb),
            NaryTree.make_node("X", [ln, rn]), offset)


def toy_sentences(seed, count, min_len=5, max_len=12):
    """(tokens, pos, binary gold, n-ary gold) tuples from the toy grammar."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        struct = _sentence(rng)
        tokens, pos = [], []
        btree, ntree, n = _to_trees(struct, 0, tokens, pos)
        if min_len <= n <= max_len:
            out.append((tokens, pos, btree, ntree))
    return out


def reveal_brackets(rng, gold_tree, n, reveal=0.6, corrupt=0.1):
    """Partial supervision: a fraction of gold non-trivial spans, with some
    replaced by crossing (shifted) spans."""
    spans = []
    for s in spans_of_tree(gold_tree):
        if s.i == 0 and s.j == n:
            continue
        if rng.random() >= reveal:
            continue
        if rng.random() < corrupt:
            if s.j < n:
                spans.append((s.i + 1, s.j + 1))
            else:
                spans.append((s.i - 1, s.j - 1))
        else:
            spans.append((s.i, s.j))
    return BracketSet.of(spans)


def toy_corpus(seed, count, reveal=0.6, corrupt=0.1, with_gold=True):
    rng = np.random.default_rng(seed + 1)
    records = []
    for idx, (tokens, pos, btree, ntree) in enumerate(toy_sentences(seed, count)):
        sent = Sentence(id=f"toy{idx}", tokens=tuple(tokens), pos=tuple(pos))
        brackets = reveal_brackets(rng, btree, len(tokens), reveal, corrupt)
        records.append(CorpusRecord(sent, brackets, ntree if with_gold else None))
    return records
