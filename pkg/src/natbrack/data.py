"""Corpus I/O, bracket extraction from answers and hyperlinks, treebank
reading, and corpus statistics.

Corpus interchange format is line-delimited JSON, one record per line:
    {"id": ..., "tokens": [...], "brackets": [[i, j], ...],
     "pos": [...]?, "char_spans": [[s, e], ...]?, "gold": "(S ...)"?}
Bracket pairs are half-open token indices.
"""

from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .core import BracketSet, NaryTree, Sentence, Span, crosses

log = logging.getLogger(__name__)


class CorpusFormatError(ValueError):
    pass


class TreeParseError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at offset {position})")
        self.position = position


@dataclass(frozen=True)
class CorpusRecord:
    sentence: Sentence
    brackets: BracketSet
    gold: Optional[NaryTree] = None


def _record_from_obj(obj: dict) -> CorpusRecord:
    tokens = tuple(obj["tokens"])
    pos = tuple(obj["pos"]) if obj.get("pos") is not None else None
    char_spans = (tuple(tuple(p) for p in obj["char_spans"])
                  if obj.get("char_spans") is not None else None)
    sentence = Sentence(id=str(obj["id"]), tokens=tokens, pos=pos, char_spans=char_spans)
    n = len(tokens)
    for i, j in obj.get("brackets", []):
        if not (0 <= i < j <= n):
            raise CorpusFormatError(f"bracket [{i},{j}] out of bounds for {n} tokens")
    brackets = BracketSet.of(obj.get("brackets", []))
    gold = None
    if obj.get("gold"):
        gold, gold_sentence = read_ptb_tree(obj["gold"])
        if gold_sentence.tokens != tokens:
            raise CorpusFormatError("gold tree tokens do not match the sentence")
    return CorpusRecord(sentence, brackets, gold)


def load_corpus(path) -> list[CorpusRecord]:
    """Parse a JSONL corpus; malformed records are skipped with a warning."""
    records = []
    skipped = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(_record_from_obj(json.loads(line)))
            except (KeyError, ValueError) as e:
                skipped += 1
                log.warning("%s:%d: skipping record: %s", path, lineno, e)
    if skipped:
        log.warning("%s: skipped %d malformed record(s)", path, skipped)
    return records


def write_corpus(path, records: Iterable[CorpusRecord]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            obj = {
                "id": rec.sentence.id,
                "tokens": list(rec.sentence.tokens),
                "brackets": sorted([s.i, s.j] for s in rec.brackets),
            }
            if rec.sentence.pos is not None:
                obj["pos"] = list(rec.sentence.pos)
            if rec.sentence.char_spans is not None:
                obj["char_spans"] = [list(p) for p in rec.sentence.char_spans]
            if rec.gold is not None:
                obj["gold"] = tree_to_string(rec.gold)
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def map_answer_to_spans(sentence: Sentence, answer: Sequence[str]) -> list[Span]:
    """All positions where the answer tokens appear contiguously and exactly.

    Empty when the answer never matches a consecutive span (it is discarded).
    """
    if not answer:
        raise ValueError("answer must be non-empty")
    answer = tuple(answer)
    tokens = sentence.tokens
    m = len(answer)
    return [Span(i, i + m) for i in range(len(tokens) - m + 1)
            if tokens[i:i + m] == answer]


def map_hyperlink_to_span(sentence: Sentence, link: tuple[int, int]) -> Span:
    """Smallest token span whose character extent covers the link range."""
    if sentence.char_spans is None:
        raise ValueError("sentence has no character offsets")
    ls, le = link
    covered = [idx for idx, (s, e) in enumerate(sentence.char_spans)
               if s < le and ls < e]
    if not covered:
        raise ValueError(f"link ({ls},{le}) does not overlap any token")
    return Span(covered[0], covered[-1] + 1)


def filter_wiki_sentences(records: Iterable[CorpusRecord],
                          max_tokens: int = 100) -> list[CorpusRecord]:
    """Keep sentences of at most max_tokens that have a width->=2 bracket."""
    out = []
    for rec in records:
        if len(rec.sentence) > max_tokens:
            continue
        if not any(s.width >= 2 for s in rec.brackets):
            continue
        out.append(rec)
    return out


def read_ptb_tree(text: str) -> tuple[NaryTree, Sentence]:
    """Parse one bracketed-tree string into a labeled n-ary tree plus its
    sentence (tokens and POS from the preterminals)."""
    pos_idx = 0
    leaves: list[tuple[str, str]] = []

    def skip_ws(k: int) -> int:
        while k < len(text) and text[k].isspace():
            k += 1
        return k

    def parse_node(k: int) -> tuple[NaryTree, int]:
        nonlocal leaves
        k = skip_ws(k)
        if k >= len(text) or text[k] != "(":
            raise TreeParseError("expected '('", k)
        k += 1
        start = k
        while k < len(text) and text[k] not in " ()\t\n":
            k += 1
        label = text[start:k]
        k = skip_ws(k)
        if k < len(text) and text[k] == "(":
            children = []
            while k < len(text) and text[k] == "(":
                child, k = parse_node(k)
                children.append(child)
                k = skip_ws(k)
            if k >= len(text) or text[k] != ")":
                raise TreeParseError("expected ')'", k)
            return NaryTree.make_node(label or "TOP", children), k + 1
        start = k
        while k < len(text) and text[k] not in "()\t\n ":
            k += 1
        token = text[start:k]
        if not token:
            raise TreeParseError("expected a token", k)
        k = skip_ws(k)
        if k >= len(text) or text[k] != ")":
            raise TreeParseError("expected ')'", k)
        leaf = NaryTree.make_leaf(label, token, len(leaves))
        leaves.append((token, label))
        return leaf, k + 1

    tree, k = parse_node(0)
    k = skip_ws(k)
    if k != len(text):
        raise TreeParseError("trailing content after tree", k)
    if not leaves:
        raise TreeParseError("tree has no leaves", 0)
    sentence = Sentence(
        id="",
        tokens=tuple(t for t, _ in leaves),
        pos=tuple(p for _, p in leaves),
    )
    return tree, sentence


def read_tree_file(path) -> list[tuple[NaryTree, Sentence]]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(read_ptb_tree(line))
            except TreeParseError as e:
                raise TreeParseError(f"{path}:{lineno}: {e}", e.position) from None
    return out


def tree_to_string(tree: NaryTree) -> str:
    if tree.is_leaf:
        return f"({tree.label} {tree.token})"
    return f"({tree.label} " + " ".join(tree_to_string(c) for c in tree.children) + ")"


@dataclass
class StatsReport:
    sentences: int
    total_brackets: int
    brackets_per_sentence: float
    pct_single_word: float
    pct_in_reference: Optional[float] = None
    pct_conflicting: Optional[float] = None
    label_coverage: dict[str, float] = field(default_factory=dict)

    def lines(self) -> list[str]:
        out = [
            f"Sentences             {self.sentences}",
            f"Brackets/sentence     {self.brackets_per_sentence:.2f}",
            f"Single word           {self.pct_single_word:.1f}%",
        ]
        if self.pct_in_reference is not None:
            out.append(f"Constituent in ref.   {self.pct_in_reference:.1f}%")
        if self.pct_conflicting is not None:
            out.append(f"Conflicting w/ ref.   {self.pct_conflicting:.1f}%")
        for label, frac in sorted(self.label_coverage.items()):
            out.append(f"  {label:<8} coverage  {100 * frac:.1f}%")
        return out


def corpus_stats(records: Sequence[CorpusRecord]) -> StatsReport:
    """Bracket statistics, with reference-dependent rows only when gold
    trees are present on every record."""
    sentences = len(records)
    total = sum(len(r.brackets) for r in records)
    single = sum(1 for r in records for s in r.brackets if s.width == 1)
    report = StatsReport(
        sentences=sentences,
        total_brackets=total,
        brackets_per_sentence=total / sentences if sentences else 0.0,
        pct_single_word=100.0 * single / total if total else 0.0,
    )
    if not records or any(r.gold is None for r in records):
        return report

    in_ref = 0
    conflicting = 0
    label_found: dict[str, int] = {}
    label_total: dict[str, int] = {}
    for rec in records:
        gold_labeled = rec.gold.labeled_spans()
        gold_spans = {s for _, s in gold_labeled}
        for s in rec.brackets:
            if s in gold_spans:
                in_ref += 1
            elif any(crosses(s, g) for g in gold_spans):
                conflicting += 1
        for label, g in gold_labeled:
            label_total[label] = label_total.get(label, 0) + 1
            if g in rec.brackets:
                label_found[label] = label_found.get(label, 0) + 1
    report.pct_in_reference = 100.0 * in_ref / total if total else 0.0
    report.pct_conflicting = 100.0 * conflicting / total if total else 0.0
    report.label_coverage = {
        label: label_found.get(label, 0) / count
        for label, count in label_total.items()
    }
    return report


CEMB_MAGIC = b"CEMB"
CEMB_VERSION = 1


class EmbeddingFormatError(ValueError):
    pass


def read_cemb(path) -> list[np.ndarray]:
    """Read a CEMB embedding file: per sentence, one float32 vector per token."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != CEMB_MAGIC:
            raise EmbeddingFormatError(f"bad magic bytes {magic!r}")
        header = fh.read(8)
        if len(header) != 8:
            raise EmbeddingFormatError("truncated header")
        version, dim = struct.unpack("<II", header)
        if version != CEMB_VERSION:
            raise EmbeddingFormatError(f"unsupported version {version}")
        out = []
        while True:
            count_bytes = fh.read(4)
            if not count_bytes:
                break
            if len(count_bytes) != 4:
                raise EmbeddingFormatError("truncated sentence header")
            (count,) = struct.unpack("<I", count_bytes)
            payload = fh.read(4 * count * dim)
            if len(payload) != 4 * count * dim:
                raise EmbeddingFormatError("truncated sentence payload")
            out.append(np.frombuffer(payload, dtype="<f4").reshape(count, dim).astype(np.float64))
    return out
