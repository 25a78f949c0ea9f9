"""Core domain types: sentences, spans, bracket sets, and trees.

Span convention throughout: half-open [i, j), 0-based token indices.
All types are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping, NamedTuple, Optional, Sequence


class Span(NamedTuple):
    i: int
    j: int

    @property
    def width(self) -> int:
        return self.j - self.i


class StructureError(ValueError):
    """Raised when tree or span structure is internally inconsistent."""


@dataclass(frozen=True)
class Sentence:
    id: str
    tokens: tuple[str, ...]
    pos: Optional[tuple[str, ...]] = None
    char_spans: Optional[tuple[tuple[int, int], ...]] = None

    def __post_init__(self):
        if len(self.tokens) < 1:
            raise StructureError("sentence must have at least one token")
        if self.pos is not None and len(self.pos) != len(self.tokens):
            raise StructureError("POS length does not match token count")
        if self.char_spans is not None:
            if len(self.char_spans) != len(self.tokens):
                raise StructureError("char_spans length does not match token count")
            prev_end = -1
            for s, e in self.char_spans:
                if s < prev_end or e < s:
                    raise StructureError("char_spans must be non-overlapping and increasing")
                prev_end = e

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class BracketSet:
    """A set of token spans; crossing members are permitted (natural data
    may conflict internally). Duplicates collapse."""

    spans: frozenset[Span]

    @classmethod
    def of(cls, spans) -> "BracketSet":
        return cls(frozenset(Span(i, j) for i, j in spans))

    def check_bounds(self, n: int) -> None:
        for s in self.spans:
            if not (0 <= s.i < s.j <= n):
                raise StructureError(f"span {s} out of bounds for length {n}")

    def __iter__(self) -> Iterator[Span]:
        return iter(self.spans)

    def __len__(self) -> int:
        return len(self.spans)

    def __contains__(self, span) -> bool:
        return span in self.spans


EMPTY_BRACKETS = BracketSet(frozenset())


class BinaryTree:
    """Full binary bracketing over tokens [i, j). Leaves are single tokens;
    every internal node concatenates its two children."""

    __slots__ = ("left", "right", "i", "j")

    def __init__(self, left: Optional["BinaryTree"], right: Optional["BinaryTree"],
                 i: int, j: int):
        self.left = left
        self.right = right
        self.i = i
        self.j = j

    @classmethod
    def leaf(cls, index: int) -> "BinaryTree":
        return cls(None, None, index, index + 1)

    @classmethod
    def branch(cls, left: "BinaryTree", right: "BinaryTree") -> "BinaryTree":
        if left.j != right.i:
            raise StructureError(
                f"children [{left.i},{left.j}) and [{right.i},{right.j}) are not adjacent")
        return cls(left, right, left.i, right.j)

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    @property
    def span(self) -> Span:
        return Span(self.i, self.j)

    def __len__(self) -> int:
        return self.j - self.i

    def __eq__(self, other) -> bool:
        if not isinstance(other, BinaryTree):
            return NotImplemented
        return self.i == other.i and self.j == other.j and spans_of_tree(self) == spans_of_tree(other)

    def __hash__(self):
        return hash((self.i, self.j, frozenset(spans_of_tree(self))))

    def __repr__(self) -> str:
        if self.is_leaf:
            return f"{self.i}"
        return f"({self.left!r} {self.right!r})"


def spans_of_tree(t: BinaryTree) -> frozenset[Span]:
    """Spans of all internal nodes (width >= 2), including the full span."""
    out = []
    stack = [t]
    while stack:
        node = stack.pop()
        if not node.is_leaf:
            out.append(node.span)
            stack.append(node.left)
            stack.append(node.right)
    return frozenset(out)


def splits_of_tree(t: BinaryTree) -> dict[Span, int]:
    """Split point of every internal node; inverse of tree_from_splits."""
    out = {}
    stack = [t]
    while stack:
        node = stack.pop()
        if not node.is_leaf:
            out[node.span] = node.left.j
            stack.append(node.left)
            stack.append(node.right)
    return out


def tree_from_splits(n: int, splits: Mapping[Span, int]) -> BinaryTree:
    """Build the unique tree whose internal nodes follow the split table."""
    if n < 1:
        raise StructureError("n must be >= 1")

    def build(i: int, j: int) -> BinaryTree:
        if j - i == 1:
            return BinaryTree.leaf(i)
        span = Span(i, j)
        if span not in splits:
            raise StructureError(f"missing split entry for span {span}")
        k = splits[span]
        if not (i < k < j):
            raise StructureError(f"split {k} out of range for span {span}")
        return BinaryTree.branch(build(i, k), build(k, j))

    return build(0, n)


def crosses(a: Span, b: Span) -> bool:
    """True iff the two spans partially overlap without nesting."""
    return a.i < b.i < a.j < b.j or b.i < a.i < b.j < a.j


@dataclass(frozen=True)
class NaryTree:
    """Labeled n-ary tree. Leaves carry the token and its POS as label."""

    label: str
    children: tuple["NaryTree", ...] = ()
    token: Optional[str] = None
    i: int = -1
    j: int = -1

    @classmethod
    def make_leaf(cls, label: str, token: str, index: int) -> "NaryTree":
        return cls(label, (), token, index, index + 1)

    @classmethod
    def make_node(cls, label: str, children: Sequence["NaryTree"]) -> "NaryTree":
        children = tuple(children)
        if not children:
            raise StructureError("internal node needs at least one child")
        for a, b in zip(children, children[1:]):
            if a.j != b.i:
                raise StructureError("children must be adjacent and in order")
        return cls(label, children, None, children[0].i, children[-1].j)

    @property
    def is_leaf(self) -> bool:
        return not self.children

    @property
    def span(self) -> Span:
        return Span(self.i, self.j)

    def leaves(self) -> list["NaryTree"]:
        if self.is_leaf:
            return [self]
        out = []
        for c in self.children:
            out.extend(c.leaves())
        return out

    def tokens(self) -> list[str]:
        return [leaf.token for leaf in self.leaves()]

    def pos_tags(self) -> list[str]:
        return [leaf.label for leaf in self.leaves()]

    def labeled_spans(self) -> list[tuple[str, Span]]:
        """(label, span) for every internal node, preorder."""
        if self.is_leaf:
            return []
        out = [(self.label, self.span)]
        for c in self.children:
            out.extend(c.labeled_spans())
        return out

    def span_set(self) -> frozenset[Span]:
        return frozenset(s for _, s in self.labeled_spans())
