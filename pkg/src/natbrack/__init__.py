"""Induce unlabeled constituency parsers from noisy partial bracketings."""

__version__ = "0.1.0"

from .core import BinaryTree, BracketSet, NaryTree, Sentence, Span, crosses, spans_of_tree
from .cost import CostKind, delta, preprocess_brackets, span_cost

__all__ = [
    "BinaryTree",
    "BracketSet",
    "CostKind",
    "NaryTree",
    "Sentence",
    "Span",
    "crosses",
    "delta",
    "preprocess_brackets",
    "span_cost",
    "spans_of_tree",
]
