"""Span scorer: token vectors -> boundary MLPs -> biaffine span scores.

The left boundary of span (i, j) uses token i, the right boundary uses
token j-1 (the last token inside the span). Gradients are analytic.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Iterator, Mapping, Optional

import numpy as np

from .cky import ScoreChart
from .core import Span

LEAKY_SLOPE = 0.01


class ConfigurationError(ValueError):
    pass


@dataclass
class ModelParams:
    a_left: np.ndarray   # (d_h, d_in)
    b_left: np.ndarray   # (d_h,)
    a_right: np.ndarray  # (d_h, d_in)
    b_right: np.ndarray  # (d_h,)
    w: np.ndarray        # (d_h+1, d_h+1)
    embed: Optional[np.ndarray] = None  # (vocab, d_in); None when frozen vectors come from a file
    vocab: Optional[dict[str, int]] = None

    @property
    def d_in(self) -> int:
        return self.a_left.shape[1]

    @property
    def d_h(self) -> int:
        return self.a_left.shape[0]

    def arrays(self) -> Iterator[tuple[str, np.ndarray]]:
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, np.ndarray):
                yield f.name, v


@dataclass
class Grads:
    a_left: np.ndarray
    b_left: np.ndarray
    a_right: np.ndarray
    b_right: np.ndarray
    w: np.ndarray
    embed: Optional[np.ndarray] = None

    def arrays(self) -> Iterator[tuple[str, np.ndarray]]:
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, np.ndarray):
                yield f.name, v

    @classmethod
    def zeros_like(cls, params: ModelParams) -> "Grads":
        return cls(
            a_left=np.zeros_like(params.a_left),
            b_left=np.zeros_like(params.b_left),
            a_right=np.zeros_like(params.a_right),
            b_right=np.zeros_like(params.b_right),
            w=np.zeros_like(params.w),
            embed=None if params.embed is None else np.zeros_like(params.embed),
        )

    def add_scaled(self, other: "Grads", scale: float) -> None:
        for (_, a), (_, b) in zip(self.arrays(), other.arrays()):
            a += scale * b


@dataclass
class BoundaryReprs:
    l: np.ndarray  # (n, d_h), post-activation
    r: np.ndarray  # (n, d_h)
    # pre-activation values, kept for the backward pass
    zl: np.ndarray
    zr: np.ndarray


def glorot_uniform(rng: np.random.Generator, shape: tuple[int, int]) -> np.ndarray:
    fan_out, fan_in = shape
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)


def init_params(d_in: int, d_h: int, vocab_size: int = 0, seed: int = 0,
                vocab: Optional[dict[str, int]] = None) -> ModelParams:
    """Glorot-uniform weights, zero biases; vocab_size=0 means frozen
    precomputed vectors (no embedding table)."""
    if d_in < 1 or d_h < 1:
        raise ConfigurationError("dimensions must be positive")
    rng = np.random.default_rng(seed)
    embed = glorot_uniform(rng, (vocab_size, d_in)) if vocab_size > 0 else None
    return ModelParams(
        a_left=glorot_uniform(rng, (d_h, d_in)),
        b_left=np.zeros(d_h),
        a_right=glorot_uniform(rng, (d_h, d_in)),
        b_right=np.zeros(d_h),
        w=glorot_uniform(rng, (d_h + 1, d_h + 1)),
        embed=embed,
        vocab=vocab,
    )


def leaky_relu(z: np.ndarray) -> np.ndarray:
    return np.where(z > 0, z, LEAKY_SLOPE * z)


def leaky_relu_grad(z: np.ndarray) -> np.ndarray:
    # derivative at exactly 0 defined as the slope
    return np.where(z > 0, 1.0, LEAKY_SLOPE)


def token_vectors(params: ModelParams, tokens) -> np.ndarray:
    """Look up embedding rows for a token sequence (lookup mode only)."""
    if params.embed is None or params.vocab is None:
        raise ConfigurationError("model has no embedding table; provide precomputed vectors")
    try:
        ids = [params.vocab[t] for t in tokens]
    except KeyError as e:
        raise ConfigurationError(f"token {e.args[0]!r} not in vocabulary") from None
    return params.embed[ids]


def boundary_reprs(params: ModelParams, x: np.ndarray) -> BoundaryReprs:
    """Apply the two boundary MLPs to per-token vectors x of shape (n, d_in)."""
    if x.ndim != 2 or x.shape[1] != params.d_in:
        raise ConfigurationError(
            f"expected embeddings of dim {params.d_in}, got shape {x.shape}")
    zl = x @ params.a_left.T + params.b_left
    zr = x @ params.a_right.T + params.b_right
    return BoundaryReprs(l=leaky_relu(zl), r=leaky_relu(zr), zl=zl, zr=zr)


def _augmented(v: np.ndarray) -> np.ndarray:
    return np.concatenate([v, np.ones((v.shape[0], 1))], axis=1)


def score_spans(params: ModelParams, x: np.ndarray) -> ScoreChart:
    """Biaffine score for every width->=2 span of the sentence."""
    n = x.shape[0]
    reps = boundary_reprs(params, x)
    l1 = _augmented(reps.l)
    r1 = _augmented(reps.r)
    pair = l1 @ params.w @ r1.T  # pair[i, m]: left boundary i, last inside token m
    scores = np.zeros((n + 1, n + 1))
    for i in range(n):
        for j in range(i + 2, n + 1):
            scores[i, j] = pair[i, j - 1]
    return ScoreChart(n, scores)


def backward(params: ModelParams, x: np.ndarray, chart_grad: Mapping[Span, float],
             token_ids=None) -> tuple[Grads, np.ndarray]:
    """Gradients of sum_s chart_grad[s] * score(s) w.r.t. all parameters.

    Returns (param grads, gradient w.r.t. x). When token_ids is given and the
    model has a trainable table, embedding-row gradients are accumulated too.
    """
    n = x.shape[0]
    reps = boundary_reprs(params, x)
    l1 = _augmented(reps.l)
    r1 = _augmented(reps.r)

    # upstream gradient as a (left boundary, last inside token) matrix
    g = np.zeros((n, n))
    for (i, j), v in chart_grad.items():
        g[i, j - 1] += v

    grads = Grads.zeros_like(params)
    grads.w = l1.T @ g @ r1
    dl1 = g @ r1 @ params.w.T
    dr1 = g.T @ l1 @ params.w
    dzl = dl1[:, :-1] * leaky_relu_grad(reps.zl)
    dzr = dr1[:, :-1] * leaky_relu_grad(reps.zr)
    grads.a_left = dzl.T @ x
    grads.b_left = dzl.sum(axis=0)
    grads.a_right = dzr.T @ x
    grads.b_right = dzr.sum(axis=0)
    dx = dzl @ params.a_left + dzr @ params.a_right

    if grads.embed is not None and token_ids is not None:
        np.add.at(grads.embed, token_ids, dx)
    return grads, dx
