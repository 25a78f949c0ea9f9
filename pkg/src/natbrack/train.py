"""Structured ramp loss, Adam with warmup and clipping, and the training loop."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace
from typing import Optional, Sequence

import numpy as np

from .cky import ScoreChart, decode_with_cost
from .core import BinaryTree, BracketSet, Span, spans_of_tree
from .cost import CostKind
from .model import ConfigurationError, Grads, ModelParams, backward, score_spans, token_vectors


@dataclass
class TrainConfig:
    cost: CostKind = CostKind.STRICT
    batch_size: int = 8
    total_steps: int = 20_000
    warmup_steps: int = 2_000
    peak_lr: float = 1e-5
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-12
    clip_norm: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.warmup_steps > self.total_steps:
            raise ValueError("warmup_steps must not exceed total_steps")
        for name in ("batch_size", "peak_lr", "beta1", "beta2", "eps", "clip_norm"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def from_json(cls, text: str) -> "TrainConfig":
        raw = json.loads(text)
        if "cost" in raw:
            raw["cost"] = CostKind(raw["cost"])
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**raw)

    def to_json(self) -> str:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["cost"] = self.cost.value
        return json.dumps(d, indent=2)


def ramp_loss(chart: ScoreChart, partial: BracketSet, kind: CostKind
              ) -> tuple[float, dict[Span, float], BinaryTree, BinaryTree]:
    """Loss = max_y[s(y)+cost(y)] - max_y[s(y)-cost(y)], with its subgradient
    on chart entries: +1 on spans only in the cost-augmented argmax, -1 on
    spans only in the cost-diminished argmax."""
    y_plus, score_plus = decode_with_cost(chart, partial, kind, +1)
    y_minus, score_minus = decode_with_cost(chart, partial, kind, -1)
    loss = score_plus - score_minus
    plus_spans = spans_of_tree(y_plus)
    minus_spans = spans_of_tree(y_minus)
    grad = {}
    for s in plus_spans - minus_spans:
        grad[s] = 1.0
    for s in minus_spans - plus_spans:
        grad[s] = -1.0
    return loss, grad, y_plus, y_minus


def lr_at(step: int, config: TrainConfig) -> float:
    """Linear warmup from zero to the peak rate, then held constant."""
    if config.warmup_steps > 0 and step <= config.warmup_steps:
        return config.peak_lr * step / config.warmup_steps
    return config.peak_lr


def clip_gradients(grads: Grads, max_norm: float) -> Grads:
    """Scale all gradients down so the global L2 norm is at most max_norm."""
    total = np.sqrt(sum(float(np.sum(a * a)) for _, a in grads.arrays()))
    if total > max_norm:
        scale = max_norm / total
        for _, a in grads.arrays():
            a *= scale
    return grads


@dataclass
class OptState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step: int = 0

    @classmethod
    def fresh(cls, params: ModelParams) -> "OptState":
        return cls(
            m={name: np.zeros_like(a) for name, a in params.arrays()},
            v={name: np.zeros_like(a) for name, a in params.arrays()},
        )


def adam_step(params: ModelParams, grads: Grads, state: OptState, lr: float,
              config: TrainConfig) -> None:
    """Bias-corrected Adam update, in place."""
    state.step += 1
    t = state.step
    grad_by_name = dict(grads.arrays())
    for name, p in params.arrays():
        if name not in grad_by_name:
            continue
        g = grad_by_name[name]
        m = state.m[name]
        v = state.v[name]
        m *= config.beta1
        m += (1 - config.beta1) * g
        v *= config.beta2
        v += (1 - config.beta2) * g * g
        m_hat = m / (1 - config.beta1 ** t)
        v_hat = v / (1 - config.beta2 ** t)
        p -= lr * m_hat / (np.sqrt(v_hat) + config.eps)


@dataclass
class TrainRecord:
    """One training instance: preprocessed brackets plus the token vectors
    (looked up or precomputed)."""

    brackets: BracketSet
    x: np.ndarray
    token_ids: Optional[np.ndarray] = None


def prepare_instances(corpus, params: ModelParams,
                      embeddings: Optional[Sequence[np.ndarray]] = None
                      ) -> list[TrainRecord]:
    from .cost import preprocess_brackets

    if embeddings is not None and len(embeddings) != len(corpus):
        raise ConfigurationError(
            f"{len(embeddings)} embedding records for {len(corpus)} sentences")
    out = []
    for idx, rec in enumerate(corpus):
        n = len(rec.sentence)
        partial = preprocess_brackets(rec.brackets, n)
        if embeddings is not None:
            x = np.asarray(embeddings[idx], dtype=float)
            if x.shape != (n, params.d_in):
                raise ConfigurationError(
                    f"sentence {rec.sentence.id}: embedding shape {x.shape}, "
                    f"expected ({n}, {params.d_in})")
            out.append(TrainRecord(partial, x))
        else:
            ids = np.array([params.vocab[t] for t in rec.sentence.tokens])
            out.append(TrainRecord(partial, params.embed[ids], ids))
    return out


def train(corpus, params: ModelParams, config: TrainConfig,
          embeddings: Optional[Sequence[np.ndarray]] = None
          ) -> tuple[ModelParams, list[tuple[int, float, float]]]:
    """Run the full loop; returns final params and a (step, lr, loss) trace.

    Batches are sampled uniformly with replacement each step; per-sentence
    losses are averaged; no early stopping.
    """
    if not corpus:
        raise ConfigurationError("corpus is empty")
    instances = prepare_instances(corpus, params, embeddings)
    rng = np.random.default_rng(config.seed)
    state = OptState.fresh(params)
    trace = []
    for step in range(1, config.total_steps + 1):
        picks = rng.integers(0, len(instances), size=config.batch_size)
        batch_grads = Grads.zeros_like(params)
        batch_loss = 0.0
        for idx in picks:
            inst = instances[idx]
            if inst.token_ids is not None:
                inst = replace(inst, x=params.embed[inst.token_ids])
            if inst.x.shape[0] < 2:
                continue
            chart = score_spans(params, inst.x)
            loss, chart_grad, _, _ = ramp_loss(chart, inst.brackets, config.cost)
            batch_loss += loss
            if chart_grad:
                g, _ = backward(params, inst.x, chart_grad, inst.token_ids)
                batch_grads.add_scaled(g, 1.0 / config.batch_size)
        lr = lr_at(step, config)
        clip_gradients(batch_grads, config.clip_norm)
        adam_step(params, batch_grads, state, lr, config)
        trace.append((step, lr, batch_loss / config.batch_size))
    return params, trace


def save_checkpoint(path, params: ModelParams, state: Optional[OptState] = None,
                    step: int = 0) -> None:
    """Arrays round-trip bitwise; vocab is stored alongside as JSON."""
    payload = {f"param_{name}": a for name, a in params.arrays()}
    if state is not None:
        payload.update({f"m_{name}": a for name, a in state.m.items()})
        payload.update({f"v_{name}": a for name, a in state.v.items()})
        step = state.step
    meta = {
        "version": 1,
        "step": step,
        "has_state": state is not None,
        "vocab": params.vocab,
    }
    payload["meta"] = np.frombuffer(json.dumps(meta).encode("utf-8"), dtype=np.uint8)
    np.savez(path, **payload)


def load_checkpoint(path) -> tuple[ModelParams, Optional[OptState], int]:
    with np.load(path) as data:
        meta = json.loads(bytes(data["meta"]).decode("utf-8"))
        kwargs = {}
        for key in data.files:
            if key.startswith("param_"):
                kwargs[key[len("param_"):]] = data[key]
        params = ModelParams(vocab=meta["vocab"], **kwargs)
        state = None
        if meta["has_state"]:
            state = OptState(
                m={k[len("m_"):]: data[k] for k in data.files if k.startswith("m_")},
                v={k[len("v_"):]: data[k] for k in data.files if k.startswith("v_")},
                step=meta["step"],
            )
    return params, state, meta["step"]
