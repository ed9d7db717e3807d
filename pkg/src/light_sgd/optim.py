"""Plain SGD, Adam and Adagrad acting in place on ``Model.params``."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from light_sgd.net import DivergenceError, Model

DEFAULTS = {
    "sgd": dict(lr=0.01),
    "adam": dict(lr=0.001, beta1=0.9, beta2=0.999, eps=1e-7),
    "adagrad": dict(lr=0.001, eps=1e-7),
}


@dataclass
class OptimizerState:
    kind: str
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-7
    timestep: int = 0
    first_moment: list[np.ndarray] = field(default_factory=list)
    second_moment: list[np.ndarray] = field(default_factory=list)
    accumulator: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        if self.kind not in DEFAULTS:
            raise ValueError(f"unknown optimizer {self.kind!r}")
        if not self.lr > 0:
            raise ValueError(f"step size must be > 0, got {self.lr}")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("betas must lie in [0, 1)")


def make_optimizer(kind: str, model: Model, **overrides) -> OptimizerState:
    """Optimizer with default hyperparameters and zeroed buffers shaped like ``model``."""
    if kind not in DEFAULTS:
        raise ValueError(f"unknown optimizer {kind!r}")
    state = OptimizerState(kind=kind, **{**DEFAULTS[kind], **overrides})
    zeros = lambda: [np.zeros_like(p) for p in model.params]  # noqa: E731
    if kind == "adam":
        state.first_moment, state.second_moment = zeros(), zeros()
    elif kind == "adagrad":
        state.accumulator = zeros()
    return state


def step(state: OptimizerState, model: Model, grads: list[np.ndarray]) -> Model:
    """Apply one update to ``model`` in place and return it."""
    params = model.params
    if len(grads) != len(params) or any(g.shape != p.shape for g, p in zip(grads, params)):
        raise ValueError("gradient shapes do not match the model")
    if state.kind == "sgd":
        updates = [state.lr * g for g in grads]
    elif state.kind == "adam":
        state.timestep += 1
        t = state.timestep
        c1 = 1.0 - state.beta1**t
        c2 = 1.0 - state.beta2**t
        updates = []
        for m, v, g in zip(state.first_moment, state.second_moment, grads):
            m *= state.beta1
            m += (1.0 - state.beta1) * g
            v *= state.beta2
            v += (1.0 - state.beta2) * g * g
            updates.append(state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps))
    else:
        updates = []
        for acc, g in zip(state.accumulator, grads):
            acc += g * g
            updates.append(state.lr * g / (np.sqrt(acc) + state.eps))

    if not np.isfinite(sum(float(np.abs(u).sum()) for u in updates)):
        raise DivergenceError("non-finite gradient or update")
    for p, u in zip(params, updates):
        p -= u
    return model
