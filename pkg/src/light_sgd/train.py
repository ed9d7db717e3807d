"""Mini-batch training loop shared by the hyperparameter search and the benchmark."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from light_sgd.net import Batch, DivergenceError, Model, NetworkConfig, accuracy, init_model, loss_and_grads_xy
from light_sgd.optim import OptimizerState, make_optimizer, step


def n_steps(n_train: int, batch_size: int) -> int:
    """Optimizer steps per epoch; the final partial batch is kept."""
    return -(-n_train // batch_size)


def train_epoch(
    model: Model,
    opt: OptimizerState,
    x: np.ndarray,
    y: np.ndarray,
    config: NetworkConfig,
    batch_size: int,
    rng: np.random.Generator,
) -> int:
    """One shuffled pass over ``(x, y)``; returns the number of optimizer steps taken."""
    y = Batch(x, y).y  # validates labels once per epoch
    order = rng.permutation(len(y))
    steps = 0
    for start in range(0, len(y), batch_size):
        idx = order[start : start + batch_size]
        _, grads = loss_and_grads_xy(model, x[idx], y[idx], config)
        step(opt, model, grads)
        steps += 1
    return steps


@dataclass
class RunTrace:
    curve: np.ndarray  # test accuracy after each epoch
    diverged: bool
    diverged_epoch: int | None
    model: Model


def train_run(
    config: NetworkConfig,
    x_train: np.ndarray,
    y_train: np.ndarray,
    x_test: np.ndarray,
    y_test: np.ndarray,
    optimizer: str = "sgd",
    n_epochs: int = 1500,
    batch_size: int = 75,
    seed: int = 0,
    optimizer_overrides: dict | None = None,
) -> RunTrace:
    """Train a fresh model; on divergence the curve is frozen at its last finite value."""
    model = init_model(config, seed)
    opt = make_optimizer(optimizer, model, **(optimizer_overrides or {}))
    rng = np.random.default_rng(seed)
    test = Batch(x_test, y_test)
    curve = np.empty(n_epochs)
    last = accuracy(model, test)
    for epoch in range(n_epochs):
        try:
            train_epoch(model, opt, x_train, y_train, config, batch_size, rng)
        except DivergenceError:
            curve[epoch:] = last
            return RunTrace(curve, True, epoch, model)
        last = accuracy(model, test)
        curve[epoch] = last
    return RunTrace(curve, False, None, model)
