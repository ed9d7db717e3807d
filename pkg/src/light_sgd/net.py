"""Single-neuron (``L=0``) and one-hidden-ReLU-layer (``L=1``) binary classifiers
with a LIGHT output activation and hand-written backpropagation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from light_sgd.light import LightParams, light_eval, light_value_and_deriv

LOSS_MODES = ("activation-bce", "margin-literal")
REDUCTIONS = ("sum", "mean")
OUTPUT_CLAMP = 1e-7
CHECKPOINT_FORMAT = "light-sgd-model"
CHECKPOINT_VERSION = 1


class DivergenceError(FloatingPointError):
    """Loss or update became non-finite."""


@dataclass(frozen=True)
class NetworkConfig:
    n_features: int
    L: int = 0
    d_hidden: int = 5
    light: LightParams = field(default_factory=LightParams)
    loss_mode: str = "activation-bce"
    # margin-literal only: +1 evaluates light(y z) as printed, -1 evaluates light(-y z)
    margin_sign: int = 1
    reduction: str = "sum"

    def __post_init__(self):
        if self.L not in (0, 1):
            raise ValueError(f"L must be 0 or 1, got {self.L}")
        if self.n_features < 1:
            raise ValueError("n_features must be >= 1")
        if self.L == 1 and self.d_hidden < 1:
            raise ValueError("d_hidden must be >= 1 when L = 1")
        if self.loss_mode not in LOSS_MODES:
            raise ValueError(f"unknown loss_mode {self.loss_mode!r}")
        if self.margin_sign not in (1, -1):
            raise ValueError("margin_sign must be +1 or -1")
        if self.reduction not in REDUCTIONS:
            raise ValueError(f"unknown reduction {self.reduction!r}")

    @property
    def layer_shapes(self) -> list[tuple[int, int]]:
        if self.L == 0:
            return [(self.n_features, 1)]
        return [(self.n_features, self.d_hidden), (self.d_hidden, 1)]


@dataclass
class Model:
    """Weights ``W[l]`` (fan_in x fan_out) and biases ``b[l]`` (fan_out,)."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def params(self) -> list[np.ndarray]:
        """Flat view ``[W0, b0, W1, b1, ...]``; optimizers update these arrays in place."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def copy(self) -> "Model":
        return Model([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def to_dict(self) -> dict:
        return {
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            "layers": [
                {"shape": list(w.shape), "weights": w.ravel().tolist(), "bias": b.tolist()}
                for w, b in zip(self.weights, self.biases)
            ],
        }

    @classmethod
    def from_dict(cls, record: dict) -> "Model":
        if record.get("format") != CHECKPOINT_FORMAT:
            raise ValueError(f"not a model checkpoint: format={record.get('format')!r}")
        if record.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {record.get('version')!r}")
        weights, biases = [], []
        for layer in record["layers"]:
            rows, cols = layer["shape"]
            weights.append(np.asarray(layer["weights"], dtype=float).reshape(rows, cols))
            biases.append(np.asarray(layer["bias"], dtype=float).reshape(cols))
        return cls(weights, biases)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path: str | Path) -> "Model":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass
class Batch:
    x: np.ndarray
    y: np.ndarray  # labels in {-1, +1}

    def __post_init__(self):
        self.x = np.atleast_2d(np.asarray(self.x, dtype=float))
        self.y = np.asarray(self.y, dtype=float).ravel()
        if len(self.y) < 1 or len(self.y) != len(self.x):
            raise ValueError(f"batch needs >= 1 row and matching labels, got {self.x.shape} / {self.y.shape}")
        if not np.all(np.isin(self.y, (-1.0, 1.0))):
            raise ValueError("labels must be -1 or +1")

    def __len__(self) -> int:
        return len(self.y)

    @property
    def y01(self) -> np.ndarray:
        return (self.y > 0).astype(float)


def init_model(config: NetworkConfig, seed: int) -> Model:
    """Glorot-uniform weights, zero biases."""
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in config.layer_shapes:
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return Model(weights, biases)


def _check_width(model: Model, x: np.ndarray) -> None:
    if x.shape[1] != model.weights[0].shape[0]:
        raise ValueError(f"feature width {x.shape[1]} does not match model input {model.weights[0].shape[0]}")


def _pre_activation(model: Model, x: np.ndarray):
    """Returns ``z`` and the hidden cache ``(pre_hidden, hidden)`` (``None`` for ``L=0``)."""
    _check_width(model, x)
    # overflow shows up as a non-finite z, which callers treat as divergence
    with np.errstate(over="ignore", invalid="ignore"):
        if len(model.weights) == 1:
            return x @ model.weights[0][:, 0] + model.biases[0][0], None
        pre = x @ model.weights[0] + model.biases[0]
        hidden = np.maximum(pre, 0.0)
        return hidden @ model.weights[1][:, 0] + model.biases[1][0], (pre, hidden)


def forward(model: Model, batch: Batch, light: LightParams):
    """Pre-activations ``z`` and clamped LIGHT outputs for every sample."""
    z, _ = _pre_activation(model, batch.x)
    y_hat = np.clip(light_eval(z, light), OUTPUT_CLAMP, 1.0 - OUTPUT_CLAMP)
    return z, y_hat


def loss_and_grads(model: Model, batch: Batch, config: NetworkConfig):
    """Batch loss and its gradient, laid out like ``model.params``."""
    return loss_and_grads_xy(model, batch.x, batch.y, config)


def loss_and_grads_xy(model: Model, x: np.ndarray, y: np.ndarray, config: NetworkConfig):
    """``loss_and_grads`` on raw arrays; ``y`` must already hold -1/+1 labels."""
    light = config.light
    z, cache = _pre_activation(model, x)
    if not np.all(np.isfinite(z)):
        raise DivergenceError("non-finite pre-activation")
    if config.loss_mode == "activation-bce":
        raw, d_raw = light_value_and_deriv(z, light)
        y_hat = np.clip(raw, OUTPUT_CLAMP, 1.0 - OUTPUT_CLAMP)
        t = (y > 0).astype(float)
        per_sample = -(t * np.log(y_hat) + (1.0 - t) * np.log1p(-y_hat))
        d_yhat = -t / y_hat + (1.0 - t) / (1.0 - y_hat)
        active = (raw > OUTPUT_CLAMP) & (raw < 1.0 - OUTPUT_CLAMP)
        dz = np.where(active, d_yhat * d_raw, 0.0)
    else:
        signed_y = config.margin_sign * y
        per_sample, d_margin = light_value_and_deriv(signed_y * z, light)
        dz = d_margin * signed_y

    loss = float(np.sum(per_sample))
    if config.reduction == "mean":
        loss /= len(y)
        dz = dz / len(y)
    if not np.isfinite(loss):
        raise DivergenceError(f"non-finite loss {loss}")

    if cache is None:
        return loss, [x.T @ dz[:, None], np.array([dz.sum()])]
    pre, hidden = cache
    w_out = model.weights[1]
    d_hidden = dz[:, None] * w_out[:, 0][None, :] * (pre > 0)
    grads = [
        x.T @ d_hidden,
        d_hidden.sum(axis=0),
        hidden.T @ dz[:, None],
        np.array([dz.sum()]),
    ]
    return loss, grads


def predict(model: Model, x: np.ndarray) -> np.ndarray:
    """Class ``+1`` iff the pre-activation is ``>= 0``."""
    z, _ = _pre_activation(model, np.atleast_2d(np.asarray(x, dtype=float)))
    return np.where(z >= 0, 1.0, -1.0)


def accuracy(model: Model, batch: Batch) -> float:
    if len(batch) == 0:
        raise ValueError("accuracy of an empty batch")
    return float(np.mean(predict(model, batch.x) == batch.y))
