"""Random pick from a full grid of LIGHT hyperparameters, scored after one epoch."""

from __future__ import annotations

import csv
import itertools
import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from light_sgd.data import Dataset
from light_sgd.light import VARIANTS, LightParams, LightRangeError, config_name
from light_sgd.net import Batch, DivergenceError, NetworkConfig, accuracy, init_model
from light_sgd.optim import make_optimizer
from light_sgd.qcalc import QPoleError
from light_sgd.train import train_epoch


@dataclass(frozen=True)
class SearchSpace:
    configuration: str = "-Er-"
    variant: str = "light-v"
    r_grid: tuple[float, float, int] = (0.1, 20.0, 5)
    E_grid: tuple[float, float, int] = (0.0, 20.0, 5)
    T_grid: tuple[float, float, int] = (0.0, 3.0, 3)
    NT_grid: tuple[float, float, int] = (0.2, 0.8, 5)
    N0: float = 0.3
    fraction: float = 0.025
    epsilon_policy: str = "harvest"
    eval_mode: str = "deformed"
    val_fraction: float = 0.2
    epochs: int = 1
    batch_size: int = 75

    def __post_init__(self):
        key = config_name(self.configuration)
        if key == "-default-":
            raise ValueError("-default- has no searchable hyperparameters")
        object.__setattr__(self, "configuration", key)
        if self.variant not in VARIANTS:
            raise KeyError(f"unknown variant {self.variant!r}")
        if not 0 < self.fraction <= 1:
            raise ValueError("fraction must lie in (0, 1]")

    def axes(self) -> dict[str, np.ndarray]:
        axis = lambda spec: np.linspace(spec[0], spec[1], int(spec[2]))  # noqa: E731
        r, E = axis(self.r_grid), axis(self.E_grid)
        if self.configuration == "-r-":
            E = np.array([0.0])
        elif self.configuration == "-E-":
            r = np.array([1.0])
        return {"r": r, "E": E, "T": axis(self.T_grid), "NT": axis(self.NT_grid)}


@dataclass
class Candidate:
    index: int
    values: dict
    params: LightParams | None
    error: str | None = None

    @property
    def valid(self) -> bool:
        return self.params is not None


def build_grid(space: SearchSpace) -> list[Candidate]:
    """Full Cartesian product in (r, E, T, NT) order; invalid points keep their slot."""
    axes = space.axes()
    out = []
    for index, (r, E, T, NT) in enumerate(itertools.product(axes["r"], axes["E"], axes["T"], axes["NT"])):
        values = {"r": float(r), "E": float(E), "T": float(T), "NT": float(NT)}
        try:
            params = LightParams(
                **values,
                N0=space.N0,
                q=VARIANTS[space.variant],
                epsilon_policy=space.epsilon_policy,
                eval_mode=space.eval_mode,
            )
            out.append(Candidate(index, values, params))
        except (LightRangeError, QPoleError) as exc:
            out.append(Candidate(index, values, None, str(exc)))
    return out


def sample_size(grid_size: int, fraction: float = 0.025) -> int:
    """``fraction * grid_size`` rounded half up, at least 1."""
    return max(1, math.floor(fraction * grid_size + 0.5))


@dataclass
class Evaluation:
    draw: int
    index: int
    params: dict
    accuracy: float
    diverged: bool = False


@dataclass
class SearchResult:
    space: dict
    seed: int
    grid_size: int
    n_valid: int
    evaluations: list[Evaluation] = field(default_factory=list)
    winner_draw: int = 0

    @property
    def winner(self) -> Evaluation:
        return self.evaluations[self.winner_draw]

    @property
    def winner_params(self) -> LightParams:
        return LightParams.from_dict(self.winner.params)

    def to_dict(self) -> dict:
        return {
            "space": self.space,
            "seed": self.seed,
            "grid_size": self.grid_size,
            "n_valid": self.n_valid,
            "winner_draw": self.winner_draw,
            "evaluations": [asdict(e) for e in self.evaluations],
        }

    @classmethod
    def from_dict(cls, record: dict) -> "SearchResult":
        evals = [Evaluation(**e) for e in record["evaluations"]]
        return cls(record["space"], record["seed"], record["grid_size"], record["n_valid"], evals, record["winner_draw"])

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True))

    def write_candidates_csv(self, path: str | Path) -> None:
        with Path(path).open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["draw", "grid_index", "r", "E", "T", "NT", "N0", "q", "accuracy", "diverged", "winner"])
            for e in self.evaluations:
                p = e.params
                writer.writerow(
                    [e.draw, e.index, p["r"], p["E"], p["T"], p["NT"], p["N0"], p["q"],
                     e.accuracy, int(e.diverged), int(e.draw == self.winner_draw)]
                )


def validation_split(dataset: Dataset, val_fraction: float = 0.2) -> tuple[np.ndarray, np.ndarray]:
    """The training split minus its last ``val_fraction`` share, and that share."""
    train = dataset.train_idx
    n_val = max(1, int(round(val_fraction * len(train))))
    return train[:-n_val], train[-n_val:]


def evaluate_candidate(
    params: LightParams,
    dataset: Dataset,
    config: NetworkConfig,
    seed: int,
    epochs: int = 1,
    batch_size: int = 75,
    val_fraction: float = 0.2,
) -> tuple[float, bool]:
    """Validation accuracy after ``epochs`` of SGD from a fresh model."""
    fit_idx, val_idx = validation_split(dataset, val_fraction)
    cfg = replace(config, light=params)
    model = init_model(cfg, seed)
    opt = make_optimizer("sgd", model)
    rng = np.random.default_rng(seed)
    x, y = dataset.features, dataset.labels
    try:
        for _ in range(epochs):
            train_epoch(model, opt, x[fit_idx], y[fit_idx], cfg, batch_size, rng)
    except DivergenceError:
        return 0.0, True
    return accuracy(model, Batch(x[val_idx], y[val_idx])), False


def random_search(space: SearchSpace, dataset: Dataset, config: NetworkConfig, seed: int) -> SearchResult:
    grid = build_grid(space)
    valid = [c for c in grid if c.valid]
    if not valid:
        raise ValueError("every grid candidate violates the LIGHT parameter constraints")
    k = min(sample_size(len(grid), space.fraction), len(valid))
    rng = np.random.default_rng(seed)
    picks = rng.choice(len(valid), size=k, replace=False)

    result = SearchResult(asdict(space), seed, len(grid), len(valid))
    # candidates share one initialisation (the run's own), so only the LIGHT parameters differ
    for draw, pick in enumerate(picks):
        cand = valid[int(pick)]
        acc, diverged = evaluate_candidate(
            cand.params, dataset, config, seed, space.epochs, space.batch_size, space.val_fraction
        )
        result.evaluations.append(Evaluation(draw, cand.index, cand.params.to_dict(), acc, diverged))

    usable = [e for e in result.evaluations if not e.diverged]
    if not usable:
        raise DivergenceError("every sampled candidate diverged")
    # max() keeps the first of equal scores, i.e. the earliest draw
    result.winner_draw = max(usable, key=lambda e: e.accuracy).draw
    return result
