"""Experiment cells: (dataset, architecture, method, configuration) x runs x epochs."""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from light_sgd import data as data_mod
from light_sgd.hpo import SearchResult, SearchSpace, random_search
from light_sgd.light import VARIANTS, LightParams, config_name, preset
from light_sgd.net import NetworkConfig
from light_sgd.train import train_run

DATA_ROOT_ENV = "LIGHT_DATA_ROOT"

METHODS = {
    "sigmoid-sgd": ("sgd", None),
    "sigmoid-adam": ("adam", None),
    "sigmoid-adagrad": ("adagrad", None),
    "light-v-sgd": ("sgd", "light-v"),
    "light-g-sgd": ("sgd", "light-g"),
}

# The nine (method, configuration) rows of the max-accuracy tables.
TABLE_ROWS = [
    ("sigmoid-adam", "-default-"),
    ("sigmoid-adagrad", "-default-"),
    ("sigmoid-sgd", "-default-"),
    ("light-v-sgd", "-r-"),
    ("light-v-sgd", "-E-"),
    ("light-v-sgd", "-Er-"),
    ("light-g-sgd", "-r-"),
    ("light-g-sgd", "-E-"),
    ("light-g-sgd", "-Er-"),
]

# Accuracy thresholds of the epochs-to-threshold tables, keyed by (dataset, L).
THRESHOLDS = {
    ("blobs", 0): 0.95,
    ("blobs", 1): 0.95,
    ("xor", 0): 0.60,
    ("xor", 1): 0.90,
    ("circles", 0): 0.55,
    ("circles", 1): 0.85,
    ("moons", 0): 0.85,
    ("moons", 1): 0.90,
    ("mnist", 1): 0.972,
    ("fashion-mnist", 1): 0.976,
    ("cifar10", 1): 0.90,
}

IMAGE_SOURCES = ("mnist", "fashion-mnist", "cifar10")

# Fixed growth/decline rates for the image application; T as in the presets, N0 = NT = 0.3.
IMAGE_LIGHT = dict(r=4.08, E=6.4, T=0.75, N0=0.3, NT=0.3, epsilon_policy="harvest")


@dataclass(frozen=True)
class DatasetSpec:
    name: str = "blobs"
    variance: str | float = "lower"
    m: int = 1000
    seed: int = 0
    train_fraction: float = 0.8
    target_class: int = 5
    root: str | None = None

    @property
    def key(self) -> str:
        if self.name in IMAGE_SOURCES:
            return self.name
        return f"{self.name}-{self.variance}"

    def materialize(self) -> data_mod.Dataset:
        if self.name in IMAGE_SOURCES:
            root = self.root or os.environ.get(DATA_ROOT_ENV)
            if not root:
                raise FileNotFoundError(f"image data needs a root path or ${DATA_ROOT_ENV}")
            return data_mod.load_image_dataset(
                self.name, root, self.target_class, self.m, self.seed, self.train_fraction
            )
        ds = data_mod.make_synthetic(self.name, self.variance, self.m, self.seed)
        return data_mod.split(ds, self.train_fraction, self.seed)


@dataclass(frozen=True)
class ExperimentSpec:
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    L: int = 0
    d_hidden: int = 5
    method: str = "sigmoid-sgd"
    configuration: str = "-default-"
    n_runs: int = 10
    n_epochs: int = 1500
    batch_size: int = 75
    base_seed: int = 0
    thresholds: tuple[float, ...] | None = None
    light_override: dict | None = None
    loss_mode: str = "activation-bce"
    reduction: str = "mean"
    eval_mode: str = "deformed"
    optimizer_overrides: dict | None = None
    search: dict | None = None  # SearchSpace field overrides

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if isinstance(self.dataset, dict):
            object.__setattr__(self, "dataset", DatasetSpec(**self.dataset))
        conf = config_name(self.configuration)
        if METHODS[self.method][1] is None:
            conf = "-default-"
        object.__setattr__(self, "configuration", conf)
        if self.thresholds is None:
            thr = THRESHOLDS.get((self.dataset.name, self.L))
            object.__setattr__(self, "thresholds", (thr,) if thr is not None else ())
        else:
            object.__setattr__(self, "thresholds", tuple(float(t) for t in self.thresholds))
        if self.n_runs < 1 or self.n_epochs < 1 or self.batch_size < 1:
            raise ValueError("n_runs, n_epochs and batch_size must be positive")

    @property
    def optimizer(self) -> str:
        return METHODS[self.method][0]

    @property
    def variant(self) -> str:
        return METHODS[self.method][1] or "light-v"

    @property
    def searched(self) -> bool:
        return (
            METHODS[self.method][1] is not None
            and self.configuration != "-default-"
            and self.light_override is None
        )

    @property
    def key(self) -> str:
        return f"{self.dataset.key}_L{self.L}_{self.method}_{self.configuration.strip('-') or 'default'}"

    def to_dict(self) -> dict:
        out = asdict(self)
        out["thresholds"] = list(self.thresholds)
        return out

    @classmethod
    def from_dict(cls, record: dict) -> "ExperimentSpec":
        record = dict(record)
        record["dataset"] = DatasetSpec(**record.get("dataset", {}))
        if record.get("thresholds") is not None:
            record["thresholds"] = tuple(record["thresholds"])
        return cls(**record)

    def network_config(self, n_features: int, light: LightParams) -> NetworkConfig:
        return NetworkConfig(
            n_features=n_features,
            L=self.L,
            d_hidden=self.d_hidden,
            light=light,
            loss_mode=self.loss_mode,
            reduction=self.reduction,
        )

    def search_space(self) -> SearchSpace:
        overrides = dict(self.search or {})
        overrides.setdefault("batch_size", self.batch_size)
        overrides.setdefault("eval_mode", self.eval_mode)
        return SearchSpace(configuration=self.configuration, variant=self.variant, **overrides)

    def fixed_light(self) -> LightParams:
        if self.light_override is not None:
            record = {"q": VARIANTS[self.variant], "eval_mode": self.eval_mode, **self.light_override}
            return LightParams.from_dict(record)
        return preset(self.configuration, self.variant).replace(eval_mode=self.eval_mode)


@dataclass
class RunOutcome:
    seed: int
    curve: np.ndarray
    light: dict
    search: dict | None
    diverged: bool
    diverged_epoch: int | None


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    curves: np.ndarray  # n_runs x n_epochs
    light_params: list[dict]
    searches: list[dict | None]
    diverged: list[bool]
    diverged_epochs: list[int | None]
    wall_clock: float = 0.0

    @property
    def mean_curve(self) -> np.ndarray:
        return self.curves.mean(axis=0)

    @property
    def std_curve(self) -> np.ndarray:
        return self.curves.std(axis=0)

    @property
    def max_accuracy(self) -> float:
        return float(self.mean_curve.max())

    @property
    def argmax_epoch(self) -> int:
        return int(np.argmax(self.mean_curve))

    @property
    def epochs_to_threshold(self) -> dict[float, int | None]:
        return {t: epochs_to_threshold(self.mean_curve, t) for t in self.spec.thresholds}

    @property
    def flagged(self) -> bool:
        return any(self.diverged)

    def to_dict(self, include_timing: bool = True) -> dict:
        out = {
            "key": self.spec.key,
            "spec": self.spec.to_dict(),
            "curves": self.curves.tolist(),
            "light_params": self.light_params,
            "searches": self.searches,
            "diverged": self.diverged,
            "diverged_epochs": self.diverged_epochs,
            "summary": {
                "max_accuracy": self.max_accuracy,
                "argmax_epoch": self.argmax_epoch,
                "epochs_to_threshold": {str(k): v for k, v in self.epochs_to_threshold.items()},
            },
        }
        if include_timing:
            out["wall_clock"] = self.wall_clock
        return out

    @classmethod
    def from_dict(cls, record: dict) -> "ExperimentResult":
        return cls(
            ExperimentSpec.from_dict(record["spec"]),
            np.asarray(record["curves"], dtype=float),
            record["light_params"],
            record["searches"],
            record["diverged"],
            record["diverged_epochs"],
            record.get("wall_clock", 0.0),
        )

    def save(self, path: str | Path, include_timing: bool = True) -> None:
        Path(path).write_text(json.dumps(self.to_dict(include_timing), sort_keys=True))

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentResult":
        return cls.from_dict(json.loads(Path(path).read_text()))


def epochs_to_threshold(curve: np.ndarray, threshold: float) -> int | None:
    """First (zero-based) epoch with ``curve >= threshold``; ``None`` if never reached."""
    hits = np.flatnonzero(np.asarray(curve) >= threshold)
    return int(hits[0]) if hits.size else None


def _run_one(spec: ExperimentSpec, dataset: data_mod.Dataset, run: int) -> RunOutcome:
    seed = spec.base_seed + run
    search = None
    if spec.searched:
        probe = spec.network_config(dataset.n, preset("-default-"))
        found = random_search(spec.search_space(), dataset, probe, seed)
        search = found.to_dict()
        light = found.winner_params
    else:
        light = spec.fixed_light()
    config = spec.network_config(dataset.n, light)
    x_train, y_train = dataset.train
    x_test, y_test = dataset.test
    trace = train_run(
        config,
        x_train,
        y_train,
        x_test,
        y_test,
        optimizer=spec.optimizer,
        n_epochs=spec.n_epochs,
        batch_size=spec.batch_size,
        seed=seed,
        optimizer_overrides=spec.optimizer_overrides,
    )
    return RunOutcome(seed, trace.curve, light.to_dict(), search, trace.diverged, trace.diverged_epoch)


def _run_star(args):
    return _run_one(*args)


def run_cell(spec: ExperimentSpec, dataset: data_mod.Dataset | None = None, jobs: int = 1) -> ExperimentResult:
    """Train every run of a cell; results do not depend on ``jobs``."""
    start = time.perf_counter()
    dataset = dataset if dataset is not None else spec.dataset.materialize()
    tasks = [(spec, dataset, run) for run in range(spec.n_runs)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_star, tasks))
    else:
        outcomes = [_run_star(t) for t in tasks]
    return ExperimentResult(
        spec,
        np.vstack([o.curve for o in outcomes]),
        [o.light for o in outcomes],
        [o.search for o in outcomes],
        [o.diverged for o in outcomes],
        [o.diverged_epoch for o in outcomes],
        time.perf_counter() - start,
    )


def expand_matrix(config: dict) -> list[ExperimentSpec]:
    """Expand a bench config into cell specs.

    Accepts either ``{"cells": [spec, ...]}`` or a matrix with ``datasets``
    (list of dataset dicts), ``architectures`` (list of L), ``rows`` (list of
    ``[method, configuration]``, default: the nine table rows) and any shared
    ``ExperimentSpec`` fields under ``common``.
    """
    if "cells" in config:
        return [ExperimentSpec.from_dict(c) for c in config["cells"]]
    common = dict(config.get("common", {}))
    rows = config.get("rows", TABLE_ROWS)
    specs = []
    for ds in config["datasets"]:
        for L in config.get("architectures", [0, 1]):
            if ds.get("name") in IMAGE_SOURCES and L == 0:
                continue
            for method, conf in rows:
                record = {**common, "dataset": ds, "L": L, "method": method, "configuration": conf}
                if ds.get("name") in IMAGE_SOURCES and method != "sigmoid-sgd" and METHODS[method][1]:
                    record.setdefault("light_override", IMAGE_LIGHT)
                specs.append(ExperimentSpec.from_dict(record))
    return specs


def synthetic_matrix(n_runs: int = 10, n_epochs: int = 1500, base_seed: int = 0) -> dict:
    """All synthetic cells of the max-accuracy tables (4 sets x 2 variances x 2 architectures x 9 rows)."""
    datasets = [
        {"name": name, "variance": level}
        for name in ("blobs", "xor", "circles", "moons")
        for level in ("lower", "higher")
    ]
    common = {"n_runs": n_runs, "n_epochs": n_epochs, "base_seed": base_seed}
    return {"datasets": datasets, "architectures": [0, 1], "common": common}


def image_matrix(n_runs: int = 10, n_epochs: int = 1500, base_seed: int = 0, root: str | None = None) -> dict:
    """Image application cells: L=1 with sigmoid baselines and light-g -Er- at the fixed rates."""
    datasets = [{"name": name, "root": root} for name in IMAGE_SOURCES]
    rows = [("sigmoid-adam", "-default-"), ("sigmoid-adagrad", "-default-"),
            ("sigmoid-sgd", "-default-"), ("light-g-sgd", "-Er-")]
    common = {"n_runs": n_runs, "n_epochs": n_epochs, "base_seed": base_seed}
    return {"datasets": datasets, "architectures": [1], "rows": rows, "common": common}


def run_bench(specs: list[ExperimentSpec], out_dir: str | Path | None = None, jobs: int = 1, log=print):
    """Run cells sequentially (runs inside a cell in parallel), saving each result as it finishes."""
    results = []
    cache: dict[DatasetSpec, data_mod.Dataset] = {}
    for i, spec in enumerate(specs):
        if spec.dataset not in cache:
            cache[spec.dataset] = spec.dataset.materialize()
        result = run_cell(spec, cache[spec.dataset], jobs=jobs)
        results.append(result)
        if out_dir is not None:
            out = Path(out_dir) / "cells"
            out.mkdir(parents=True, exist_ok=True)
            result.save(out / f"{spec.key}.json")
        if log:
            flag = " DIVERGED" if result.flagged else ""
            log(f"[{i + 1}/{len(specs)}] {spec.key}: max {100 * result.max_accuracy:.2f}% "
                f"@ {result.argmax_epoch} ({result.wall_clock:.1f}s){flag}")
    return results


def load_results(directory: str | Path) -> list[ExperimentResult]:
    directory = Path(directory)
    cells = directory / "cells" if (directory / "cells").is_dir() else directory
    return [ExperimentResult.load(p) for p in sorted(cells.glob("*.json"))]


def searched_winners(result: ExperimentResult) -> list[LightParams]:
    return [SearchResult.from_dict(s).winner_params for s in result.searches if s is not None]
