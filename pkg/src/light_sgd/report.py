"""Render stored experiment results as table CSVs, curve/hyperparameter CSVs, plots and a manifest.

Rendering is a pure function of the results, so re-running it on the same
stored cells reproduces every file byte for byte.
"""

from __future__ import annotations

import csv
import hashlib
import json
from collections import defaultdict
from pathlib import Path

import numpy as np

from light_sgd.bench import IMAGE_SOURCES, TABLE_ROWS, THRESHOLDS, ExperimentResult

SYNTHETIC = ("blobs", "xor", "circles", "moons")
COLUMN_GROUPS = [(0, "lower"), (0, "higher"), (1, "lower"), (1, "higher")]
THRESHOLD_ROWS = [
    ("sigmoid-adam", "-default-"),
    ("sigmoid-adagrad", "-default-"),
    ("sigmoid-sgd", "-default-"),
    ("light-v-sgd", "-Er-"),
    ("light-g-sgd", "-Er-"),
]
IMAGE_ROWS = ["sigmoid-adam", "sigmoid-adagrad", "sigmoid-sgd", "light-g-sgd"]
NOT_REACHED = "--"


def _fmt_acc(x: float) -> str:
    return f"{100 * x:.2f}"


def _index(results):
    return {(r.spec.dataset.name, str(r.spec.dataset.variance), r.spec.L, r.spec.method, r.spec.configuration): r
            for r in results}


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def max_accuracy_table(results, dataset: str) -> tuple[list[str], list[list]]:
    """Nine method/configuration rows x (accuracy %, n_epoch) for each (L, variance) group."""
    idx = _index(results)
    header = ["method", "configuration"]
    for L, level in COLUMN_GROUPS:
        header += [f"L{L}_{level}_accuracy", f"L{L}_{level}_n_epoch"]
    rows = []
    for method, conf in TABLE_ROWS:
        row = [method, conf]
        for L, level in COLUMN_GROUPS:
            res = idx.get((dataset, level, L, method, conf))
            row += [_fmt_acc(res.max_accuracy), res.argmax_epoch] if res else ["", ""]
        rows.append(row)
    return header, rows


def threshold_table(results, dataset: str) -> tuple[list[str], list[list]] | None:
    """Epochs for the mean curve to reach each cell's threshold; ``None`` if no cell has one."""
    idx = _index(results)
    thresholds = {}
    for L in (0, 1):
        found = [r.spec.thresholds[0] for k, r in idx.items() if k[0] == dataset and k[2] == L and r.spec.thresholds]
        thresholds[L] = found[0] if found else None
    if all(t is None for t in thresholds.values()):
        return None
    # columns without a stored cell still get the default threshold in their header
    thresholds = {L: t if t is not None else THRESHOLDS.get((dataset, L)) for L, t in thresholds.items()}
    header = ["method", "configuration"]
    for L, level in COLUMN_GROUPS:
        label = f"{100 * thresholds[L]:g}" if thresholds[L] is not None else "na"
        header.append(f"L{L}_{level}_acc_ge_{label}")
    rows = []
    for method, conf in THRESHOLD_ROWS:
        row = [method, conf]
        for L, level in COLUMN_GROUPS:
            res = idx.get((dataset, level, L, method, conf))
            if res is None or thresholds[L] is None:
                row.append("")
                continue
            hit = res.epochs_to_threshold.get(thresholds[L])
            row.append(NOT_REACHED if hit is None else hit)
        rows.append(row)
    return header, rows


def image_table(results, source: str) -> tuple[list[str], list[list]] | None:
    cells = {r.spec.method: r for r in results if r.spec.dataset.name == source}
    if not cells:
        return None
    thr = next((r.spec.thresholds[0] for r in cells.values() if r.spec.thresholds), None)
    header = ["method", "accuracy", "n_epoch"]
    if thr is not None:
        header.append(f"acc_ge_{100 * thr:g}")
    rows = []
    for method in IMAGE_ROWS:
        res = cells.get(method)
        if res is None:
            continue
        row = [method, _fmt_acc(res.max_accuracy), res.argmax_epoch]
        if thr is not None:
            hit = res.epochs_to_threshold.get(thr)
            row.append(NOT_REACHED if hit is None else hit)
        rows.append(row)
    return header, rows


def curve_rows(result: ExperimentResult) -> tuple[list[str], list[list]]:
    header = ["epoch", "mean", "std"] + [f"run{i}" for i in range(len(result.curves))]
    mean, std = result.mean_curve, result.std_curve
    rows = [[e, repr(float(mean[e])), repr(float(std[e]))] + [repr(float(v)) for v in result.curves[:, e]]
            for e in range(result.curves.shape[1])]
    return header, rows


def winner_rows(result: ExperimentResult) -> tuple[list[str], list[list]]:
    header = ["run", "seed", "r", "E", "T", "NT", "N0", "q", "epsilon"]
    rows = []
    for run, params in enumerate(result.light_params):
        rows.append([run, result.spec.base_seed + run] + [params[k] for k in header[2:]])
    return header, rows


def _plot_group(path: Path, group: list[ExperimentResult], title: str, fmt: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "light-sgd"
    fig, ax = plt.subplots(figsize=(7, 4))
    for res in group:
        mean, std = res.mean_curve, res.std_curve
        epochs = np.arange(len(mean))
        label = f"{res.spec.method} {res.spec.configuration}"
        ax.plot(epochs, mean, lw=1.0, label=label)
        ax.fill_between(epochs, mean - std, mean + std, alpha=0.15)
    ax.set_xlabel("epoch")
    ax.set_ylabel("test accuracy")
    ax.set_title(title)
    ax.legend(fontsize=6, loc="lower right")
    fig.tight_layout()
    fig.savefig(path, format=fmt, metadata={"Date": None} if fmt == "svg" else None)
    plt.close(fig)


def _plot_boxes(path: Path, group: list[ExperimentResult], title: str, fmt: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "light-sgd"
    keys = ("r", "E", "T", "NT")
    fig, axes = plt.subplots(1, len(keys), figsize=(10, 3))
    labels = [f"{r.spec.method.split('-sgd')[0]}\n{r.spec.configuration}" for r in group]
    for ax, key in zip(axes, keys):
        ax.boxplot([[p[key] for p in r.light_params] for r in group])
        ax.set_xticks(range(1, len(group) + 1), labels, fontsize=6)
        ax.set_title(key)
    fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, format=fmt, metadata={"Date": None} if fmt == "svg" else None)
    plt.close(fig)


def report(results: list[ExperimentResult], out_dir: str | Path, fmt: str = "png") -> list[Path]:
    """Write every report file under ``out_dir`` and return their paths (manifest last).

    ``fmt`` is ``"png"``, ``"svg"`` or ``"none"`` (tables and CSVs only).
    """
    if not results:
        raise ValueError("no results to report")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def emit(rel: str, header, rows):
        path = out / rel
        _write_csv(path, header, rows)
        written.append(path)

    names = {r.spec.dataset.name for r in results}
    for name in SYNTHETIC:
        if name not in names:
            continue
        emit(f"tables/max_accuracy_{name}.csv", *max_accuracy_table(results, name))
        table = threshold_table(results, name)
        if table is not None:
            emit(f"tables/threshold_{name}.csv", *table)
    for source in IMAGE_SOURCES:
        table = image_table(results, source)
        if table is not None:
            emit(f"tables/image_{source}.csv", *table)

    for res in sorted(results, key=lambda r: r.spec.key):
        emit(f"curves/{res.spec.key}.csv", *curve_rows(res))
        if any(s is not None for s in res.searches):
            emit(f"hyperparams/{res.spec.key}.csv", *winner_rows(res))

    if fmt != "none":
        groups = defaultdict(list)
        for res in sorted(results, key=lambda r: r.spec.key):
            groups[(res.spec.dataset.key, res.spec.L)].append(res)
        (out / "plots").mkdir(exist_ok=True)
        for (dkey, L), group in sorted(groups.items()):
            path = out / "plots" / f"curves_{dkey}_L{L}.{fmt}"
            _plot_group(path, group, f"{dkey}, L={L}", fmt)
            written.append(path)
            searched = [r for r in group if any(s is not None for s in r.searches)]
            if searched:
                path = out / "plots" / f"hyperparams_{dkey}_L{L}.{fmt}"
                _plot_boxes(path, searched, f"winning hyperparameters, {dkey}, L={L}", fmt)
                written.append(path)

    manifest = {
        "files": {
            str(p.relative_to(out)): hashlib.sha256(p.read_bytes()).hexdigest() for p in written
        },
        "cells": {
            r.spec.key: {
                "spec": r.spec.to_dict(),
                "seeds": [r.spec.base_seed + i for i in range(r.spec.n_runs)],
                "diverged": r.diverged,
            }
            for r in sorted(results, key=lambda r: r.spec.key)
        },
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    written.append(path)
    return written
