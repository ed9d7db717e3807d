"""Synthetic binary datasets, IDX / CIFAR-10 readers, splitting and persistence.

Geometry of the synthetic sets:

* BLOBS: two isotropic Gaussians at (-1, -1) (label -1) and (+1, +1) (label +1).
* XOR: four Gaussians at (+-1, +-1); label +1 iff the centre's coordinates share a sign.
* CIRCLES: outer circle radius 1 (label -1), inner circle radius 0.5 (label +1).
* MOONS: upper arc ``(cos a, sin a)`` (label -1) and lower arc
  ``(1 - cos a, 0.5 - sin a)`` (label +1), ``a`` in [0, pi].

CIRCLES and MOONS come from scikit-learn's generators; labels are mapped 0 -> -1, 1 -> +1.
"""

from __future__ import annotations

import csv
import gzip
import hashlib
import json
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from sklearn import datasets as skd

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801
CIFAR_RECORD = 1 + 3072

IDX_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}
CIFAR_TRAIN_BATCHES = tuple(f"data_batch_{i}.bin" for i in range(1, 6))

# Lower / higher variance settings of each synthetic set.
SYNTHETIC_VARIANCE = {
    "blobs": (0.25, 0.5),
    "xor": (0.45, 0.9),
    "circles": (0.1, 0.25),
    "moons": (0.1, 0.25),
}


class DatasetFormatError(ValueError):
    """Raw dataset file is missing, truncated or has the wrong header."""


@dataclass
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    train_idx: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    test_idx: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.labels = np.asarray(self.labels, dtype=float)
        if self.features.ndim != 2 or len(self.features) != len(self.labels):
            raise ValueError("features must be m x n with one label per row")
        if not np.all(np.isin(self.labels, (-1.0, 1.0))):
            raise ValueError("labels must be -1 or +1")

    @property
    def m(self) -> int:
        return len(self.labels)

    @property
    def n(self) -> int:
        return self.features.shape[1]

    @property
    def train(self) -> tuple[np.ndarray, np.ndarray]:
        return self.features[self.train_idx], self.labels[self.train_idx]

    @property
    def test(self) -> tuple[np.ndarray, np.ndarray]:
        return self.features[self.test_idx], self.labels[self.test_idx]


def _check_m(m: int, parts: int = 2) -> None:
    if m < parts:
        raise ValueError(f"m must be at least {parts}, got {m}")


def make_blobs(m: int = 1000, cluster_std: float = 0.25, seed: int = 0) -> Dataset:
    _check_m(m)
    if m % 2:
        raise ValueError(f"m must be even, got {m}")
    if cluster_std < 0:
        raise ValueError("cluster_std must be >= 0")
    x, y = skd.make_blobs(
        n_samples=[m // 2, m // 2],
        n_features=2,
        centers=[(-1.0, -1.0), (1.0, 1.0)],
        cluster_std=cluster_std,
        random_state=seed,
    )
    return Dataset(x, 2.0 * y - 1.0, meta={"generator": "blobs", "variance": cluster_std, "seed": seed})


def make_xor(m: int = 1000, cluster_std: float = 0.45, seed: int = 0) -> Dataset:
    """Four clusters; when ``m % 4 != 0`` the first clusters get one extra point."""
    _check_m(m, 4)
    if cluster_std < 0:
        raise ValueError("cluster_std must be >= 0")
    rng = np.random.default_rng(seed)
    centers = np.array([(1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)])
    sizes = [m // 4 + (i < m % 4) for i in range(4)]
    xs, ys = [], []
    for center, size in zip(centers, sizes):
        xs.append(center + cluster_std * rng.standard_normal((size, 2)))
        ys.append(np.full(size, 1.0 if center[0] * center[1] > 0 else -1.0))
    x, y = np.vstack(xs), np.concatenate(ys)
    order = rng.permutation(m)
    return Dataset(x[order], y[order], meta={"generator": "xor", "variance": cluster_std, "seed": seed})


def make_circles(m: int = 1000, noise: float = 0.1, seed: int = 0) -> Dataset:
    _check_m(m)
    if noise < 0:
        raise ValueError("noise must be >= 0")
    x, y = skd.make_circles(n_samples=m, noise=noise or None, factor=0.5, random_state=seed)
    return Dataset(x, 2.0 * y - 1.0, meta={"generator": "circles", "variance": noise, "seed": seed})


def make_moons(m: int = 1000, noise: float = 0.1, seed: int = 0) -> Dataset:
    _check_m(m)
    if noise < 0:
        raise ValueError("noise must be >= 0")
    x, y = skd.make_moons(n_samples=m, noise=noise or None, random_state=seed)
    return Dataset(x, 2.0 * y - 1.0, meta={"generator": "moons", "variance": noise, "seed": seed})


GENERATORS = {"blobs": make_blobs, "xor": make_xor, "circles": make_circles, "moons": make_moons}


def make_synthetic(name: str, variance: str | float = "lower", m: int = 1000, seed: int = 0) -> Dataset:
    """Generate a named synthetic set; ``variance`` is ``"lower"``, ``"higher"`` or a number."""
    if name not in GENERATORS:
        raise KeyError(f"unknown synthetic dataset {name!r}")
    if isinstance(variance, str):
        level = {"lower": 0, "higher": 1}[variance]
        variance = SYNTHETIC_VARIANCE[name][level]
    return GENERATORS[name](m, variance, seed)


def split(dataset: Dataset, train_fraction: float = 0.8, seed: int = 0) -> Dataset:
    """Uniform random permutation; the first ``floor(fraction * m)`` rows train."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    n_train = int(np.floor(train_fraction * dataset.m))
    if n_train == 0 or n_train == dataset.m:
        raise ValueError("split leaves one side empty")
    order = np.random.default_rng(seed).permutation(dataset.m)
    meta = {**dataset.meta, "split_seed": seed, "train_fraction": train_fraction}
    return replace(dataset, train_idx=np.sort(order[:n_train]), test_idx=np.sort(order[n_train:]), meta=meta)


# --- raw image formats -------------------------------------------------------


def _open_bytes(path: Path) -> bytes:
    if path.exists():
        return path.read_bytes()
    gz = path.with_name(path.name + ".gz")
    if gz.exists():
        return gzip.decompress(gz.read_bytes())
    raise FileNotFoundError(f"missing dataset file {path} (or {gz.name})")


def parse_idx(raw: bytes, expected_magic: int | None = None) -> np.ndarray:
    """Parse an IDX unsigned-byte file (magic ``0x000008NN``, NN = number of dims)."""
    if len(raw) < 4:
        raise DatasetFormatError("IDX file shorter than its magic number")
    (magic,) = struct.unpack(">I", raw[:4])
    if expected_magic is not None and magic != expected_magic:
        raise DatasetFormatError(f"IDX magic mismatch: got {magic:#010x}, expected {expected_magic:#010x}")
    if magic >> 8 != 0x08:
        raise DatasetFormatError(f"unsupported IDX type in magic {magic:#010x}")
    ndim = magic & 0xFF
    header = 4 + 4 * ndim
    if len(raw) < header:
        raise DatasetFormatError("IDX header truncated")
    dims = struct.unpack(f">{ndim}I", raw[4:header])
    size = int(np.prod(dims))
    if len(raw) != header + size:
        raise DatasetFormatError(f"IDX payload is {len(raw) - header} bytes, header promises {size}")
    return np.frombuffer(raw, dtype=np.uint8, offset=header).reshape(dims)


def write_idx(array: np.ndarray) -> bytes:
    array = np.asarray(array, dtype=np.uint8)
    header = struct.pack(">I", 0x0800 | array.ndim) + struct.pack(f">{array.ndim}I", *array.shape)
    return header + array.tobytes()


def parse_cifar(raw: bytes) -> tuple[np.ndarray, np.ndarray]:
    """Parse a CIFAR-10 binary batch into (labels, N x 3072 pixels)."""
    if len(raw) == 0 or len(raw) % CIFAR_RECORD:
        raise DatasetFormatError(f"CIFAR batch of {len(raw)} bytes is not a whole number of records")
    records = np.frombuffer(raw, dtype=np.uint8).reshape(-1, CIFAR_RECORD)
    labels = records[:, 0]
    if labels.max() > 9:
        raise DatasetFormatError(f"CIFAR label out of range: {labels.max()}")
    return labels, records[:, 1:]


def write_cifar(labels: np.ndarray, pixels: np.ndarray) -> bytes:
    labels = np.asarray(labels, dtype=np.uint8).reshape(-1, 1)
    pixels = np.asarray(pixels, dtype=np.uint8).reshape(len(labels), 3072)
    return np.hstack([labels, pixels]).tobytes()


def _read_idx_pair(root: Path, part: str = "train") -> tuple[np.ndarray, np.ndarray, dict]:
    img_name, lbl_name = IDX_FILES[part]
    img_raw, lbl_raw = _open_bytes(root / img_name), _open_bytes(root / lbl_name)
    images = parse_idx(img_raw, IDX_IMAGE_MAGIC)
    labels = parse_idx(lbl_raw, IDX_LABEL_MAGIC)
    if len(images) != len(labels):
        raise DatasetFormatError(f"{len(images)} images but {len(labels)} labels")
    if labels.max() > 9:
        raise DatasetFormatError(f"label out of range: {labels.max()}")
    digests = {img_name: hashlib.sha256(img_raw).hexdigest(), lbl_name: hashlib.sha256(lbl_raw).hexdigest()}
    return images.reshape(len(images), -1), labels, digests


def _read_cifar(root: Path) -> tuple[np.ndarray, np.ndarray, dict]:
    if not (root / CIFAR_TRAIN_BATCHES[0]).exists() and (root / "cifar-10-batches-bin").is_dir():
        root = root / "cifar-10-batches-bin"
    pixels, labels, digests = [], [], {}
    for name in CIFAR_TRAIN_BATCHES:
        raw = _open_bytes(root / name)
        lbl, px = parse_cifar(raw)
        labels.append(lbl)
        pixels.append(px)
        digests[name] = hashlib.sha256(raw).hexdigest()
    return np.vstack(pixels), np.concatenate(labels), digests


def load_image_dataset(
    source: str,
    root_path: str | Path,
    target_class: int = 5,
    m: int = 1000,
    seed: int = 0,
    train_fraction: float = 0.8,
) -> Dataset:
    """Binarised (target class vs rest) subsample of a source training set, pixels in [0, 1]."""
    root = Path(root_path)
    if source in ("mnist", "fashion-mnist"):
        sub = root / source
        pixels, labels, digests = _read_idx_pair(sub if sub.is_dir() else root)
    elif source == "cifar10":
        sub = root / "cifar10"
        pixels, labels, digests = _read_cifar(sub if sub.is_dir() else root)
    else:
        raise KeyError(f"unknown image source {source!r}")
    if not 0 < m <= len(labels):
        raise ValueError(f"cannot draw m={m} records from {len(labels)}")
    rng = np.random.default_rng(seed)
    pick = np.sort(rng.choice(len(labels), size=m, replace=False))
    features = pixels[pick].astype(float) / 255.0
    y = np.where(labels[pick] == target_class, 1.0, -1.0)
    meta = {
        "generator": source,
        "target_class": target_class,
        "seed": seed,
        "subsample": pick.tolist(),
        "digests": digests,
    }
    return split(Dataset(features, y, meta=meta), train_fraction, seed)


# --- persistence -------------------------------------------------------------


def save_dataset(dataset: Dataset, csv_path: str | Path) -> Path:
    """Write ``x0..x{n-1},y`` CSV plus a ``.meta.json`` sidecar holding meta and split."""
    csv_path = Path(csv_path)
    with csv_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{j}" for j in range(dataset.n)] + ["y"])
        for row, label in zip(dataset.features, dataset.labels):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])
    sidecar = {
        "meta": dataset.meta,
        "train_idx": dataset.train_idx.tolist(),
        "test_idx": dataset.test_idx.tolist(),
    }
    meta_path = csv_path.with_suffix(".meta.json")
    meta_path.write_text(json.dumps(sidecar, indent=2, sort_keys=True))
    return meta_path


def load_dataset(csv_path: str | Path) -> Dataset:
    csv_path = Path(csv_path)
    with csv_path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    body = np.array(rows[1:], dtype=float)
    sidecar = json.loads(csv_path.with_suffix(".meta.json").read_text())
    return Dataset(
        body[:, :-1],
        body[:, -1],
        np.asarray(sidecar["train_idx"], dtype=int),
        np.asarray(sidecar["test_idx"], dtype=int),
        sidecar["meta"],
    )
