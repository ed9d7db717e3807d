"""Optional download of the raw image datasets, verified against published MD5 digests.

Nothing in the test suite or the benchmark downloads implicitly; ``light-sgd fetch``
is the only caller.
"""

from __future__ import annotations

import hashlib
import tarfile
import urllib.request
from pathlib import Path

SOURCES = {
    "mnist": {
        "base": "https://ossci-datasets.s3.amazonaws.com/mnist/",
        "files": {
            "train-images-idx3-ubyte.gz": "f68b3c2dcbeaaa9fbdd348bbdeb94873",
            "train-labels-idx1-ubyte.gz": "d53e105ee54ea40749a09fcbcd1e9432",
        },
    },
    "fashion-mnist": {
        "base": "http://fashion-mnist.s3-website.eu-central-1.amazonaws.com/",
        "files": {
            "train-images-idx3-ubyte.gz": "8d4fb7e6c68d591d4c3dfef9ec88bf0d",
            "train-labels-idx1-ubyte.gz": "25c81989df183df01b3e8a0aad5dffbe",
        },
    },
    "cifar10": {
        "base": "https://www.cs.toronto.edu/~kriz/",
        "files": {"cifar-10-binary.tar.gz": "c32a1d4ab5d03f1284b67883e8d87530"},
    },
}


class DigestMismatch(IOError):
    pass


def md5_of(path: Path) -> str:
    digest = hashlib.md5()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def verify(path: Path, expected_md5: str) -> None:
    actual = md5_of(path)
    if actual != expected_md5:
        raise DigestMismatch(f"{path.name}: md5 {actual} != expected {expected_md5}")


def fetch(source: str, root: str | Path, log=print) -> Path:
    """Download ``source`` into ``root/source`` (skipping verified files) and return that directory."""
    if source not in SOURCES:
        raise KeyError(f"unknown source {source!r}")
    target = Path(root) / source
    target.mkdir(parents=True, exist_ok=True)
    entry = SOURCES[source]
    for name, md5 in entry["files"].items():
        path = target / name
        if path.exists() and md5_of(path) == md5:
            continue
        log(f"downloading {entry['base'] + name}")
        urllib.request.urlretrieve(entry["base"] + name, path)
        verify(path, md5)
        if name.endswith(".tar.gz"):
            with tarfile.open(path) as tar:
                tar.extractall(target)
    return target
