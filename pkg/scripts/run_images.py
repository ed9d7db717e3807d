"""Run the image application (MNIST, Fashion-MNIST, CIFAR-10) on user-supplied raw files.

    LIGHT_DATA_ROOT=~/data python scripts/run_images.py --sources mnist --out results/images

Expects ``<root>/<source>/`` (or ``<root>/``) to hold the IDX training files or the
CIFAR-10 binary batches; ``light-sgd fetch mnist --root ~/data`` downloads them.
"""

import argparse
import os
from pathlib import Path

from light_sgd import bench
from light_sgd.report import report


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--root", default=os.environ.get(bench.DATA_ROOT_ENV))
    parser.add_argument("--sources", nargs="+", default=list(bench.IMAGE_SOURCES), choices=bench.IMAGE_SOURCES)
    parser.add_argument("--out", default="results/images")
    parser.add_argument("--runs", type=int, default=10)
    parser.add_argument("--epochs", type=int, default=1500)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--format", default="png", choices=["png", "svg", "none"])
    args = parser.parse_args()
    if not args.root:
        parser.error(f"pass --root or set ${bench.DATA_ROOT_ENV}")

    matrix = bench.image_matrix(args.runs, args.epochs, args.seed, args.root)
    matrix["datasets"] = [d for d in matrix["datasets"] if d["name"] in args.sources]
    results = bench.run_bench(bench.expand_matrix(matrix), args.out, jobs=args.jobs)
    report(results, Path(args.out) / "report", fmt=args.format)


if __name__ == "__main__":
    main()
