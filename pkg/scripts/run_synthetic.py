"""Run the synthetic benchmark matrix and render its report.

    python scripts/run_synthetic.py --out results/synthetic
    python scripts/run_synthetic.py --datasets blobs moons --L 0 --runs 3 --epochs 200 --out /tmp/quick
"""

import argparse
from pathlib import Path

from light_sgd import bench
from light_sgd.report import report


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="results/synthetic")
    parser.add_argument("--datasets", nargs="+", default=["blobs", "xor", "circles", "moons"])
    parser.add_argument("--variances", nargs="+", default=["lower", "higher"])
    parser.add_argument("--L", type=int, nargs="+", default=[0, 1])
    parser.add_argument("--runs", type=int, default=10)
    parser.add_argument("--epochs", type=int, default=1500)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--format", default="png", choices=["png", "svg", "none"])
    args = parser.parse_args()

    matrix = bench.synthetic_matrix(args.runs, args.epochs, args.seed)
    matrix["datasets"] = [d for d in matrix["datasets"]
                          if d["name"] in args.datasets and d["variance"] in args.variances]
    matrix["architectures"] = args.L
    specs = bench.expand_matrix(matrix)
    print(f"{len(specs)} cells, {args.runs} runs x {args.epochs} epochs each")
    results = bench.run_bench(specs, args.out, jobs=args.jobs)
    files = report(results, Path(args.out) / "report", fmt=args.format)
    print(f"report: {len(files)} files under {Path(args.out) / 'report'}")


if __name__ == "__main__":
    main()
