"""Command line entry point: ``light-sgd {gen-data,search,train,bench,report,fetch}``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from light_sgd import bench, data, fetch, hpo, report
from light_sgd.light import VARIANTS
from light_sgd.net import NetworkConfig


CONF_HELP = "r, E, Er or default (dashed names need the --configuration=-Er- form)"


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    return json.loads(Path(path).read_text())


def _dataset_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dataset", default="blobs", help="blobs, xor, circles, moons, mnist, fashion-mnist, cifar10")
    p.add_argument("--variance", default="lower", help="lower, higher, or a numeric std/noise")
    p.add_argument("-m", type=int, default=1000)
    p.add_argument("--data-seed", type=int, default=0)
    p.add_argument("--root", default=None, help=f"image data root (default ${bench.DATA_ROOT_ENV})")


def _dataset_spec(args) -> bench.DatasetSpec:
    variance = args.variance
    try:
        variance = float(variance)
    except ValueError:
        pass
    return bench.DatasetSpec(name=args.dataset, variance=variance, m=args.m, seed=args.data_seed, root=args.root)


def cmd_gen_data(args) -> int:
    ds = _dataset_spec(args).materialize()
    meta = data.save_dataset(ds, args.out)
    print(f"wrote {args.out} and {meta} ({ds.m} rows, {len(ds.train_idx)}/{len(ds.test_idx)} split)")
    return 0


def cmd_search(args) -> int:
    ds = _dataset_spec(args).materialize()
    space = hpo.SearchSpace(configuration=args.configuration, variant=args.variant)
    config = NetworkConfig(n_features=ds.n, L=args.L, d_hidden=args.d_hidden, reduction=args.reduction)
    result = hpo.random_search(space, ds, config, args.search_seed)
    result.save(args.out)
    if args.candidates_csv:
        result.write_candidates_csv(args.candidates_csv)
    w = result.winner
    print(f"{len(result.evaluations)} of {result.grid_size} candidates ({result.n_valid} valid); "
          f"winner draw {w.draw}: r={w.params['r']:g} E={w.params['E']:g} T={w.params['T']:g} "
          f"NT={w.params['NT']:g} acc={w.accuracy:.3f}")
    return 0


def _spec_from_args(args) -> bench.ExperimentSpec:
    record = _load_config(args.config)
    cli = {
        "L": args.L,
        "method": args.method,
        "configuration": args.configuration,
        "n_runs": args.runs,
        "n_epochs": args.epochs,
        "base_seed": args.seed,
    }
    record.update({k: v for k, v in cli.items() if v is not None})
    if "dataset" not in record:
        record["dataset"] = vars(_dataset_spec(args))
    if args.light:
        record["light_override"] = json.loads(args.light)
    return bench.ExperimentSpec.from_dict(record)


def cmd_train(args) -> int:
    spec = _spec_from_args(args)
    result = bench.run_cell(spec, jobs=args.jobs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result.save(out / f"{spec.key}.json")
    print(f"{spec.key}: max {100 * result.max_accuracy:.2f}% at epoch {result.argmax_epoch}; "
          f"thresholds {result.epochs_to_threshold}")
    if result.flagged:
        print("warning: divergent runs", [i for i, d in enumerate(result.diverged) if d], file=sys.stderr)
        return 2 if args.strict else 0
    return 0


def cmd_bench(args) -> int:
    if args.config:
        config = _load_config(args.config)
    elif args.preset == "images":
        config = bench.image_matrix(args.runs or 10, args.epochs or 1500, args.seed or 0, args.root)
    else:
        config = bench.synthetic_matrix(args.runs or 10, args.epochs or 1500, args.seed or 0)
    specs = bench.expand_matrix(config)
    results = bench.run_bench(specs, args.out, jobs=args.jobs)
    if args.report:
        report.report(results, Path(args.out) / "report", fmt=args.format)
    if any(r.flagged for r in results):
        print("warning: some cells had divergent runs", file=sys.stderr)
        return 2 if args.strict else 0
    return 0


def cmd_report(args) -> int:
    results = bench.load_results(args.results)
    files = report.report(results, args.out, fmt=args.format)
    print(f"wrote {len(files)} files to {args.out}")
    return 0


def cmd_fetch(args) -> int:
    root = args.root or os.environ.get(bench.DATA_ROOT_ENV)
    if not root:
        print(f"need --root or ${bench.DATA_ROOT_ENV}", file=sys.stderr)
        return 1
    for source in args.sources:
        print("ready:", fetch.fetch(source, root))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="light-sgd", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate and save a dataset as CSV + meta JSON")
    _dataset_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("search", help="random search over LIGHT hyperparameters")
    _dataset_args(p)
    p.add_argument("--configuration", default="Er", help=CONF_HELP)
    p.add_argument("--variant", default="light-v", choices=list(VARIANTS))
    p.add_argument("--L", type=int, default=0)
    p.add_argument("--d-hidden", type=int, default=5)
    p.add_argument("--reduction", default="mean", choices=["mean", "sum"])
    p.add_argument("--search-seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--candidates-csv")
    p.set_defaults(func=cmd_search)

    for name, func, help_ in (
        ("train", cmd_train, "run one experiment cell"),
        ("bench", cmd_bench, "run a matrix of cells"),
    ):
        p = sub.add_parser(name, help=help_)
        _dataset_args(p)
        p.add_argument("--config", help="JSON file mirroring ExperimentSpec (train) or a bench matrix (bench)")
        p.add_argument("--runs", type=int)
        p.add_argument("--epochs", type=int)
        p.add_argument("--seed", type=int, help="base seed; run i uses seed + i")
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--strict", action="store_true", help="exit 2 if any run diverged")
        p.add_argument("--out", required=True)
        p.set_defaults(func=func)
        if name == "train":
            p.add_argument("--L", type=int)
            p.add_argument("--method", choices=list(bench.METHODS))
            p.add_argument("--configuration", help=CONF_HELP)
            p.add_argument("--light", help="JSON LIGHT parameters; skips the search")
        else:
            p.add_argument("--preset", choices=["synthetic", "images"], default="synthetic")
            p.add_argument("--report", action="store_true")
            p.add_argument("--format", default="png", choices=["png", "svg", "none"])

    p = sub.add_parser("report", help="render tables, curves and plots from stored results")
    p.add_argument("--results", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", default="png", choices=["png", "svg", "none"])
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("fetch", help="download raw image datasets (verified by MD5)")
    p.add_argument("sources", nargs="+", choices=list(fetch.SOURCES))
    p.add_argument("--root")
    p.set_defaults(func=cmd_fetch)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
