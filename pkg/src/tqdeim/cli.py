"""Command-line interface: gen, train, infer, evaluate, sweep.

stdout carries one JSON line per command; diagnostics go to stderr.
Exit codes: 0 success, 2 usage, 3 I/O or file format, 4 numerical.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import datagen, interp
from .errors import DimensionError, FormatError
from .io import load_model, read_t3b, save_model, write_report, write_t3b
from .tensor_core import sample_rows, set_num_threads

log = logging.getLogger("tqdeim")

EXIT_USAGE = 2
EXIT_IO = 3
EXIT_NUMERICAL = 4


class UsageError(Exception):
    pass


def parse_ranks(text):
    """'2-9', '3,8,10' or a mix like '2-4,8' -> sorted unique list."""
    ranks = set()
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        try:
            if "-" in part:
                lo, hi = (int(v) for v in part.split("-", 1))
                ranks.update(range(lo, hi + 1))
            else:
                ranks.add(int(part))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad rank entry {part!r}") from None
    if not ranks:
        raise argparse.ArgumentTypeError("rank list is empty")
    return sorted(ranks)


def _emit(obj):
    print(json.dumps(obj, sort_keys=True))


def _load_config(path):
    if path is None:
        return {}
    with open(path) as fh:
        try:
            cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise FormatError(f"{path}: config must be a JSON object")
    return cfg


def cmd_gen(args):
    cfg = _load_config(args.config)
    overrides = {
        "nx": args.nx,
        "nt": args.nt,
        "t_final": args.t_final,
    }
    if args.model == "burgers":
        overrides["n_params"] = args.n_params
        if args.mu_range:
            overrides["mu_range"] = tuple(args.mu_range)
        cls, gen = datagen.BurgersConfig, datagen.gen_burgers
    else:
        overrides["grid"] = args.grid
        cls, gen = datagen.FhnConfig, datagen.gen_fhn
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    cfg["seed"] = args.seed
    try:
        config = cls(**cfg)
    except TypeError as exc:
        raise UsageError(f"bad config: {exc}") from None
    log.info("generating %s data: %s", args.model, config)
    ds = gen(config)
    if args.train_count is not None:
        train, test = datagen.split_dataset(
            ds, seed=args.seed, train_count=args.train_count, test_count=args.test_count
        )
    else:
        train, test = datagen.split_dataset(ds, args.split, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_t3b(out / "train.t3b", train.tensor)
    write_t3b(out / "test.t3b", test.tensor)
    with open(out / "params.json", "w") as fh:
        json.dump({"train": train.describe(), "test": test.describe()}, fh, indent=2)
        fh.write("\n")
    _emit({
        "command": "gen",
        "model": args.model,
        "train_shape": list(train.tensor.shape),
        "test_shape": list(test.tensor.shape),
        "out": str(out),
    })


def cmd_train(args):
    train = read_t3b(args.data, expect="real")
    if args.method == "tqdeim":
        model = interp.fit_tqdeim(train, args.rank, fourier_slice=args.fourier_slice, seed=args.seed)
        N, M = model.shape
    else:
        model = interp.fit_qdeim(train, args.rank, seed=args.seed)
        N, M = model.U.shape[0], 1
    save_model(args.out, model)
    _emit({
        "command": "train",
        "method": model.method,
        "rank": model.rank,
        "pivots": [int(p) + 1 for p in model.pivots],
        "amplification": model.amplification,
        "apriori_estimate": interp.apriori_estimate(N, model.rank, M),
        "out": str(args.out),
    })


def _reconstruct(model, samples):
    if isinstance(model, interp.TQDeimModel):
        return interp.reconstruct_tqdeim(model, samples)
    n, l, M = samples.shape
    out = interp.reconstruct_qdeim(model, samples.reshape(n, l * M))
    return out.reshape(model.U.shape[0], l, M)


def cmd_infer(args):
    model = load_model(args.model)
    if args.full:
        samples = sample_rows(read_t3b(args.full, expect="real"), model.pivots)
    else:
        samples = read_t3b(args.samples, expect="real")
    if samples.shape[0] != model.rank:
        raise DimensionError(
            f"model has {model.rank} pivots but {samples.shape[0]} rows were given"
        )
    approx = _reconstruct(model, samples)
    write_t3b(args.out, approx)
    _emit({"command": "infer", "shape": list(approx.shape), "out": str(args.out)})


def cmd_sample(args):
    model = load_model(args.model)
    full = read_t3b(args.data, expect="real")
    rows = sample_rows(full, model.pivots)
    write_t3b(args.out, rows)
    _emit({"command": "sample", "shape": list(rows.shape), "out": str(args.out)})


def cmd_evaluate(args):
    model = load_model(args.model)
    data = read_t3b(args.data, expect="real")
    report = interp.evaluate(model, data)
    bad = report.bound_violations(rtol=args.bound_rtol)
    if bad.size:
        raise ArithmeticError(f"error bound violated for samples {bad.tolist()}")
    for note in report.warnings:
        log.warning("%s", note)
    write_report(args.out, report, args.format)
    _emit({
        "command": "evaluate",
        "method": report.method,
        "rank": report.rank,
        "n_samples": len(report),
        "eps_abs": report.eps_abs,
        "eps_rel": report.eps_rel,
        "amplification": report.amplification,
        "out": str(args.out),
    })


SWEEP_COLUMNS = [
    "method", "n", "eps_abs_train", "eps_abs_test", "eps_rel_train",
    "eps_rel_test", "proj_train", "proj_test", "amplification",
]


def cmd_sweep(args):
    train = read_t3b(args.train, expect="real")
    test = read_t3b(args.test, expect="real")
    methods = ("tqdeim", "qdeim") if args.method == "both" else (args.method,)
    rows = interp.sensitivity_sweep(
        train, test, args.ranks, methods=methods, fourier_slice=args.fourier_slice
    )
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for row in rows:
            w.writerow([
                row[c] if c in ("method", "n") else format(row[c], ".17g")
                for c in SWEEP_COLUMNS
            ])
    _emit({"command": "sweep", "rows": len(rows), "out": str(args.out)})


def build_parser():
    p = argparse.ArgumentParser(prog="tqdeim", description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--quiet", action="store_true", help="suppress diagnostics")
    p.add_argument("--threads", type=int, default=1,
                   help="workers for per-Fourier-slice factorizations")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a train/test snapshot dataset")
    g.add_argument("model", choices=["burgers", "fhn"])
    g.add_argument("--out", required=True)
    g.add_argument("--config", help="JSON file with generator settings")
    g.add_argument("--nx", type=int)
    g.add_argument("--nt", type=int)
    g.add_argument("--t-final", type=float)
    g.add_argument("--n-params", type=int, help="Burgers' viscosity samples")
    g.add_argument("--mu-range", type=float, nargs=2, metavar=("LO", "HI"))
    g.add_argument("--grid", type=int, help="FHN samples per parameter axis")
    g.add_argument("--split", type=float, default=0.5, help="training fraction")
    g.add_argument("--train-count", type=int)
    g.add_argument("--test-count", type=int)
    g.set_defaults(func=cmd_gen)

    t = sub.add_parser("train", help="fit a model and save a bundle")
    t.add_argument("--data", required=True, help="training tensor (.t3b)")
    t.add_argument("--rank", type=int, required=True)
    t.add_argument("--method", choices=["tqdeim", "qdeim"], default="tqdeim")
    t.add_argument("--out", required=True, help="bundle directory")
    t.add_argument("--fourier-slice", type=int, default=1,
                   help="1-based Fourier slice used for pivoting (expert)")
    t.set_defaults(func=cmd_train)

    s = sub.add_parser("sample", help="extract pivot rows from a full tensor")
    s.add_argument("--model", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sample)

    i = sub.add_parser("infer", help="reconstruct full tensors from sampled rows")
    i.add_argument("--model", required=True)
    src = i.add_mutually_exclusive_group(required=True)
    src.add_argument("--samples", help="(n, l, q) tensor of rows at the pivots")
    src.add_argument("--full", help="full tensor; rows at the pivots are read from it")
    i.add_argument("--out", required=True)
    i.set_defaults(func=cmd_infer)

    e = sub.add_parser("evaluate", help="error report against full data")
    e.add_argument("--model", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--format", choices=["csv", "json"])
    e.add_argument("--bound-rtol", type=float, default=1e-9)
    e.set_defaults(func=cmd_evaluate)

    w = sub.add_parser("sweep", help="errors versus rank")
    w.add_argument("--train", required=True)
    w.add_argument("--test", required=True)
    w.add_argument("--ranks", type=parse_ranks, required=True, help="e.g. 2-9 or 3,8,10")
    w.add_argument("--method", choices=["tqdeim", "qdeim", "both"], default="both")
    w.add_argument("--fourier-slice", type=int, default=1)
    w.add_argument("--out", required=True)
    w.set_defaults(func=cmd_sweep)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 after --help
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s: %(message)s"))
    log.handlers = [handler]
    log.propagate = False
    log.setLevel(logging.ERROR if args.quiet else logging.INFO)
    try:
        set_num_threads(args.threads)
        args.func(args)
    except UsageError as exc:
        print(f"tqdeim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, FormatError) as exc:
        print(f"tqdeim: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, ArithmeticError, np.linalg.LinAlgError, RuntimeError) as exc:
        print(f"tqdeim: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return 0


if __name__ == "__main__":
    sys.exit(main())
