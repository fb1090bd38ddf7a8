"""Command-line entry point: ``expfln run|sweep|counts|time``."""

from __future__ import annotations

import argparse
import csv
import sys

import numpy as np

from . import analysis, bench
from .adaptive_td import ConfigurationError, DivergenceError

EXIT_OK, EXIT_DIVERGED, EXIT_USAGE = 0, 1, 2

DEFAULT_MU_GRID = tuple(np.round(np.linspace(1e-4, 2e-3, 20), 10))


def _config_from(args) -> bench.RunConfig:
    cfg = bench.load_config(args.config) if args.config else bench.RunConfig()
    for item in args.set or ():
        if "=" not in item:
            raise bench.UsageError(f"--set expects key=value, got {item!r}")
        bench.apply_setting(cfg, *item.split("=", 1))
    if args.seed is not None:
        cfg.seed = args.seed
    if getattr(args, "trials", None) is not None:
        cfg.trials = args.trials
    if getattr(args, "algo", None):
        cfg.algos = tuple(a for spec in args.algo for a in spec.split(",") if a)
    if getattr(args, "input_csv", None):
        cfg.input_csv = args.input_csv
    if getattr(args, "out", None):
        cfg.out = args.out
    return cfg


def _open_out(path):
    return open(path, "w", newline="") if path and path != "-" else None


def cmd_run(args) -> int:
    cfg = _config_from(args).validate()
    fh = _open_out(cfg.out)
    try:
        _, diverged = bench.run_experiment(cfg, fh if fh else sys.stdout)
    finally:
        if fh:
            fh.close()
    for algo, trial, block in diverged:
        print(f"diverged: {algo} trial {trial} at block {block}", file=sys.stderr)
    return EXIT_DIVERGED if diverged else EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _config_from(args)
    mus = [float(m) for m in args.mu.split(",")] if args.mu else list(DEFAULT_MU_GRID)
    rows = bench.emse_sweep(cfg, mus)
    fh = _open_out(cfg.out)
    try:
        bench.write_sweep(rows, fh if fh else sys.stdout)
    finally:
        if fh:
            fh.close()
    return EXIT_OK


def cmd_counts(args) -> int:
    algos = args.algo or list(analysis.ALGORITHMS)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(("algo", "M", "P", "N", "phase", "mults", "adds"))
    for spec in algos:
        for algo in spec.split(","):
            c = analysis.op_counts(algo, args.M, args.P, args.N)
            for ph in analysis.PHASES:
                w.writerow((algo, args.M, args.P, args.N or args.M, ph, c.mults[ph], c.adds[ph]))
            w.writerow((algo, args.M, args.P, args.N or args.M, "total",
                        c.total_mults, c.total_adds))
    return EXIT_OK


def cmd_time(args) -> int:
    cfg = _config_from(args)
    algos = cfg.algos if args.algo else ("EFLN", "FDEFLN")
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(("algo", "M", "P", "median_us", "iqr_us", "blocks"))
    for algo in algos:
        t = bench.time_per_block(algo, cfg, blocks=args.blocks)
        w.writerow((algo, cfg.M, cfg.order(algo), f"{t.median_us:.2f}", f"{t.iqr_us:.2f}",
                    t.blocks))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="expfln", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, trials=True):
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override one config key (repeatable)")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output CSV path (default stdout)")
        p.add_argument("--algo", action="append", help="algorithm name(s), comma separated")
        if trials:
            p.add_argument("--trials", type=int)
        p.add_argument("--input-csv", dest="input_csv", help="input signal, one value per line")

    p = sub.add_parser("run", help="run an experiment and write per-block metrics")
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="simulated vs theoretical EMSE over a step-size grid")
    common(p)
    p.add_argument("--mu", help="comma-separated step sizes (default 1e-4..2e-3, 20 points)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("counts", help="per-block operation counts")
    p.add_argument("--algo", action="append")
    p.add_argument("-M", "--M", type=int, default=64)
    p.add_argument("-P", "--P", type=int, default=2)
    p.add_argument("-N", "--N", type=int, default=None)
    p.set_defaults(func=cmd_counts)

    p = sub.add_parser("time", help="median wall-clock cost per block")
    common(p, trials=False)
    p.add_argument("--blocks", type=int, default=200)
    p.set_defaults(func=cmd_time)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except DivergenceError as exc:
        print(f"expfln: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (bench.UsageError, ConfigurationError, ValueError, OSError) as exc:
        print(f"expfln: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
