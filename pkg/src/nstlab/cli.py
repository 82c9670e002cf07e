"""Command-line front end.

One binary with a subcommand per experiment kind:

    nstlab greens-verify   --config cfg.ini --out DIR --threads N --seed U64
    nstlab decay-linear    ...
    nstlab decay-nonlinear ...
    nstlab mach-sweep      ...
    nstlab energy-check    ...
    nstlab lp-selftest     ...

Without --config the documented default configuration for that kind is
used.  --seed and --threads override the config.  NST_LAB_THREADS is the
environment fallback for --threads.  Exit code 0 iff every check passed.
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import EXPERIMENT_KINDS, default_config, load_config
from .errors import NstLabError
from .experiments import run_experiment


def _resolve_threads(cli_value, config):
    if cli_value is not None:
        return max(1, cli_value)
    cfg_threads = config.get("experiment", "threads")
    if cfg_threads:
        return max(1, cfg_threads)
    env = os.environ.get("NST_LAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise NstLabError(f"NST_LAB_THREADS is not an integer: {env!r}")
    return 1


def build_parser():
    parser = argparse.ArgumentParser(
        prog="nstlab",
        description="Spectral laboratory for a compressible Navier-Stokes-transport system.",
    )
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in EXPERIMENT_KINDS:
        p = sub.add_parser(kind, help=f"run the {kind} experiment")
        p.add_argument("--config", metavar="PATH", help="experiment config file (ini format)")
        p.add_argument("--out", metavar="DIR", default=None, help="output directory")
        p.add_argument("--threads", metavar="N", type=int, default=None)
        p.add_argument("--seed", metavar="U64", type=int, default=None)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.config:
            config = load_config(args.config, kind=args.kind)
        else:
            config = default_config(args.kind)
        if args.seed is not None:
            table = config.table
            table["experiment"]["seed"] = args.seed
            from .config import _finalize

            config = _finalize(table)
        outdir = args.out or config.get("output", "dir")
        threads = _resolve_threads(args.threads, config)
        rec = run_experiment(config, outdir, threads=threads)
        ok = rec.finish()
        for c in rec.checks:
            status = "PASS" if c.passed else "FAIL"
            extra = ""
            if c.value is not None:
                extra = f"  value={c.value!r}"
            if c.tolerance is not None:
                extra += f"  tol={c.tolerance!r}"
            print(f"[{status}] {config.kind}: {c.name}{extra}")
        for w in rec.warnings:
            print(f"[warn] {w}")
        print(f"results in {rec.outdir} (manifest {rec.manifest_hash[:12]})")
        return 0 if ok else 1
    except NstLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
