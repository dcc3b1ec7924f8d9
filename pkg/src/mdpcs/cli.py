"""Command-line entry points.

    mdpcs run CONFIG [--out DIR] [--tol X] [--horizon N] [--jobs N]
    mdpcs generate FAMILY COUNT [--seed N] [--out DIR]

`run` exits 0 when every requested comparison check's conclusion holds,
1 when some conclusion fails, and 2 on config errors (with a message
naming the offending field).  `generate` writes reproducible experiment
configs for the named instance family.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .experiment import ConfigError, write_run
from .generate import FAMILIES, generate_config


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mdpcs",
        description=("Solve grid decision problems and machine-check "
                     "monotone comparative statics on them."),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the checks described by a config file")
    run.add_argument("config", type=Path, help="path to a JSON experiment config")
    run.add_argument("--out", type=Path, default=Path("."),
                     help="directory for the report and trajectory files")
    run.add_argument("--tol", type=float, default=None,
                     help="override the config's comparison tolerance")
    run.add_argument("--horizon", type=int, default=None,
                     help="override the config's comparison horizon")
    run.add_argument("--jobs", type=int, default=1,
                     help="parallel workers for independent parameter points")

    gen = sub.add_parser("generate", help="write random instance configs")
    gen.add_argument("family", choices=sorted(FAMILIES))
    gen.add_argument("count", type=int)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", type=Path, default=Path("."))
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        try:
            cfg = json.loads(args.config.read_text(encoding="utf-8"))
        except OSError as e:
            print(f"config error at <file>: {e}", file=sys.stderr)
            return 2
        except json.JSONDecodeError as e:
            print(f"config error at <file>: line {e.lineno}, column {e.colno}: {e.msg}",
                  file=sys.stderr)
            return 2
        try:
            return write_run(cfg, args.out, jobs=args.jobs,
                             tol=args.tol, horizon=args.horizon)
        except ConfigError as e:
            print(str(e), file=sys.stderr)
            return 2
    if args.command == "generate":
        if args.count < 1:
            print("config error at count: expected a positive integer", file=sys.stderr)
            return 2
        args.out.mkdir(parents=True, exist_ok=True)
        for k in range(args.count):
            seed = args.seed + k
            cfg = generate_config(args.family, seed)
            path = args.out / f"{args.family}-{seed:04d}.json"
            path.write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n",
                            encoding="utf-8")
            print(path)
        return 0
    return 2


if __name__ == "__main__":
    raise SystemExit(main())
