"""Command-line entry point: run one experiment, write its artifact bundle.

Usage::

    tilab <experiment-id> --config FILE [--seed N] [--out DIR]
          [--units nats|logd] [--max-mem BYTES]

Exit codes: 0 on success, 2 when some points were skipped by the memory cap
(partial results, gaps recorded in gaps.csv), 1 on any error including bad
arguments.  The config file is optional; every experiment has runnable
defaults, and the flags override both the defaults and the file.
"""

from __future__ import annotations

import argparse
import sys

from .experiments import EXPERIMENT_IDS, load_config, resolve_config, run


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors, which this tool reserves
    # for partial (capped) runs; route usage problems through exit code 1
    def error(self, message):
        raise _UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="tilab",
        description="Influence-matrix experiments on brickwork circuits, emitted as CSV bundles.",
    )
    parser.add_argument(
        "experiment",
        metavar="experiment-id",
        choices=EXPERIMENT_IDS,
        help="one of: " + ", ".join(EXPERIMENT_IDS),
    )
    parser.add_argument("--config", metavar="FILE", help="TOML config file")
    parser.add_argument("--seed", metavar="N", type=int, help="master seed (overrides config)")
    parser.add_argument("--out", metavar="DIR", help="output directory (overrides config)")
    parser.add_argument("--units", choices=["nats", "logd"], help="entropy units (overrides config)")
    parser.add_argument("--max-mem", metavar="BYTES", type=int, help="memory cap per contraction")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(parser.format_usage().rstrip(), file=sys.stderr)
        print(f"tilab: error: {exc}", file=sys.stderr)
        return 1
    try:
        raw = load_config(args.config) if args.config else {}
        cfg = resolve_config(
            args.experiment,
            raw,
            seed=args.seed,
            out=args.out,
            units=args.units,
            max_mem=args.max_mem,
        )
        bundle = run(cfg)
    except Exception as exc:  # CLI boundary: report, do not traceback
        print(f"tilab: error: {exc}", file=sys.stderr)
        return 1
    for name in sorted(bundle.files):
        print(f"wrote {bundle.files[name]}")
    if bundle.gaps:
        print(
            f"tilab: {len(bundle.gaps)} point(s) exceeded the memory cap; "
            "partial results written, see gaps.csv",
            file=sys.stderr,
        )
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
