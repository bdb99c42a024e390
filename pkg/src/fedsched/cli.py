"""Command line entry point: ``run`` and ``sweep``."""
from __future__ import annotations

import argparse
import logging
import sys

from . import harness


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fedsched",
                                     description="Latency-aware federated learning simulator")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run all trials of one config")
    run.add_argument("--config", required=True)
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--seed", type=int, help="override master_seed")
    run.add_argument("--policy", help="override policy, e.g. FC, FixedN:5, CS-l")
    run.add_argument("--trials", type=int, help="override trials")

    sweep = sub.add_parser("sweep", help="run one config per value of a key")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--key", required=True, choices=harness.SWEEP_KEYS)
    sweep.add_argument("--values", required=True, help="comma separated values")
    sweep.add_argument("--out", required=True, help="output directory")
    sweep.add_argument("--trials", type=int, help="override trials")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            harness.run(args.config, args.out, seed=args.seed, policy=args.policy,
                        trials=args.trials)
        else:
            harness.sweep(args.config, args.key, args.values.split(","), args.out,
                          trials=args.trials)
    except (OSError, ValueError, ArithmeticError) as exc:
        print(f"fedsched: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
