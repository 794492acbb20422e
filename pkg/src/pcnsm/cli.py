"""Command-line interface.

Subcommands::

    pcnsm run --config FILE [--seed N] [--out DIR]
    pcnsm eval --config FILE --history FILE [--seed N] [--out DIR]
    pcnsm validate --config FILE

Exit codes: 0 success, 1 config error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .harness import ConfigError, eval_run, load_run_config, run


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="pcnsm",
        description="Instance-based reinforcement learning over observation "
                    "histories: experiment runner.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a training run")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--out", default="out")

    p_eval = sub.add_parser("eval", help="evaluate a frozen policy from a "
                                         "persisted history")
    p_eval.add_argument("--config", required=True)
    p_eval.add_argument("--history", required=True)
    p_eval.add_argument("--seed", type=int, default=None)
    p_eval.add_argument("--out", default="out")

    p_val = sub.add_parser("validate", help="parse and range-check a config")
    p_val.add_argument("--config", required=True)
    return parser


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        config = load_run_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    if args.command == "validate":
        print(f"config ok: {args.config}")
        return 0
    try:
        if args.command == "run":
            if args.seed is not None:
                config = replace(config, seed=args.seed)
            metrics = run(config, args.out)
            print(f"run complete: {len(metrics.steps)} actions, "
                  f"{len(metrics.trials)} trials -> {args.out}")
        else:
            config = replace(config, eval_mode=True)
            if args.seed is not None:
                config = replace(config, seed=args.seed)
            metrics = eval_run(config, args.history, args.out)
            reached = sum(1 for row in metrics.trials if not row.timed_out)
            print(f"eval complete: {reached}/{len(metrics.trials)} episodes "
                  f"reached the target -> {args.out}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
