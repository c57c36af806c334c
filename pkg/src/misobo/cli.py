"""Command-line interface: run, summarize, validate, bench.

Exit codes: 0 success, 2 config validation failure, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import sys

from .errors import ConfigValidationError, MisoboError
from .harness import load_config, run_experiment, summarize
from .sources import benchmark_names

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3


def build_parser():
    parser = argparse.ArgumentParser(
        prog="misobo",
        description="Cost-aware Bayesian optimization over multiple information sources",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute the experiment described by a config file")
    p_run.add_argument("config")
    p_run.add_argument("--out", help="output directory (overrides the config)")
    p_run.add_argument("--seed", type=int, help="base seed (overrides the config)")

    p_sum = sub.add_parser("summarize", help="aggregate trace files in a directory")
    p_sum.add_argument("directory")

    p_val = sub.add_parser("validate", help="check a config file and report every problem")
    p_val.add_argument("config")

    p_bench = sub.add_parser("bench", help="built-in benchmark problems")
    p_bench.add_argument("action", choices=["list"])
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            load_config(args.config)
            print(f"{args.config}: ok")
            return EXIT_OK
        if args.command == "bench":
            for name in benchmark_names():
                print(name)
            return EXIT_OK
        if args.command == "summarize":
            summary = summarize(args.directory)
            for method, stats in summary["methods"].items():
                print(f"{method}: median final best {stats['median_final_best_seen']:.6g}, "
                      f"cheap-source share {stats['cheap_source_query_share']:.2%}")
            print(f"wrote {args.directory}/summary.json and plotdata.csv")
            return EXIT_OK
        out = run_experiment(args.config, out_dir=args.out, seed=args.seed)
        print(f"experiment complete; artifacts in {out}")
        return EXIT_OK
    except ConfigValidationError as exc:
        for violation in exc.violations:
            print(f"config error: {violation}", file=sys.stderr)
        return EXIT_VALIDATION
    except MisoboError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
