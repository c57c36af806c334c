"""Serve the two C-SVC sources over the JSON-lines stdin/stdout protocol.

Requests:  {"op": "hello"}
           {"op": "eval", "x": [C, gamma], "source": 1 or 2}
Replies:   {"name": ..., "sources": [...], "dims": 2}
           {"y": <error rate>, "cost_seconds": <wall time>}
           {"error": "<message>"}
"""

from __future__ import annotations

import argparse
import json
import sys

from .adapter import AdapterConfig, EvaluationError, SvmSourceEvaluator


def build_parser():
    parser = argparse.ArgumentParser(prog="svm-source-adapter")
    parser.add_argument("--dataset", required=True,
                        help="CSV with numeric features and the class label last")
    parser.add_argument("--subsample", type=float, default=0.05,
                        help="stratified fraction served as the cheap source")
    parser.add_argument("--folds", type=int, default=10)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--costs", default="320,1",
                        help="nominal costs advertised in the handshake, expensive first")
    parser.add_argument("--fold-timeout", type=float, default=300.0,
                        help="wall-clock limit per CV fold, seconds")
    return parser


def serve(evaluator, stdin=None, stdout=None):
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout

    def reply(payload):
        stdout.write(json.dumps(payload) + "\n")
        stdout.flush()

    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            request = json.loads(line)
            op = request["op"]
        except (json.JSONDecodeError, KeyError, TypeError):
            reply({"error": f"bad request: {line[:200]}"})
            continue
        if op == "hello":
            reply(evaluator.handshake())
        elif op == "eval":
            try:
                y, seconds = evaluator.evaluate(int(request["source"]),
                                                list(request["x"]))
                reply({"y": y, "cost_seconds": seconds})
            except (EvaluationError, KeyError, TypeError, ValueError) as exc:
                reply({"error": str(exc)})
        else:
            reply({"error": f"unknown op {op!r}"})


def main(argv=None):
    args = build_parser().parse_args(argv)
    costs = tuple(float(c) for c in args.costs.split(","))
    config = AdapterConfig(
        dataset_path=args.dataset,
        subsample_fraction=args.subsample,
        folds=args.folds,
        seed=args.seed,
        costs=costs,
        fold_timeout=args.fold_timeout,
    )
    serve(SvmSourceEvaluator(config))
    return 0


if __name__ == "__main__":
    sys.exit(main())
