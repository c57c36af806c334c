"""Trivial external evaluator for protocol testing: y is the coordinate sum.

Run with ``python -m misobo.echo_evaluator``. Flags exist only to let the
test suite exercise failure paths (crashes, malformed replies, slow replies).
"""

from __future__ import annotations

import argparse
import json
import sys
import time


def serve(argv=None):
    parser = argparse.ArgumentParser(prog="echo-evaluator")
    parser.add_argument("--dims", type=int, default=2)
    parser.add_argument("--costs", default="2.0,1.0", help="comma-separated nominal costs")
    parser.add_argument("--fail-after", type=int, default=-1,
                        help="exit abruptly after this many eval replies")
    parser.add_argument("--malformed", action="store_true",
                        help="reply with a non-JSON line to every eval")
    parser.add_argument("--sleep", type=float, default=0.0,
                        help="delay before each eval reply, seconds")
    args = parser.parse_args(argv)
    costs = [float(c) for c in args.costs.split(",")]

    served = 0
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            request = json.loads(line)
            op = request["op"]
        except (json.JSONDecodeError, KeyError, TypeError):
            _reply({"error": f"bad request: {line!r}"})
            continue
        if op == "hello":
            _reply({
                "name": "echo",
                "sources": [{"id": i + 1, "cost": c} for i, c in enumerate(costs)],
                "dims": args.dims,
            })
        elif op == "eval":
            if args.sleep:
                time.sleep(args.sleep)
            if args.malformed:
                sys.stdout.write("this is not json\n")
                sys.stdout.flush()
                continue
            start = time.perf_counter()
            try:
                x = [float(v) for v in request["x"]]
                source = int(request["source"])
                if source < 1 or source > len(costs):
                    raise ValueError(f"unknown source {source}")
                y = sum(x)
            except (KeyError, TypeError, ValueError) as exc:
                _reply({"error": str(exc)})
                continue
            _reply({"y": y, "cost_seconds": time.perf_counter() - start})
            served += 1
            if args.fail_after >= 0 and served >= args.fail_after:
                sys.exit(17)
        else:
            _reply({"error": f"unknown op {op!r}"})


def _reply(payload):
    sys.stdout.write(json.dumps(payload) + "\n")
    sys.stdout.flush()


if __name__ == "__main__":
    serve()
