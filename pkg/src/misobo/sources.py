"""Information sources: analytic benchmarks and external-process evaluators.

External evaluators are child processes speaking a line-delimited JSON
protocol on stdin/stdout. One process serves every source of a run; the
source id travels in each request.

Handshake:  {"op": "hello"}
        ->  {"name": ..., "sources": [{"id": 1, "cost": ...}, ...], "dims": d}
Evaluate:   {"op": "eval", "x": [raw coords...], "source": s}
        ->  {"y": <float>, "cost_seconds": <float>}   or   {"error": "<msg>"}
"""

from __future__ import annotations

import json
import queue
import subprocess
import threading
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import SourceEvaluationError
from .spaces import Dimension, SearchSpace


@dataclass
class AnalyticSource:
    """Closed-form source, optionally with seeded Gaussian observation noise."""

    source_id: int
    cost: float
    fn: callable
    noise_std: float = 0.0
    noise_seed: object = None
    kind: str = field(default="analytic", init=False)

    def __post_init__(self):
        if self.cost <= 0:
            raise ValueError("source cost must be positive")
        self._rng = np.random.default_rng(self.noise_seed) if self.noise_std > 0 else None

    def evaluate(self, x_raw):
        """Query the source; returns (y, measured_cost). Measured cost is zero
        for analytic sources (the nominal cost stands in for it downstream)."""
        y = float(self.fn(np.asarray(x_raw, dtype=float)))
        if self._rng is not None:
            y += self.noise_std * self._rng.standard_normal()
        if not np.isfinite(y):
            raise SourceEvaluationError(f"source {self.source_id} returned {y!r} at {x_raw!r}")
        return y, 0.0


class ExternalConnection:
    """Owns one evaluator child process and serializes requests to it.

    ``timeout`` bounds each evaluation reply; the handshake gets its own,
    never-shorter bound (``hello_timeout``) because process startup may
    include loading datasets.
    """

    def __init__(self, command, timeout=3600.0, hello_timeout=None):
        self.command = list(command)
        self.timeout = timeout
        self._proc = subprocess.Popen(
            self.command, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
            stderr=subprocess.PIPE, text=True, bufsize=1,
        )
        self._lines = queue.Queue()
        self._stderr = deque(maxlen=50)
        threading.Thread(target=self._pump, args=(self._proc.stdout, self._lines.put, True),
                         daemon=True).start()
        threading.Thread(target=self._pump, args=(self._proc.stderr, self._stderr.append),
                         daemon=True).start()
        self.info = self._request(
            {"op": "hello"},
            timeout=hello_timeout if hello_timeout is not None else max(timeout, 60.0),
        )
        for key in ("name", "sources", "dims"):
            if key not in self.info:
                raise SourceEvaluationError(
                    f"handshake reply missing {key!r}: {self.info!r}" + self._context())

    @staticmethod
    def _pump(stream, sink, sentinel=False):
        for line in stream:
            sink(line)
        if sentinel:
            sink(None)  # EOF marker so waiters notice a dead process

    def _context(self):
        tail = "".join(self._stderr).strip()
        return f" [stderr: {tail}]" if tail else ""

    def _request(self, payload, timeout=None):
        timeout = self.timeout if timeout is None else timeout
        if self._proc.poll() is not None:
            raise SourceEvaluationError(
                f"evaluator process exited with code {self._proc.returncode}" + self._context())
        try:
            self._proc.stdin.write(json.dumps(payload) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise SourceEvaluationError(f"evaluator pipe closed: {exc}" + self._context())
        try:
            line = self._lines.get(timeout=timeout)
        except queue.Empty:
            self.close()
            raise SourceEvaluationError(
                f"evaluator reply timed out after {timeout}s" + self._context())
        if line is None:
            code = self._proc.poll()
            raise SourceEvaluationError(
                f"evaluator process exited with code {code}" + self._context())
        try:
            reply = json.loads(line)
        except json.JSONDecodeError:
            raise SourceEvaluationError(f"malformed evaluator reply: {line!r}" + self._context())
        if not isinstance(reply, dict):
            raise SourceEvaluationError(f"malformed evaluator reply: {line!r}" + self._context())
        if "error" in reply:
            raise SourceEvaluationError(f"evaluator error: {reply['error']}")
        return reply

    def evaluate(self, source_id, x_raw):
        reply = self._request({"op": "eval", "x": [float(v) for v in x_raw],
                               "source": int(source_id)})
        if "y" not in reply or "cost_seconds" not in reply:
            raise SourceEvaluationError(f"eval reply missing fields: {reply!r}")
        y, cost = float(reply["y"]), float(reply["cost_seconds"])
        if not np.isfinite(y):
            raise SourceEvaluationError(f"evaluator returned non-finite y: {reply!r}")
        return y, cost

    def close(self):
        if self._proc.poll() is None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            try:
                self._proc.wait(timeout=5.0)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


@dataclass
class ExternalSource:
    """One source id served by a shared external connection."""

    source_id: int
    cost: float
    connection: ExternalConnection
    kind: str = field(default="external", init=False)

    def __post_init__(self):
        if self.cost <= 0:
            raise ValueError("source cost must be positive")

    def evaluate(self, x_raw):
        return self.connection.evaluate(self.source_id, x_raw)


def evaluate(source, x_raw):
    """Query a source at a raw-coordinate point; returns (y, measured_cost)."""
    return source.evaluate(x_raw)


@dataclass(frozen=True)
class Benchmark:
    """A ready-to-run synthetic problem with known optimum metadata."""

    name: str
    space: SearchSpace
    sources: tuple
    optimum_x: tuple
    optimum_value: float


def _biased_quadratic(a=0.05, b=10.0, center=0.6, costs=(10.0, 1.0),
                      noise_std=0.0, noise_seed=None):
    space = SearchSpace([Dimension("x1", 0.0, 1.0), Dimension("x2", 0.0, 1.0)])
    c = float(center)

    def f1(x):
        return float(np.sum((x - c) ** 2))

    def f2(x):
        return f1(x) + a * np.sin(b * x[0])

    seeds = _noise_seeds(noise_seed, 2)
    sources = (
        AnalyticSource(1, costs[0], f1, noise_std=noise_std, noise_seed=seeds[0]),
        AnalyticSource(2, costs[1], f2, noise_std=noise_std, noise_seed=seeds[1]),
    )
    return Benchmark("biased-quadratic-2src", space, sources, (c, c), 0.0)


def _forrester(scale=0.5, slope=10.0, offset=-5.0, costs=(10.0, 1.0),
               noise_std=0.0, noise_seed=None):
    space = SearchSpace([Dimension("x", 0.0, 1.0)])

    def f1(x):
        t = float(x[0])
        return (6.0 * t - 2.0) ** 2 * np.sin(12.0 * t - 4.0)

    def f2(x):
        return scale * f1(x) + slope * (float(x[0]) - 0.5) + offset

    seeds = _noise_seeds(noise_seed, 2)
    sources = (
        AnalyticSource(1, costs[0], f1, noise_std=noise_std, noise_seed=seeds[0]),
        AnalyticSource(2, costs[1], f2, noise_std=noise_std, noise_seed=seeds[1]),
    )
    # global minimum from a dense-grid search refined locally
    return Benchmark("forrester-2src", space, sources, (0.7572487570116414,),
                     -6.020740055767082)


def _region_biased(bias=0.8, width=0.15, center=0.65, costs=(10.0, 1.0),
                   noise_std=0.0, noise_seed=None):
    space = SearchSpace([Dimension("x", 0.0, 1.0)])
    c, w = float(center), float(width)

    def f1(x):
        return 4.0 * (float(x[0]) - c) ** 2

    def f2(x):
        # accurate near the optimum, increasingly biased away from it
        t = float(x[0])
        return f1(x) + bias * (1.0 - np.exp(-((t - c) ** 2) / (2.0 * w**2)))

    seeds = _noise_seeds(noise_seed, 2)
    sources = (
        AnalyticSource(1, costs[0], f1, noise_std=noise_std, noise_seed=seeds[0]),
        AnalyticSource(2, costs[1], f2, noise_std=noise_std, noise_seed=seeds[1]),
    )
    return Benchmark("region-biased-2src", space, sources, (c,), 0.0)


def _noise_seeds(noise_seed, count):
    if noise_seed is None:
        return [None] * count
    return np.random.SeedSequence(noise_seed).spawn(count)


BENCHMARKS = {
    "biased-quadratic-2src": _biased_quadratic,
    "forrester-2src": _forrester,
    "region-biased-2src": _region_biased,
}


def benchmark_names():
    return sorted(BENCHMARKS)


def make_benchmark(name, **params):
    """Build a named synthetic benchmark; see ``benchmark_names()``."""
    try:
        factory = BENCHMARKS[name]
    except KeyError:
        raise ValueError(f"unknown benchmark {name!r}; known: {benchmark_names()}")
    return factory(**params)
