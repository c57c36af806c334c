"""Experiment configuration, multi-run orchestration, traces, and summaries.

A single JSON config drives everything. Per (method, run) pair the harness
writes one CSV trace plus a JSON metadata sidecar; a summary step resamples
the best-value-versus-cost curves of all runs onto a common cost grid and
reports the cheap-source query share and the cost-to-match ratio between
methods.
"""

from __future__ import annotations

import csv
import json
import shutil
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .acquisition import BetaSchedule
from .errors import ConfigValidationError, MisoboError, RunAbortedError
from .kernels import KERNEL_FAMILIES
from .loop import LoopConfig, RunTrace, TraceRow, run_miso_agp, run_vanilla_bo
from .sources import BENCHMARKS, ExternalConnection, ExternalSource, make_benchmark
from .spaces import Dimension, SearchSpace

METHODS = ("miso_agp", "vanilla_bo", "both")

_TOP_KEYS = {
    "space", "sources", "method", "n_init", "max_iterations", "max_cost",
    "m", "delta", "kernel", "beta", "acquisition", "shift_numerator",
    "lhs_centered", "n_runs", "seed", "output_dir",
}
_KERNEL_KEYS = {"family", "noise", "restarts", "bounds"}
_KERNEL_BOUND_NAMES = {"length_scale", "signal_variance", "alpha"}
_BETA_KEYS = {"mode", "delta_conf", "constant_value"}
_ACQ_KEYS = {"n_starts", "maxiter"}
_SOURCE_KEYS = {"benchmark", "external"}
_BENCHMARK_KEYS = {"name", "params", "costs"}
_EXTERNAL_KEYS = {"command", "costs", "timeout_seconds"}
_DIM_KEYS = {"name", "lower", "upper", "log10"}


@dataclass
class ExperimentConfig:
    """Validated experiment description (see ``parse_config``)."""

    method: str
    n_init: object
    max_iterations: int
    max_cost: float
    m: float
    delta: float
    kernel_family: str
    noise: object
    mle_restarts: int
    kernel_params: dict
    beta_mode: str
    beta_delta_conf: float
    beta_constant: float
    n_starts: int
    acq_maxiter: int
    shift_numerator: bool
    lhs_centered: bool
    n_runs: int
    seed: int
    output_dir: str
    benchmark: dict = None
    external: dict = None
    space_spec: list = None
    raw: dict = field(default_factory=dict)

    @property
    def methods(self):
        return ("miso_agp", "vanilla_bo") if self.method == "both" else (self.method,)


def _get(raw, key, default):
    return raw[key] if key in raw else default


def parse_config(raw):
    """Validate a config dict; raises with every violation listed at once."""
    bad = []
    if not isinstance(raw, dict):
        raise ConfigValidationError(["config must be a JSON object"])
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        bad.append(f"unknown keys: {sorted(unknown)}")

    method = _get(raw, "method", "both")
    if method not in METHODS:
        bad.append(f"method must be one of {METHODS}, got {method!r}")

    n_init = _get(raw, "n_init", 3)
    if isinstance(n_init, list):
        if not n_init or any(not isinstance(n, int) or n < 1 for n in n_init):
            bad.append("per-source n_init must be a nonempty list of integers >= 1")
    elif not isinstance(n_init, int) or n_init < 1:
        bad.append("n_init must be an integer >= 1 or a per-source list")
    max_iterations = _get(raw, "max_iterations", None)
    if max_iterations is not None and (not isinstance(max_iterations, int) or max_iterations < 1):
        bad.append("max_iterations must be an integer >= 1")
    max_cost = _get(raw, "max_cost", None)
    if max_cost is not None and not (isinstance(max_cost, (int, float)) and max_cost > 0):
        bad.append("max_cost must be a positive number")
    if max_iterations is None and max_cost is None:
        bad.append("set max_iterations >= 1 or max_cost > 0")

    m = _get(raw, "m", 1.0)
    if not (isinstance(m, (int, float)) and m >= 0):
        bad.append("m must be a nonnegative number")
    delta = _get(raw, "delta", 1e-4)
    if not (isinstance(delta, (int, float)) and delta > 0):
        bad.append("delta must be a positive number")

    kernel = _get(raw, "kernel", {})
    family, noise, restarts, kernel_params = "se", "fit", 10, {}
    if not isinstance(kernel, dict):
        bad.append("kernel must be an object")
    else:
        unknown = set(kernel) - _KERNEL_KEYS
        if unknown:
            bad.append(f"kernel: unknown keys {sorted(unknown)}")
        family = _get(kernel, "family", "se")
        if family not in KERNEL_FAMILIES:
            bad.append(f"kernel.family must be one of {sorted(KERNEL_FAMILIES)}")
        noise = _get(kernel, "noise", "fit")
        if noise != "fit" and not (isinstance(noise, (int, float)) and noise >= 0):
            bad.append("kernel.noise must be 'fit' or a nonnegative number")
        restarts = _get(kernel, "restarts", 10)
        if not isinstance(restarts, int) or restarts < 1:
            bad.append("kernel.restarts must be an integer >= 1")
        bounds = _get(kernel, "bounds", {})
        if not isinstance(bounds, dict) or set(bounds) - _KERNEL_BOUND_NAMES:
            bad.append(f"kernel.bounds keys must be within {sorted(_KERNEL_BOUND_NAMES)}")
        else:
            for name, pair in bounds.items():
                if not (isinstance(pair, list) and len(pair) == 2
                        and all(isinstance(v, (int, float)) for v in pair)
                        and 0 < pair[0] < pair[1]):
                    bad.append(f"kernel.bounds.{name} must be [low, high] with 0 < low < high")
                else:
                    kernel_params[f"{name}_bounds"] = (float(pair[0]), float(pair[1]))
            if "alpha" in bounds and family != "rq":
                bad.append("kernel.bounds.alpha applies to the rq family only")

    beta = _get(raw, "beta", {})
    beta_mode, beta_delta_conf, beta_constant = "srinivas_practical", 0.05, 4.0
    if not isinstance(beta, dict):
        bad.append("beta must be an object")
    else:
        unknown = set(beta) - _BETA_KEYS
        if unknown:
            bad.append(f"beta: unknown keys {sorted(unknown)}")
        beta_mode = _get(beta, "mode", "srinivas_practical")
        if beta_mode not in ("srinivas_practical", "constant"):
            bad.append("beta.mode must be 'srinivas_practical' or 'constant'")
        beta_delta_conf = _get(beta, "delta_conf", 0.05)
        if not (isinstance(beta_delta_conf, (int, float)) and 0 < beta_delta_conf < 1):
            bad.append("beta.delta_conf must be in (0, 1)")
        beta_constant = _get(beta, "constant_value", 4.0)
        if not (isinstance(beta_constant, (int, float)) and beta_constant > 0):
            bad.append("beta.constant_value must be positive")

    acq = _get(raw, "acquisition", {})
    n_starts, acq_maxiter = None, 100
    if not isinstance(acq, dict):
        bad.append("acquisition must be an object")
    else:
        unknown = set(acq) - _ACQ_KEYS
        if unknown:
            bad.append(f"acquisition: unknown keys {sorted(unknown)}")
        n_starts = _get(acq, "n_starts", None)
        if n_starts is not None and (not isinstance(n_starts, int) or n_starts < 1):
            bad.append("acquisition.n_starts must be an integer >= 1")
        acq_maxiter = _get(acq, "maxiter", 100)
        if not isinstance(acq_maxiter, int) or acq_maxiter < 1:
            bad.append("acquisition.maxiter must be an integer >= 1")

    shift_numerator = _get(raw, "shift_numerator", False)
    if not isinstance(shift_numerator, bool):
        bad.append("shift_numerator must be a boolean")
    lhs_centered = _get(raw, "lhs_centered", False)
    if not isinstance(lhs_centered, bool):
        bad.append("lhs_centered must be a boolean")
    n_runs = _get(raw, "n_runs", 1)
    if not isinstance(n_runs, int) or n_runs < 1:
        bad.append("n_runs must be an integer >= 1")
    seed = _get(raw, "seed", 0)
    if not isinstance(seed, int) or seed < 0:
        bad.append("seed must be a nonnegative integer")
    output_dir = _get(raw, "output_dir", "results")
    if not isinstance(output_dir, str) or not output_dir:
        bad.append("output_dir must be a nonempty string")

    benchmark = external = space_spec = None
    sources = _get(raw, "sources", None)
    if not isinstance(sources, dict) or set(sources) - _SOURCE_KEYS or len(sources) != 1:
        bad.append("sources must be an object with exactly one of "
                   f"{sorted(_SOURCE_KEYS)}")
    elif "benchmark" in sources:
        benchmark = sources["benchmark"]
        if not isinstance(benchmark, dict) or set(benchmark) - _BENCHMARK_KEYS:
            bad.append(f"sources.benchmark keys must be within {sorted(_BENCHMARK_KEYS)}")
        elif _get(benchmark, "name", None) not in BENCHMARKS:
            bad.append(f"sources.benchmark.name must be one of {sorted(BENCHMARKS)}")
        if "space" in raw:
            bad.append("space is derived from the benchmark; remove the space key")
    else:
        external = sources["external"]
        if not isinstance(external, dict) or set(external) - _EXTERNAL_KEYS:
            bad.append(f"sources.external keys must be within {sorted(_EXTERNAL_KEYS)}")
        else:
            command = _get(external, "command", None)
            if (not isinstance(command, list) or not command
                    or not all(isinstance(c, str) for c in command)):
                bad.append("sources.external.command must be a nonempty list of strings")
            elif shutil.which(command[0]) is None and not Path(command[0]).exists():
                bad.append(f"sources.external.command[0] not found: {command[0]!r}")
            costs = _get(external, "costs", None)
            if costs is not None and not (
                isinstance(costs, list) and len(costs) >= 1
                and all(isinstance(c, (int, float)) and c > 0 for c in costs)
                and all(a > b for a, b in zip(costs, costs[1:]))
            ):
                bad.append("sources.external.costs must be strictly decreasing positive numbers")
        space_spec = _get(raw, "space", None)
        space_bad = _validate_space(space_spec)
        if space_bad:
            bad.extend(space_bad)
    bench_costs = None
    if benchmark is not None:
        bench_costs = _get(benchmark, "costs", None)
        if bench_costs is not None and not (
            isinstance(bench_costs, list)
            and all(isinstance(c, (int, float)) and c > 0 for c in bench_costs)
            and all(a > b for a, b in zip(bench_costs, bench_costs[1:]))
        ):
            bad.append("sources.benchmark.costs must be strictly decreasing positive numbers")

    if bad:
        raise ConfigValidationError(bad)
    return ExperimentConfig(
        method=method, n_init=n_init, max_iterations=max_iterations,
        max_cost=max_cost, m=float(m), delta=float(delta),
        kernel_family=family, noise=noise, mle_restarts=restarts,
        kernel_params=kernel_params,
        beta_mode=beta_mode, beta_delta_conf=float(beta_delta_conf),
        beta_constant=float(beta_constant), n_starts=n_starts,
        acq_maxiter=acq_maxiter, shift_numerator=shift_numerator,
        lhs_centered=lhs_centered, n_runs=n_runs, seed=seed,
        output_dir=output_dir, benchmark=benchmark, external=external,
        space_spec=space_spec, raw=dict(raw),
    )


def _validate_space(space_spec):
    bad = []
    if not isinstance(space_spec, list) or not space_spec:
        return ["space must be a nonempty list of dimension objects"]
    for i, dim in enumerate(space_spec):
        if not isinstance(dim, dict) or set(dim) - _DIM_KEYS:
            bad.append(f"space[{i}]: keys must be within {sorted(_DIM_KEYS)}")
            continue
        try:
            Dimension(
                name=str(_get(dim, "name", f"x{i + 1}")),
                lower=float(dim["lower"]), upper=float(dim["upper"]),
                log10=bool(_get(dim, "log10", False)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            bad.append(f"space[{i}]: {exc}")
    return bad


def load_config(path):
    """Parse and validate a JSON config file."""
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigValidationError([f"cannot read config {path}: {exc}"])
    return parse_config(raw)


def _build_space(config):
    if config.benchmark is not None:
        return make_benchmark(config.benchmark["name"],
                              **_get(config.benchmark, "params", {})).space
    return SearchSpace([
        Dimension(name=str(_get(d, "name", f"x{i + 1}")), lower=float(d["lower"]),
                  upper=float(d["upper"]), log10=bool(_get(d, "log10", False)))
        for i, d in enumerate(config.space_spec)
    ])


class _RunContext:
    """Per-run sources + space; owns the external connection when present."""

    def __init__(self, config, run_seed):
        self.connection = None
        if config.benchmark is not None:
            params = dict(_get(config.benchmark, "params", {}))
            costs = _get(config.benchmark, "costs", None)
            if costs is not None:
                params["costs"] = tuple(costs)
            if "noise_seed" not in params and params.get("noise_std"):
                params["noise_seed"] = run_seed
            bench = make_benchmark(config.benchmark["name"], **params)
            self.space, self.sources = bench.space, list(bench.sources)
        else:
            self.space = _build_space(config)
            timeout = float(_get(config.external, "timeout_seconds", 3600.0))
            self.connection = ExternalConnection(config.external["command"], timeout=timeout)
            advertised = {int(s["id"]): float(s["cost"])
                          for s in self.connection.info["sources"]}
            if int(self.connection.info["dims"]) != self.space.d:
                raise ConfigValidationError([
                    f"evaluator advertises dims={self.connection.info['dims']} "
                    f"but the config space has d={self.space.d}"
                ])
            costs = _get(config.external, "costs", None)
            ids = sorted(advertised)
            costs = [float(c) for c in costs] if costs is not None else [
                advertised[i] for i in ids
            ]
            if len(costs) != len(ids):
                raise ConfigValidationError([
                    "external costs count does not match the advertised sources"
                ])
            self.sources = [
                ExternalSource(source_id=i, cost=c, connection=self.connection)
                for i, c in zip(ids, costs)
            ]

    def loop_config(self, config, run_seed, single_source=False):
        sources = self.sources[:1] if single_source else self.sources
        n_init = config.n_init
        if isinstance(n_init, list):
            if len(n_init) != len(self.sources):
                raise ConfigValidationError([
                    f"n_init lists {len(n_init)} counts but there are "
                    f"{len(self.sources)} sources"
                ])
            n_init = n_init[:1] if single_source else n_init
        return LoopConfig(
            space=self.space, sources=tuple(sources), n_init=n_init,
            max_iterations=config.max_iterations, max_cost=config.max_cost,
            m=config.m, delta=config.delta, kernel=config.kernel_family,
            noise=config.noise, mle_restarts=config.mle_restarts,
            kernel_params=dict(config.kernel_params),
            beta=BetaSchedule(dimension=self.space.d, mode=config.beta_mode,
                              delta_conf=config.beta_delta_conf,
                              constant_value=config.beta_constant),
            n_starts=config.n_starts, acq_maxiter=config.acq_maxiter,
            shift_numerator=config.shift_numerator,
            lhs_centered=config.lhs_centered, seed=run_seed,
        )

    def close(self):
        if self.connection is not None:
            self.connection.close()


def trace_header(d):
    return (["iteration", "source"] + [f"x_{j + 1}" for j in range(d)]
            + ["y", "nominal_cost_cum", "actual_cost_cum", "best_seen",
               "augmented_best_seen", "dhat_size", "corrected"])


def format_row(row):
    return ([str(row.iteration), str(row.source)]
            + [repr(float(v)) for v in row.x_raw]
            + [repr(float(row.y)), repr(float(row.nominal_cost_cum)),
               repr(float(row.actual_cost_cum)), repr(float(row.best_seen)),
               repr(float(row.augmented_best_seen)), str(row.dhat_size),
               "1" if row.corrected else "0"])


def read_trace_rows(path):
    """Parse a trace CSV back into TraceRow objects (lossless round trip)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        d = len([h for h in header if h.startswith("x_")])
        rows = []
        for rec in reader:
            rows.append(TraceRow(
                iteration=int(rec[0]), source=int(rec[1]),
                x_raw=tuple(float(v) for v in rec[2:2 + d]),
                y=float(rec[2 + d]), nominal_cost_cum=float(rec[3 + d]),
                actual_cost_cum=float(rec[4 + d]), best_seen=float(rec[5 + d]),
                augmented_best_seen=float(rec[6 + d]), dhat_size=int(rec[7 + d]),
                corrected=rec[8 + d] == "1",
            ))
    return rows


class _TraceWriter:
    """Appends rows to a CSV file, flushing after every row."""

    def __init__(self, path, d, append=False):
        self.path = Path(path)
        mode = "a" if append and self.path.exists() else "w"
        self._fh = open(self.path, mode, newline="")
        self._writer = csv.writer(self._fh)
        if mode == "w":
            self._writer.writerow(trace_header(d))
            self._fh.flush()

    def __call__(self, row):
        self._writer.writerow(format_row(row))
        self._fh.flush()

    def close(self):
        self._fh.close()


def run_experiment(config, out_dir=None, seed=None):
    """Execute every (method, run) pair and write traces, sidecars, summary.

    Returns the output directory. Partial artifacts stay on disk when a run
    aborts; the error propagates after the sidecar records the failure.
    """
    if isinstance(config, (str, Path)):
        config = load_config(config)
    out = Path(out_dir if out_dir is not None else config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    base_seed = config.seed if seed is None else int(seed)

    runners = {"miso_agp": run_miso_agp, "vanilla_bo": run_vanilla_bo}
    trace_paths = []
    for run_idx in range(1, config.n_runs + 1):
        run_seed = base_seed + run_idx
        for method in config.methods:
            ctx = _RunContext(config, run_seed)
            trace_path = out / f"{method}_run{run_idx:03d}.csv"
            sidecar = trace_path.with_suffix(".json")
            writer = _TraceWriter(trace_path, ctx.space.d)
            meta = {
                "method": method, "run": run_idx, "seed": run_seed,
                "space": [dim.name for dim in ctx.space.dims],
                "costs": [s.cost for s in ctx.sources],
                "status": "running",
            }
            try:
                loop_cfg = ctx.loop_config(config, run_seed,
                                           single_source=method == "vanilla_bo")
                trace = runners[method](loop_cfg, trace_sink=writer)
                meta.update(
                    status="completed",
                    final_x=list(trace.final_x_raw), final_y=trace.final_y,
                    final_source1_x=list(trace.final_source1_x_raw),
                    final_source1_y=trace.final_source1_y,
                    n_rows=trace.n_rows,
                )
                trace_paths.append(trace_path)
            except RunAbortedError as exc:
                meta.update(status="aborted", error=str(exc),
                            completed_iterations=exc.completed_iterations,
                            resume_token={"trace": str(trace_path)})
                sidecar.write_text(json.dumps(meta, indent=2))
                raise
            finally:
                writer.close()
                ctx.close()
            sidecar.write_text(json.dumps(meta, indent=2))

    summarize(out)
    return out


def summarize(trace_dir_or_paths, out_dir=None):
    """Aggregate traces: per-method mean/std best-vs-cost curves plus stats.

    Writes ``plotdata.csv`` (method, cost, mean_best, std_best) and
    ``summary.json``; returns the summary dict. Curves are step functions of
    the running ground-truth best, resampled by carrying the last value
    forward onto the union of every run's cost points.
    """
    if isinstance(trace_dir_or_paths, (str, Path)):
        trace_dir = Path(trace_dir_or_paths)
        paths = sorted(trace_dir.glob("*_run*.csv"))
        out = Path(out_dir) if out_dir is not None else trace_dir
    else:
        paths = [Path(p) for p in trace_dir_or_paths]
        out = Path(out_dir) if out_dir is not None else paths[0].parent
    if not paths:
        raise MisoboError("no trace files found to summarize")

    by_method = {}
    for path in paths:
        rows = read_trace_rows(path)
        if not rows:
            continue
        sidecar = path.with_suffix(".json")
        if sidecar.exists():
            method = json.loads(sidecar.read_text())["method"]
        else:
            method = path.name.rsplit("_run", 1)[0]
        by_method.setdefault(method, []).append(rows)

    summary = {"methods": {}}
    plot_records = []
    for method, runs in sorted(by_method.items()):
        curves = []
        for rows in runs:
            costs = np.array([r.actual_cost_cum for r in rows])
            best = np.array([r.best_seen for r in rows])
            curves.append((costs, best))
        grid = np.unique(np.concatenate([c for c, _ in curves]))
        # keep only grid points where every run already has an observation
        grid = grid[grid >= max(c[0] for c, _ in curves)]
        values = np.vstack([
            best[np.searchsorted(costs, grid, side="right") - 1]
            for costs, best in curves
        ])
        mean = values.mean(axis=0)
        std = values.std(axis=0)
        for g, mu, sd in zip(grid, mean, std):
            plot_records.append((method, g, mu, sd))

        loop_rows = [[r for r in rows if r.iteration > 0] for rows in runs]
        cheap = [
            sum(1 for r in rows if r.source >= 2) / len(rows) if rows else 0.0
            for rows in loop_rows
        ]
        summary["methods"][method] = {
            "n_runs": len(runs),
            "final_best_seen": [float(b[-1]) for _, b in curves],
            "median_final_best_seen": float(np.median([b[-1] for _, b in curves])),
            "cheap_source_query_share": float(np.mean(cheap)),
            "total_actual_cost": [float(c[-1]) for c, _ in curves],
        }

    summary["cost_to_match"] = _cost_to_match(by_method)

    with open(out / "plotdata.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "cost", "mean_best", "std_best"])
        for method, g, mu, sd in plot_records:
            writer.writerow([method, repr(float(g)), repr(float(mu)), repr(float(sd))])
    (out / "summary.json").write_text(json.dumps(summary, indent=2))
    return summary


def _cost_to_match(by_method):
    """Median cost each method needs to reach the easiest final target."""
    if not by_method:
        return None
    finals = {
        method: float(np.median([rows[-1].best_seen for rows in runs]))
        for method, runs in by_method.items()
    }
    target = max(finals.values())
    result = {"target_best_seen": target, "median_cost_to_reach": {}}
    for method, runs in by_method.items():
        costs = []
        for rows in runs:
            hit = [r.actual_cost_cum for r in rows if r.best_seen <= target]
            costs.append(hit[0] if hit else float("inf"))
        result["median_cost_to_reach"][method] = float(np.median(costs))
    reached = result["median_cost_to_reach"]
    if "miso_agp" in reached and "vanilla_bo" in reached and reached["vanilla_bo"] > 0:
        result["miso_vs_vanilla_ratio"] = reached["miso_agp"] / reached["vanilla_bo"]
    return result
