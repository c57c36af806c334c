"""Sequential optimization loops: the multi-source method and a GP-LCB baseline.

Both loops share the initialization design, seed discipline, trace-row
format, and stopping rules, so runs with equal seeds are directly
comparable. Rows are handed to an optional sink as soon as each evaluation
completes, which keeps traces on disk current if a source dies mid-run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .acquisition import BetaSchedule, lcb, optimize_acquisition
from .agp import AugmentedDataset, SourceData, SourceModelSet, build_agp, propose
from .errors import (
    InitializationError,
    RunAbortedError,
    SourceEvaluationError,
    UndefinedIncumbentError,
)
from .gp import GaussianProcess, mle_train
from .kernels import make_kernel

# seed-derivation tags; every random decision in a run hangs off
# (seed, tag, iteration, source) so methods sharing a seed share designs
_TAG_INIT = 0
_TAG_GP = 1
_TAG_ACQ = 2
_TAG_SIGMA = 3


def derive_seed(seed, tag, *key):
    """Deterministic, collision-free seed material for one random decision."""
    return np.random.SeedSequence((int(seed), int(tag)) + tuple(int(k) for k in key))


@dataclass
class LoopConfig:
    """Everything one optimization run needs.

    ``sources`` must be ordered ground-truth first with strictly decreasing
    nominal costs. ``n_init`` is either one count (a single design shared by
    every source) or one count per source (independent designs).
    ``max_iterations`` bounds post-initialization evaluations; ``max_cost``
    bounds their cumulated nominal cost. At least one of the two must be set.
    """

    space: object
    sources: tuple
    n_init: object = 3
    max_iterations: int = 30
    max_cost: float = None
    m: float = 1.0
    delta: float = 1e-4
    kernel: str = "se"
    noise: object = "fit"
    mle_restarts: int = 10
    kernel_params: dict = None
    beta: BetaSchedule = None
    n_starts: int = None
    acq_maxiter: int = 100
    shift_numerator: bool = False
    lhs_centered: bool = False
    seed: int = 0

    def __post_init__(self):
        self.sources = tuple(self.sources)
        if not self.sources:
            raise ValueError("need at least one source")
        costs = [s.cost for s in self.sources]
        if any(a <= b for a, b in zip(costs, costs[1:])):
            raise ValueError("sources must come in strictly decreasing cost order")
        if isinstance(self.n_init, int):
            if self.n_init < 1:
                raise ValueError("n_init must be >= 1")
        else:
            self.n_init = tuple(self.n_init)
            if len(self.n_init) != len(self.sources):
                raise ValueError("per-source n_init needs one count per source")
            if any(not isinstance(n, int) or n < 1 for n in self.n_init):
                raise ValueError("every per-source n_init count must be >= 1")
        if self.max_iterations is None and self.max_cost is None:
            raise ValueError("set max_iterations or max_cost")
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.m < 0:
            raise ValueError("m must be nonnegative")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")
        if self.kernel_params is None:
            self.kernel_params = {}
        if self.beta is None:
            self.beta = BetaSchedule(dimension=self.space.d)


@dataclass(frozen=True)
class TraceRow:
    """One evaluation as recorded in the trace (iteration 0 = initialization)."""

    iteration: int
    source: int
    x_raw: tuple
    y: float
    nominal_cost_cum: float
    actual_cost_cum: float
    best_seen: float
    augmented_best_seen: float
    dhat_size: int
    corrected: bool


@dataclass
class RunTrace:
    """Complete record of one run plus its final incumbents.

    ``final_x_raw``/``final_y`` come from the augmented set rebuilt after the
    loop (they may originate on a cheap source); the ``source1`` pair is the
    conservative incumbent over ground-truth evaluations only.
    """

    rows: list = field(default_factory=list)
    final_x_raw: tuple = None
    final_y: float = None
    final_source1_x_raw: tuple = None
    final_source1_y: float = None

    @property
    def n_rows(self):
        return len(self.rows)


def best_seen(values):
    """Running minimum of a nonempty value sequence."""
    values = np.asarray(list(values), dtype=float)
    if values.size == 0:
        raise UndefinedIncumbentError("no qualifying evaluations yet")
    return np.minimum.accumulate(values)


def augmented_best_seen(augmented):
    """Minimum objective value over the current augmented set.

    Unlike the running incumbent this may increase between iterations, when
    a previously selected cheap record drops out of the set.
    """
    records = augmented.records if isinstance(augmented, AugmentedDataset) else list(augmented)
    if not records:
        raise UndefinedIncumbentError("augmented set is empty")
    return min(r.y for r in records)


class _RunState:
    """Datasets, cost accumulators, and rows of a run in progress."""

    def __init__(self, config, n_active_sources):
        self.config = config
        self.datasets = [SourceData(np.zeros((0, config.space.d)), [])
                         for _ in range(n_active_sources)]
        self.rows = []
        self.nominal_cum = 0.0
        self.actual_cum = 0.0
        self.loop_cost = 0.0
        self.n_loop = 0
        self.best = math.inf

    def record(self, sink, iteration, source_id, x_unit, y, measured_cost,
               aug_best, dhat_size, corrected=False):
        src = self.config.sources[source_id - 1]
        self.nominal_cum += src.cost
        self.actual_cum += measured_cost if src.kind == "external" else src.cost
        if iteration > 0:
            self.loop_cost += src.cost
            self.n_loop += 1
        if source_id == 1:
            self.best = min(self.best, y)
        x_raw = self.config.space.from_internal(x_unit)
        row = TraceRow(
            iteration=iteration, source=source_id,
            x_raw=tuple(float(v) for v in np.atleast_1d(x_raw)),
            y=float(y), nominal_cost_cum=self.nominal_cum,
            actual_cost_cum=self.actual_cum, best_seen=self.best,
            augmented_best_seen=float(aug_best), dhat_size=int(dhat_size),
            corrected=bool(corrected),
        )
        self.rows.append(row)
        self.datasets[source_id - 1].append(x_unit, y)
        if sink is not None:
            sink(row)
        return row

    def keep_going(self):
        cfg = self.config
        if cfg.max_iterations is not None and self.n_loop >= cfg.max_iterations:
            return False
        if cfg.max_cost is not None and self.loop_cost >= cfg.max_cost:
            return False
        return True


def _restore(state, rows):
    """Rebuild run state from previously persisted trace rows."""
    cfg = state.config
    for row in rows:
        if row.source > len(state.datasets):
            raise ValueError(
                f"trace row for source {row.source} does not fit this run "
                f"({len(state.datasets)} active sources)"
            )
        x_unit = cfg.space.to_internal(np.asarray(row.x_raw, dtype=float))
        state.datasets[row.source - 1].append(x_unit, row.y)
        state.nominal_cum = row.nominal_cost_cum
        state.actual_cum = row.actual_cost_cum
        if row.iteration > 0:
            state.loop_cost += cfg.sources[row.source - 1].cost
            state.n_loop += 1
        if row.source == 1:
            state.best = min(state.best, row.y)
        state.rows.append(row)


def initialize(state, sink, active_source_ids):
    """Evaluate the initial design on every active source.

    A single ``n_init`` count gives one shared Latin Hypercube design
    (every source sees the same locations, maximizing early discrepancy
    information); per-source counts give each source its own design.
    """
    cfg = state.config

    def eval_at(sid, x_unit):
        x_raw = cfg.space.from_internal(x_unit)
        try:
            y, measured = cfg.sources[sid - 1].evaluate(x_raw)
        except SourceEvaluationError as exc:
            raise InitializationError(
                f"initialization failed on source {sid}: {exc}"
            ) from exc
        best = min(state.best, y) if sid == 1 else state.best
        n1 = state.datasets[0].n + (1 if sid == 1 else 0)
        state.record(sink, 0, sid, x_unit, y, measured, aug_best=best, dhat_size=n1)

    if isinstance(cfg.n_init, int):
        design = cfg.space.latin_hypercube(
            cfg.n_init, random_state=derive_seed(cfg.seed, _TAG_INIT),
            centered=cfg.lhs_centered,
        )
        for x_unit in design:
            for sid in active_source_ids:
                eval_at(sid, x_unit)
    else:
        for sid in active_source_ids:
            design = cfg.space.latin_hypercube(
                cfg.n_init[sid - 1],
                random_state=derive_seed(cfg.seed, _TAG_INIT, sid),
                centered=cfg.lhs_centered,
            )
            for x_unit in design:
                eval_at(sid, x_unit)


def _train_source_model(data, config, seed):
    if data.n >= 2:
        return mle_train(data.X, data.y, kernel=config.kernel, noise=config.noise,
                         n_restarts=config.mle_restarts, random_state=seed,
                         **config.kernel_params)
    gp = GaussianProcess(kernel=make_kernel(config.kernel, **config.kernel_params),
                         noise=config.noise, optimizer=None)
    if data.n == 1:
        gp.fit(data.X, data.y)
    return gp


def _train_all(state, iteration):
    cfg = state.config
    models = [
        _train_source_model(ds, cfg, derive_seed(cfg.seed, _TAG_GP, iteration, s + 1))
        for s, ds in enumerate(state.datasets)
    ]
    return SourceModelSet(data=state.datasets, models=models,
                          costs=[s.cost for s in cfg.sources])


def _build_agp(state, model_set, iteration):
    cfg = state.config
    return build_agp(model_set, cfg.m, kernel=cfg.kernel, noise=cfg.noise,
                     n_restarts=cfg.mle_restarts,
                     random_state=derive_seed(cfg.seed, _TAG_GP, iteration, 1),
                     kernel_params=cfg.kernel_params)


def _query(state, sink, iteration, source_id, x_unit, aug_best, dhat_size, corrected):
    cfg = state.config
    x_raw = cfg.space.from_internal(x_unit)
    try:
        y, measured = cfg.sources[source_id - 1].evaluate(x_raw)
    except SourceEvaluationError as exc:
        raise RunAbortedError(
            f"source {source_id} failed at iteration {iteration}: {exc}",
            cause=exc, completed_iterations=state.n_loop,
        ) from exc
    return state.record(sink, iteration, source_id, x_unit, y, measured,
                        aug_best=aug_best, dhat_size=dhat_size, corrected=corrected)


def run_miso_agp(config, trace_sink=None, resume_from=None):
    """Run the multi-source loop; returns the trace with final incumbents.

    Per iteration: fit one GP per source, merge reliable cheap evaluations
    with the ground-truth data, fit the augmented GP, maximize the
    cost-penalized confidence bound over (source, location), apply the
    proximity correction if the winner crowds an existing evaluation, then
    query and record. Stops on the iteration or nominal-cost budget.
    """
    cfg = config
    n_src = len(cfg.sources)
    state = _RunState(cfg, n_src)
    if resume_from:
        _restore(state, resume_from)
    else:
        initialize(state, trace_sink, active_source_ids=range(1, n_src + 1))

    while state.keep_going():
        t = state.n_loop + 1
        model_set = _train_all(state, t)
        agp = _build_agp(state, model_set, t)
        beta = cfg.beta.beta(agp.size)
        proposal = propose(
            agp, model_set, beta, cfg.delta, n_starts=cfg.n_starts,
            source_seeds=[derive_seed(cfg.seed, _TAG_ACQ, t, s + 1) for s in range(n_src)],
            sigma_seed=derive_seed(cfg.seed, _TAG_SIGMA, t),
            shift_numerator=cfg.shift_numerator, maxiter=cfg.acq_maxiter,
        )
        _query(state, trace_sink, t, proposal.source, proposal.x,
               aug_best=augmented_best_seen(agp), dhat_size=agp.size,
               corrected=proposal.corrected)

    # output step: rebuild the augmented set so the incumbent reflects the
    # final data, then report it alongside the ground-truth-only incumbent
    final_set = _train_all(state, state.n_loop + 1)
    final_agp = _build_agp(state, final_set, state.n_loop + 1)
    best_idx = int(np.argmin(final_agp.y))
    incumbent_x = cfg.space.from_internal(final_agp.records[best_idx].x)
    trace = RunTrace(rows=state.rows)
    trace.final_x_raw = tuple(float(v) for v in np.atleast_1d(incumbent_x))
    trace.final_y = float(final_agp.records[best_idx].y)
    _attach_source1_incumbent(trace, state)
    return trace


def run_vanilla_bo(config, trace_sink=None, resume_from=None):
    """Plain GP-LCB on the ground-truth source only, sharing the seed
    discipline (and therefore the initialization design) with the
    multi-source loop."""
    cfg = config
    state = _RunState(cfg, 1)
    if resume_from:
        _restore(state, resume_from)
    else:
        initialize(state, trace_sink, active_source_ids=(1,))

    d1 = state.datasets[0]
    while state.keep_going():
        t = state.n_loop + 1
        gp = _train_source_model(d1, cfg, derive_seed(cfg.seed, _TAG_GP, t, 1))
        beta = cfg.beta.beta(d1.n)

        def objective(u):
            return -float(lcb(gp, u[None, :], beta)[0])

        x_next, _ = optimize_acquisition(
            objective, cfg.space.d, n_starts=cfg.n_starts,
            random_state=derive_seed(cfg.seed, _TAG_ACQ, t, 1),
            maxiter=cfg.acq_maxiter,
        )
        _query(state, trace_sink, t, 1, x_next,
               aug_best=state.best, dhat_size=d1.n, corrected=False)

    trace = RunTrace(rows=state.rows)
    _attach_source1_incumbent(trace, state)
    trace.final_x_raw = trace.final_source1_x_raw
    trace.final_y = trace.final_source1_y
    return trace


def _attach_source1_incumbent(trace, state):
    d1 = state.datasets[0]
    if d1.n == 0:
        raise UndefinedIncumbentError("no ground-truth evaluations recorded")
    idx = int(np.argmin(d1.y))
    x_raw = state.config.space.from_internal(d1.X[idx])
    trace.final_source1_x_raw = tuple(float(v) for v in np.atleast_1d(x_raw))
    trace.final_source1_y = float(d1.y[idx])
