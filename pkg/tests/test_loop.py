import numpy as np
import pytest

from misobo import (
    AnalyticSource,
    AugmentedRecord,
    BetaSchedule,
    LoopConfig,
    RunAbortedError,
    SourceEvaluationError,
    UndefinedIncumbentError,
    augmented_best_seen,
    best_seen,
    make_benchmark,
    run_miso_agp,
    run_vanilla_bo,
)
from misobo.loop import _RunState, initialize


def quadratic_sources(costs=(10.0, 1.0), bias=0.05):
    bench = make_benchmark("biased-quadratic-2src", a=bias, costs=costs)
    return bench.space, bench.sources


def small_config(space, sources, **overrides):
    defaults = dict(n_init=3, max_iterations=3, mle_restarts=3, n_starts=4,
                    acq_maxiter=40, seed=7)
    defaults.update(overrides)
    return LoopConfig(space=space, sources=sources, **defaults)


class TestBestSeen:
    def test_single_record(self):
        np.testing.assert_array_equal(best_seen([0.3]), [0.3])

    def test_running_minimum(self):
        np.testing.assert_array_equal(best_seen([0.5, 0.3, 0.4]), [0.5, 0.3, 0.3])

    def test_matches_prefix_minimum_oracle(self, rng):
        values = rng.standard_normal(50)
        running = best_seen(values)
        for i in range(50):
            assert running[i] == values[: i + 1].min()

    def test_empty_raises(self):
        with pytest.raises(UndefinedIncumbentError):
            best_seen([])


class TestAugmentedBestSeen:
    def rec(self, y):
        return AugmentedRecord(x=np.array([0.5]), y=y, origin_source=1, reason="from_d1")

    def test_single_record(self):
        assert augmented_best_seen([self.rec(0.7)]) == 0.7

    def test_minimum_over_records(self):
        assert augmented_best_seen([self.rec(0.5), self.rec(-0.2)]) == -0.2

    def test_may_increase_when_record_leaves(self):
        # deselection scenario: the global-min record drops out and the
        # metric increases; no monotonicity is asserted anywhere
        before = augmented_best_seen([self.rec(0.5), self.rec(-1.0)])
        after = augmented_best_seen([self.rec(0.5)])
        assert after > before

    def test_empty_raises(self):
        with pytest.raises(UndefinedIncumbentError):
            augmented_best_seen([])


class TestInitialize:
    def test_shared_design_all_sources(self):
        space, sources = quadratic_sources()
        cfg = small_config(space, sources)
        state = _RunState(cfg, 2)
        initialize(state, None, active_source_ids=(1, 2))
        assert len(state.rows) == 6
        assert [r.source for r in state.rows] == [1, 2, 1, 2, 1, 2]
        for i in range(3):
            assert state.rows[2 * i].x_raw == state.rows[2 * i + 1].x_raw
        assert all(r.iteration == 0 for r in state.rows)

    def test_single_source_single_point(self):
        space, sources = quadratic_sources()
        cfg = small_config(space, sources[:1], n_init=1)
        state = _RunState(cfg, 1)
        initialize(state, None, active_source_ids=(1,))
        assert len(state.rows) == 1

    def test_deterministic_across_runs_and_methods(self):
        space, sources = quadratic_sources()
        cfg = small_config(space, sources)
        a = _RunState(cfg, 2)
        initialize(a, None, active_source_ids=(1, 2))
        b = _RunState(cfg, 2)
        initialize(b, None, active_source_ids=(1, 2))
        assert [r.x_raw for r in a.rows] == [r.x_raw for r in b.rows]
        # vanilla (source 1 only) shares the same design and values
        c = _RunState(LoopConfig(space=space, sources=sources[:1], n_init=3,
                                 max_iterations=1, seed=7), 1)
        initialize(c, None, active_source_ids=(1,))
        miso_s1 = [r for r in a.rows if r.source == 1]
        assert [r.x_raw for r in c.rows] == [r.x_raw for r in miso_s1]
        assert [r.y for r in c.rows] == [r.y for r in miso_s1]

    def test_per_source_counts(self):
        space, sources = quadratic_sources()
        cfg = small_config(space, sources, n_init=[4, 2])
        state = _RunState(cfg, 2)
        initialize(state, None, active_source_ids=(1, 2))
        assert [r.source for r in state.rows] == [1, 1, 1, 1, 2, 2]
        assert state.datasets[0].n == 4 and state.datasets[1].n == 2
        # independent designs per source
        x1 = {r.x_raw for r in state.rows if r.source == 1}
        x2 = {r.x_raw for r in state.rows if r.source == 2}
        assert not x1 & x2

    def test_per_source_count_validation(self):
        space, sources = quadratic_sources()
        with pytest.raises(ValueError, match="per source"):
            small_config(space, sources, n_init=[3])
        with pytest.raises(ValueError, match=">= 1"):
            small_config(space, sources, n_init=[3, 0])

    def test_failure_names_source(self):
        from misobo import InitializationError

        def boom(x):
            raise SourceEvaluationError("nope")

        space, sources = quadratic_sources()
        bad = AnalyticSource(2, 1.0, lambda x: 0.0)
        bad.evaluate = boom
        cfg = small_config(space, (sources[0], bad))
        state = _RunState(cfg, 2)
        with pytest.raises(InitializationError, match="source 2"):
            initialize(state, None, active_source_ids=(1, 2))


class TestLoopGuards:
    def test_zero_budget_means_no_iterations(self):
        space, sources = quadratic_sources()
        cfg = small_config(space, sources, max_iterations=None, max_cost=0.0)
        with pytest.raises(ValueError):
            # max_cost = 0 cannot pass validation as "budget > 0"; emulate
            # via explicit loop guard instead
            LoopConfig(space=space, sources=sources, max_iterations=None, max_cost=None)
        trace = run_miso_agp(small_config(space, sources, max_iterations=None,
                                          max_cost=0.0))
        assert all(r.iteration == 0 for r in trace.rows)
        assert len(trace.rows) == 6

    def test_single_iteration(self):
        space, sources = quadratic_sources()
        trace = run_miso_agp(small_config(space, sources, max_iterations=1))
        loop_rows = [r for r in trace.rows if r.iteration > 0]
        assert len(loop_rows) == 1

    def test_cost_budget_stops_loop(self):
        space, sources = quadratic_sources(costs=(4.0, 1.0))
        cfg = small_config(space, sources, max_iterations=50, max_cost=6.0)
        trace = run_miso_agp(cfg)
        loop_rows = [r for r in trace.rows if r.iteration > 0]
        spent = sum(sources[r.source - 1].cost for r in loop_rows)
        # stop at the first n where post-init nominal cost >= 6
        assert spent >= 6.0
        assert spent - sources[loop_rows[-1].source - 1].cost < 6.0

    def test_cost_accounting_exact(self):
        space, sources = quadratic_sources()
        trace = run_miso_agp(small_config(space, sources, max_iterations=4))
        expected = 0.0
        for row in trace.rows:
            expected += sources[row.source - 1].cost
            assert row.nominal_cost_cum == pytest.approx(expected, abs=1e-12)
        # analytic sources report nominal as the actual cost
        assert trace.rows[-1].actual_cost_cum == trace.rows[-1].nominal_cost_cum

    def test_trace_completeness_and_monotonicity(self):
        space, sources = quadratic_sources()
        trace = run_miso_agp(small_config(space, sources, max_iterations=5))
        loop_rows = [r for r in trace.rows if r.iteration > 0]
        assert [r.iteration for r in loop_rows] == list(range(1, 6))
        bests = [r.best_seen for r in trace.rows]
        assert all(b2 <= b1 for b1, b2 in zip(bests, bests[1:]))
        costs = [r.nominal_cost_cum for r in trace.rows]
        assert all(c2 >= c1 for c1, c2 in zip(costs, costs[1:]))


class TestVanilla:
    def test_runs_and_improves_on_quadratic(self):
        space, sources = quadratic_sources()
        cfg = small_config(space, sources[:1], max_iterations=10, seed=3)
        trace = run_vanilla_bo(cfg)
        assert trace.final_source1_y < trace.rows[2].best_seen + 1e-12
        assert all(r.source == 1 for r in trace.rows)

    def test_partial_budget_trace_well_defined(self):
        space, sources = quadratic_sources()
        cfg = small_config(space, sources[:1], max_iterations=None, max_cost=25.0)
        trace = run_vanilla_bo(cfg)
        assert np.isfinite(trace.rows[-1].best_seen)


class TestSingleSourceReduction:
    def test_query_sequences_identical(self):
        # S = 1 with unit cost and a never-firing delta: the multi-source
        # proposer must replay the plain GP-LCB sequence bit for bit
        space, sources = quadratic_sources(costs=(1.0,) + (0.5,))
        single = (sources[0],)
        kwargs = dict(n_init=3, max_iterations=6, mle_restarts=3, n_starts=6,
                      acq_maxiter=60, seed=11, delta=1e-30)
        miso = run_miso_agp(LoopConfig(space=space, sources=single, **kwargs))
        vanilla = run_vanilla_bo(LoopConfig(space=space, sources=single, **kwargs))
        m_rows = [r for r in miso.rows if r.iteration > 0]
        v_rows = [r for r in vanilla.rows if r.iteration > 0]
        assert len(m_rows) == len(v_rows) == 6
        for mr, vr in zip(m_rows, v_rows):
            assert not mr.corrected
            assert mr.source == vr.source == 1
            assert mr.x_raw == vr.x_raw  # exact float equality
            assert mr.y == vr.y


class TestSourceFailureAndResume:
    class FlakySource:
        kind = "analytic"

        def __init__(self, fail_at):
            self.source_id = 2
            self.cost = 1.0
            self.calls = 0
            self.fail_at = fail_at

        def evaluate(self, x):
            self.calls += 1
            if self.calls == self.fail_at:
                raise SourceEvaluationError("flaky source died")
            return float(np.sum((np.asarray(x) - 0.6) ** 2)) + 0.05, 0.0

    def test_abort_preserves_rows_and_resume_continues(self):
        space, sources = quadratic_sources()
        flaky = self.FlakySource(fail_at=7)
        cfg = small_config(space, (sources[0], flaky), max_iterations=8, seed=5)
        sunk = []
        with pytest.raises(RunAbortedError) as err:
            run_miso_agp(cfg, trace_sink=sunk.append)
        assert err.value.completed_iterations == len([r for r in sunk if r.iteration > 0])
        assert len(sunk) >= 6  # at least the initialization persisted

        # resume from the persisted rows with a healthy source
        healed = self.FlakySource(fail_at=10**9)
        cfg2 = small_config(space, (sources[0], healed), max_iterations=8, seed=5)
        more = []
        trace = run_miso_agp(cfg2, trace_sink=more.append, resume_from=sunk)
        assert trace.rows[:len(sunk)] == sunk
        loop_rows = [r for r in trace.rows if r.iteration > 0]
        assert len(loop_rows) == 8
        assert all(r.iteration > sunk[-1].iteration for r in more)
