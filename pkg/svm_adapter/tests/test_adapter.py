import sys

import numpy as np
import pytest

from svm_adapter import AdapterConfig, EvaluationError, SvmSourceEvaluator, load_dataset

# the core package's communicator drives the protocol-conformance checks
from misobo import ExternalConnection, SourceEvaluationError

FULL_RATIO = 12332 / 6688


def command(dataset, subsample="0.2", costs="320,1", seed="0", folds="10"):
    return [sys.executable, "-m", "svm_adapter", "--dataset", dataset,
            "--subsample", subsample, "--costs", costs, "--seed", seed,
            "--folds", folds]


class TestDatasetLoading:
    def test_features_scaled_to_unit_interval(self, small_csv):
        X, y, classes = load_dataset(small_csv)
        assert X.min() >= 0.0 and X.max() <= 1.0
        assert X.shape[1] == 10
        assert set(np.unique(y)) == {0, 1}
        assert classes == ("g", "h")

    def test_non_binary_rejected(self, tmp_path):
        path = tmp_path / "three.csv"
        path.write_text("0.1,a\n0.2,b\n0.3,c\n")
        with pytest.raises(ValueError, match="binary"):
            load_dataset(str(path))


class TestStratifiedSubsample:
    def test_class_ratio_within_one_percent_of_full_counts(self, magic_shaped_csv):
        evaluator = SvmSourceEvaluator(AdapterConfig(magic_shaped_csv, seed=5))
        n0, n1 = evaluator.subsample_class_counts()
        assert n0 + n1 == pytest.approx(0.05 * 19020, abs=2)
        assert n0 / n1 == pytest.approx(FULL_RATIO, rel=0.01)

    def test_subsample_fixed_across_queries(self, magic_shaped_csv):
        evaluator = SvmSourceEvaluator(AdapterConfig(magic_shaped_csv, seed=5))
        before = evaluator.subsample_fingerprint()
        y1, _ = evaluator.evaluate(2, [1.0, 0.1])
        mid = evaluator.subsample_fingerprint()
        y2, _ = evaluator.evaluate(2, [1.0, 0.1])
        assert before == mid == evaluator.subsample_fingerprint()
        assert y1 == y2

    def test_same_seed_same_subsample(self, magic_shaped_csv):
        a = SvmSourceEvaluator(AdapterConfig(magic_shaped_csv, seed=5))
        b = SvmSourceEvaluator(AdapterConfig(magic_shaped_csv, seed=5))
        assert a.subsample_fingerprint() == b.subsample_fingerprint()
        c = SvmSourceEvaluator(AdapterConfig(magic_shaped_csv, seed=6))
        assert a.subsample_fingerprint() != c.subsample_fingerprint()


class TestEvaluation:
    def test_error_rate_in_unit_interval_and_deterministic(self, small_csv):
        evaluator = SvmSourceEvaluator(AdapterConfig(small_csv, subsample_fraction=0.2))
        for source in (1, 2):
            y_a, cost_a = evaluator.evaluate(source, [1.0, 0.5])
            y_b, _ = evaluator.evaluate(source, [1.0, 0.5])
            assert 0.0 <= y_a <= 1.0
            assert y_a == y_b
            assert cost_a > 0.0

    def test_invalid_requests_rejected(self, small_csv):
        evaluator = SvmSourceEvaluator(AdapterConfig(small_csv, subsample_fraction=0.2))
        with pytest.raises(EvaluationError, match="unknown source"):
            evaluator.evaluate(3, [1.0, 0.1])
        with pytest.raises(EvaluationError, match="coordinates"):
            evaluator.evaluate(1, [1.0])
        with pytest.raises(EvaluationError, match="positive"):
            evaluator.evaluate(1, [-1.0, 0.1])

    def test_fold_timeout_becomes_error(self, small_csv):
        evaluator = SvmSourceEvaluator(
            AdapterConfig(small_csv, subsample_fraction=0.2, fold_timeout=1e-4))
        with pytest.raises(EvaluationError, match="limit"):
            evaluator.evaluate(1, [1.0, 0.5])

    def test_cost_ordering_full_vs_subsample(self, medium_csv):
        # order-of-magnitude check: the full-data source must cost at least
        # 50x the 5% source on a few moderate configurations
        evaluator = SvmSourceEvaluator(AdapterConfig(medium_csv, seed=1))
        rng = np.random.default_rng(11)
        for _ in range(3):
            c = float(10 ** rng.uniform(-0.3, 0.7))
            gamma = float(10 ** rng.uniform(-1.3, -0.3))
            _, t_full = evaluator.evaluate(1, [c, gamma])
            _, t_sub = evaluator.evaluate(2, [c, gamma])
            assert t_full >= 50.0 * t_sub, (c, gamma, t_full, t_sub)


class TestProtocolConformance:
    def test_handshake_and_five_round_trips(self, small_csv):
        with ExternalConnection(command(small_csv), timeout=600.0) as conn:
            info = conn.info
            assert info["name"] == "svm-csvc-cv"
            assert info["dims"] == 2
            assert [(s["id"], s["cost"]) for s in info["sources"]] == [
                (1, 320.0), (2, 1.0)]
            grid = [(0.1, 0.01), (1.0, 0.1), (10.0, 1.0), (5.0, 0.05), (0.5, 0.5)]
            for i, (c, gamma) in enumerate(grid):
                source = 1 + i % 2
                y, cost = conn.evaluate(source, [c, gamma])
                assert 0.0 <= y <= 1.0
                assert cost > 0.0

    def test_protocol_error_reply_keeps_serving(self, small_csv):
        with ExternalConnection(command(small_csv), timeout=600.0) as conn:
            with pytest.raises(SourceEvaluationError, match="unknown source"):
                conn.evaluate(7, [1.0, 1.0])
            y, _ = conn.evaluate(2, [1.0, 1.0])
            assert 0.0 <= y <= 1.0

    def test_costs_flag_round_trip(self, small_csv):
        with ExternalConnection(command(small_csv, costs="64,2"),
                                timeout=600.0) as conn:
            assert [s["cost"] for s in conn.info["sources"]] == [64.0, 2.0]


class TestOptimizerIntegration:
    def test_scaled_down_hpo_experiment_runs(self, small_csv, tmp_path):
        # the target workload's configuration shape (log-scaled C/gamma box,
        # nominal costs 320:1, shared initialization) at desk scale
        from misobo import parse_config, read_trace_rows, run_experiment

        raw = {
            "sources": {"external": {
                "command": command(small_csv, subsample="0.1"),
                "costs": [320.0, 1.0],
                "timeout_seconds": 600,
            }},
            "space": [
                {"name": "C", "lower": 1e-2, "upper": 1e2, "log10": True},
                {"name": "gamma", "lower": 1e-4, "upper": 1e4, "log10": True},
            ],
            "method": "miso_agp",
            "n_init": 2,
            "max_iterations": 2,
            "kernel": {"restarts": 2},
            "acquisition": {"n_starts": 4, "maxiter": 30},
            "n_runs": 1,
            "seed": 1,
            "output_dir": "unused",
        }
        out = run_experiment(parse_config(raw), out_dir=tmp_path)
        rows = read_trace_rows(out / "miso_agp_run001.csv")
        assert len(rows) == 2 * 2 + 2
        for r in rows:
            assert 0.0 <= r.y <= 1.0
            assert 1e-2 <= r.x_raw[0] <= 1e2
            assert 1e-4 <= r.x_raw[1] <= 1e4
