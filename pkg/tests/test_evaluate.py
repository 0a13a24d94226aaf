import json

import numpy as np
import pytest

from softtree import (
    ConfigError,
    DistillConfig,
    ExperimentConfig,
    TeacherSpec,
    TreeConfig,
    accuracy,
    direct_distill,
    run_experiment,
)
from softtree.evaluate import DEFAULT_ALPHA_GRID, SUGGESTED_DEFAULT_ALPHA

FAST = ExperimentConfig(
    distill=DistillConfig(folds=4, repeats=2, teacher=TeacherSpec(n_trees=15)),
    tree=TreeConfig(min_leaf=5),
    alpha_grid=(0.0, 0.2, 1.0),
    n_runs=2,
    test_fraction=0.3,
    seed=11,
)


class TestAccuracy:
    def test_identical(self):
        assert accuracy([1, 2, 3], [1, 2, 3]) == 1.0

    def test_disjoint(self):
        assert accuracy([1, 1], [0, 0]) == 0.0

    def test_three_of_four(self):
        assert accuracy([0, 1, 1, 0], [0, 1, 1, 1]) == 0.75

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            accuracy([1], [1, 2])

    def test_empty(self):
        with pytest.raises(ValueError):
            accuracy([], [])


class TestConfigValidation:
    def test_default_grid(self):
        assert DEFAULT_ALPHA_GRID == (0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)

    def test_bad_values(self):
        from dataclasses import replace
        with pytest.raises(ConfigError):
            replace(FAST, n_runs=0).validate()
        with pytest.raises(ConfigError):
            replace(FAST, alpha_grid=(0.5, 1.2)).validate()
        with pytest.raises(ConfigError):
            replace(FAST, alpha_selection="guess").validate()


class TestRunExperiment:
    def test_alpha_one_grid_reduces_to_baseline(self, small_noisy):
        from dataclasses import replace
        cfg = replace(FAST, alpha_grid=(1.0,), n_runs=1)
        report = run_experiment(small_noisy, cfg)
        run = report.runs[0]
        assert run.best_alpha == 1.0
        assert run.soft_accuracy == run.baseline_accuracy
        assert run.soft_nodes == run.baseline_nodes
        assert run.soft_rules == run.baseline_rules
        assert run.compression_rate == 1.0
        assert run.rule_ratio == 1.0

    def test_deterministic_reports(self, small_noisy):
        a = run_experiment(small_noisy, FAST)
        b = run_experiment(small_noisy, FAST)
        assert a.to_dict() == b.to_dict()

    def test_jobs_do_not_change_report(self, small_noisy, jobs):
        serial = run_experiment(small_noisy, FAST, n_jobs=1)
        parallel = run_experiment(small_noisy, FAST, n_jobs=jobs)
        assert serial.to_dict() == parallel.to_dict()

    def test_means_are_arithmetic_means(self, small_noisy):
        report = run_experiment(small_noisy, FAST)
        means = report.means()
        for name in ("soft_accuracy", "baseline_nodes", "compression_rate", "best_alpha"):
            expected = float(np.mean([getattr(r, name) for r in report.runs]))
            assert means[name] == expected

    def test_curves_alpha_one_compression_is_exactly_one(self, small_noisy):
        report = run_experiment(small_noisy, FAST)
        ones = [p for p in report.curves if p.alpha == 1.0]
        assert len(ones) == FAST.n_runs
        assert all(p.compression_rate == 1.0 for p in ones)

    def test_suggested_default_flagged(self, small_noisy):
        report = run_experiment(small_noisy, FAST)
        assert report.suggested_default_alpha == SUGGESTED_DEFAULT_ALPHA == 0.2
        flagged = [p for p in report.to_dict()["curves"] if p["is_suggested_default"]]
        assert {p["alpha"] for p in flagged} == {0.2}

    def test_validation_mode_never_touches_test_rows(self, small_noisy):
        audit = []
        run_experiment(small_noisy, FAST, audit=audit)
        test_rows = {}
        for event in audit:
            if event["event"] == "test_eval":
                test_rows[event["run"]] = set(event["rows"].tolist())
        assert len(test_rows) == FAST.n_runs
        for event in audit:
            if event["event"] == "test_eval":
                continue
            rows = set(event["rows"].tolist())
            assert rows.isdisjoint(test_rows[event["run"]]), event["event"]

    def test_test_oracle_mode_picks_best_test_alpha(self, small_noisy):
        from dataclasses import replace
        cfg = replace(FAST, alpha_selection="test_oracle", n_runs=1)
        report = run_experiment(small_noisy, cfg)
        run = report.runs[0]
        best_curve = max(
            (p for p in report.curves), key=lambda p: (p.accuracy, -p.alpha)
        )
        assert run.soft_accuracy == max(p.accuracy for p in report.curves)
        assert run.best_alpha <= best_curve.alpha

    def test_external_soft_labels_path(self, small_noisy, tmp_path):
        from dataclasses import replace
        table = direct_distill(small_noisy, TeacherSpec(n_trees=10, seed=3))
        path = str(tmp_path / "ext.csv")
        table.save_csv(path)
        cfg = replace(FAST, external_soft_labels=path, n_runs=1)
        report = run_experiment(small_noisy, cfg)
        assert len(report.runs) == 1

    def test_report_serializes(self, small_noisy, tmp_path):
        report = run_experiment(small_noisy, FAST)
        payload = json.dumps(report.to_dict())
        assert json.loads(payload)["alpha_selection"] == "validation"
        curves_path = tmp_path / "curves.csv"
        runs_path = tmp_path / "runs.csv"
        report.save_curves_csv(str(curves_path))
        report.save_runs_csv(str(runs_path))
        header = curves_path.read_text().splitlines()[0]
        assert header == "run,alpha,accuracy,nodes,rules,compression_rate,is_suggested_default"
        assert len(runs_path.read_text().splitlines()) == 1 + FAST.n_runs
