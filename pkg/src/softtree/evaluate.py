"""Experiment harness: repeated runs, alpha grid search, size/accuracy reporting.

Each run draws a fresh train/test split, distills soft labels on the
training part only, fits the hard-label baseline tree and one soft-trained
tree per grid alpha, picks the winning alpha, and records accuracy, node
and rule counts, and the node compression rate (soft-tree nodes divided by
baseline nodes). Everything is driven by a single seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .dataset import Dataset, split_indices
from .distill import DistillConfig, jackknife_distill
from .errors import ConfigError
from .teacher import SoftLabelTable, load_external_soft_labels
from .tree import TreeConfig, count_nodes, count_rules, fit, predict_matrix
from .util import atomic_write_text, derive_seed, map_jobs

DEFAULT_ALPHA_GRID = tuple(round(0.1 * k, 1) for k in range(11))
SUGGESTED_DEFAULT_ALPHA = 0.2

VALIDATION = "validation"
TEST_ORACLE = "test_oracle"


@dataclass(frozen=True)
class ExperimentConfig:
    distill: DistillConfig = field(default_factory=DistillConfig)
    tree: TreeConfig = field(default_factory=TreeConfig)
    alpha_grid: tuple = DEFAULT_ALPHA_GRID
    n_runs: int = 10
    test_fraction: float = 0.3
    validation_fraction: float = 0.2
    alpha_selection: str = VALIDATION
    seed: int = 0
    external_soft_labels: str | None = None
    external_temperature: float | None = None

    def validate(self) -> None:
        if self.n_runs < 1:
            raise ConfigError(f"n_runs must be >= 1, got {self.n_runs}")
        if not self.alpha_grid:
            raise ConfigError("alpha_grid must be nonempty")
        for a in self.alpha_grid:
            if not 0.0 <= a <= 1.0:
                raise ConfigError(f"alpha grid value {a} outside [0, 1]")
        if self.alpha_selection not in (VALIDATION, TEST_ORACLE):
            raise ConfigError(
                f"alpha_selection must be {VALIDATION!r} or {TEST_ORACLE!r}"
            )
        if not 0.0 < self.validation_fraction < 1.0:
            raise ConfigError("validation_fraction must be in (0, 1)")
        self.tree.validate()
        if self.external_soft_labels is None:
            self.distill.validate()


@dataclass
class RunResult:
    run: int
    seed: int
    best_alpha: float
    baseline_accuracy: float
    soft_accuracy: float
    baseline_nodes: int
    soft_nodes: int
    baseline_rules: int
    soft_rules: int
    compression_rate: float
    rule_ratio: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class AlphaPoint:
    run: int
    alpha: float
    accuracy: float
    nodes: int
    rules: int
    compression_rate: float

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["is_suggested_default"] = self.alpha == SUGGESTED_DEFAULT_ALPHA
        return d


MEAN_FIELDS = (
    "best_alpha", "baseline_accuracy", "soft_accuracy", "baseline_nodes",
    "soft_nodes", "baseline_rules", "soft_rules", "compression_rate", "rule_ratio",
)


@dataclass
class ExperimentReport:
    alpha_selection: str
    runs: list[RunResult]
    curves: list[AlphaPoint]
    suggested_default_alpha: float = SUGGESTED_DEFAULT_ALPHA

    def means(self) -> dict:
        return {
            name: float(np.mean([getattr(r, name) for r in self.runs]))
            for name in MEAN_FIELDS
        }

    def curve_means(self) -> list[dict]:
        alphas = sorted({p.alpha for p in self.curves})
        out = []
        for a in alphas:
            points = [p for p in self.curves if p.alpha == a]
            out.append({
                "alpha": a,
                "accuracy": float(np.mean([p.accuracy for p in points])),
                "nodes": float(np.mean([p.nodes for p in points])),
                "rules": float(np.mean([p.rules for p in points])),
                "compression_rate": float(np.mean([p.compression_rate for p in points])),
                "is_suggested_default": a == self.suggested_default_alpha,
            })
        return out

    def to_dict(self) -> dict:
        return {
            "alpha_selection": self.alpha_selection,
            "suggested_default_alpha": self.suggested_default_alpha,
            "runs": [r.to_dict() for r in self.runs],
            "mean": self.means(),
            "curves": [p.to_dict() for p in self.curves],
            "curve_means": self.curve_means(),
        }

    def save_curves_csv(self, path: str) -> None:
        header = "run,alpha,accuracy,nodes,rules,compression_rate,is_suggested_default"
        lines = [header]
        for p in self.curves:
            d = p.to_dict()
            lines.append(
                f"{d['run']},{d['alpha']!r},{d['accuracy']!r},{d['nodes']},"
                f"{d['rules']},{d['compression_rate']!r},{int(d['is_suggested_default'])}"
            )
        for m in self.curve_means():
            lines.append(
                f"mean,{m['alpha']!r},{m['accuracy']!r},{m['nodes']!r},"
                f"{m['rules']!r},{m['compression_rate']!r},{int(m['is_suggested_default'])}"
            )
        atomic_write_text(path, "\n".join(lines) + "\n")

    def save_runs_csv(self, path: str) -> None:
        names = ("run", "seed") + MEAN_FIELDS
        lines = [",".join(names)]
        for r in self.runs:
            d = r.to_dict()
            lines.append(",".join(repr(d[k]) if isinstance(d[k], float) else str(d[k])
                                  for k in names))
        atomic_write_text(path, "\n".join(lines) + "\n")


def accuracy(predictions, truth) -> float:
    """Fraction of exact matches between two equal-length class-index vectors."""
    predictions = np.asarray(predictions)
    truth = np.asarray(truth)
    if predictions.shape != truth.shape or predictions.ndim != 1:
        raise ValueError("predictions and truth must be equal-length vectors")
    if len(predictions) == 0:
        raise ValueError("cannot score zero predictions")
    return float(np.mean(predictions == truth))


def _fit_cell(args):
    """Fit one (dataset rows, soft labels, alpha) cell and score it."""
    features, labels, n_classes, soft_probs, tree_cfg_kwargs, alpha, eval_X, eval_y = args
    ds = Dataset(features=features, labels=labels,
                 feature_names=[f"f{j}" for j in range(features.shape[1])],
                 n_classes=n_classes)
    table = SoftLabelTable.from_dense(soft_probs, validate=False)
    cfg = TreeConfig(**{**tree_cfg_kwargs, "alpha": alpha})
    tree = fit(ds, table, cfg)
    acc = accuracy(predict_matrix(tree, eval_X), eval_y)
    return alpha, acc, count_nodes(tree), count_rules(tree)


def run_experiment(ds: Dataset, cfg: ExperimentConfig, n_jobs: int = 1,
                   audit: list | None = None) -> ExperimentReport:
    """Run the full protocol and gather per-run metrics plus per-alpha curves.

    With ``alpha_selection="validation"`` the winning alpha comes from a
    validation split carved out of each run's training part; with
    ``"test_oracle"`` it is whichever grid alpha scores best on the test
    part (an optimistic reading kept for comparison). Ties go to the
    earliest grid entry. When ``audit`` is a list, every event is recorded
    with the original row indices it touched.
    """
    cfg.validate()
    external = None
    if cfg.external_soft_labels is not None:
        external = load_external_soft_labels(cfg.external_soft_labels, ds,
                                             cfg.external_temperature)

    tree_kwargs = {
        "min_leaf": cfg.tree.min_leaf,
        "criterion": cfg.tree.criterion,
        "max_depth": cfg.tree.max_depth,
        "seed": cfg.tree.seed,
    }
    runs: list[RunResult] = []
    curves: list[AlphaPoint] = []

    for r in range(cfg.n_runs):
        run_seed = derive_seed(cfg.seed, "run", r)
        train_idx, test_idx = split_indices(ds.n, cfg.test_fraction, run_seed)
        train = ds.take(train_idx)
        test_X = ds.features[test_idx]
        test_y = ds.labels[test_idx]

        if external is not None:
            table = external.take(train_idx)
        else:
            dcfg = replace(cfg.distill, seed=derive_seed(run_seed, "distill"))
            table = jackknife_distill(train, dcfg, n_jobs=n_jobs)
        if audit is not None:
            audit.append({"event": "distill", "run": r, "rows": train_idx})

        grid = [float(a) for a in cfg.alpha_grid]
        full_tasks = [
            (train.features, train.labels, train.n_classes, table.probs,
             tree_kwargs, a, test_X, test_y)
            for a in grid
        ]
        baseline_task = (train.features, train.labels, train.n_classes, table.probs,
                         tree_kwargs, 1.0, test_X, test_y)

        select_tasks = []
        if cfg.alpha_selection == VALIDATION:
            sub_rel, val_rel = split_indices(train.n, cfg.validation_fraction,
                                             derive_seed(run_seed, "validation"))
            sub_table = table.take(sub_rel)
            val_X = train.features[val_rel]
            val_y = train.labels[val_rel]
            select_tasks = [
                (train.features[sub_rel], train.labels[sub_rel], train.n_classes,
                 sub_table.probs, tree_kwargs, a, val_X, val_y)
                for a in grid
            ]
            if audit is not None:
                audit.append({"event": "alpha_fit", "run": r, "rows": train_idx[sub_rel]})
                audit.append({"event": "alpha_select", "run": r, "rows": train_idx[val_rel]})

        results = map_jobs(_fit_cell, full_tasks + [baseline_task] + select_tasks, n_jobs)
        full_results = results[:len(grid)]
        _, baseline_acc, baseline_nodes, baseline_rules = results[len(grid)]
        select_results = results[len(grid) + 1:]
        if audit is not None:
            audit.append({"event": "final_fit", "run": r, "rows": train_idx})
            audit.append({"event": "test_eval", "run": r, "rows": test_idx})

        test_accs = [res[1] for res in full_results]
        if cfg.alpha_selection == VALIDATION:
            val_accs = [res[1] for res in select_results]
            best_pos = int(np.argmax(val_accs))
        else:
            best_pos = int(np.argmax(test_accs))
        best_alpha = grid[best_pos]
        _, soft_acc, soft_nodes, soft_rules = full_results[best_pos]

        runs.append(RunResult(
            run=r,
            seed=run_seed,
            best_alpha=best_alpha,
            baseline_accuracy=baseline_acc,
            soft_accuracy=soft_acc,
            baseline_nodes=baseline_nodes,
            soft_nodes=soft_nodes,
            baseline_rules=baseline_rules,
            soft_rules=soft_rules,
            compression_rate=soft_nodes / baseline_nodes,
            rule_ratio=baseline_rules / soft_rules,
        ))
        for a, acc, nodes, rules in full_results:
            curves.append(AlphaPoint(
                run=r, alpha=a, accuracy=acc, nodes=nodes, rules=rules,
                compression_rate=nodes / baseline_nodes,
            ))

    return ExperimentReport(alpha_selection=cfg.alpha_selection, runs=runs, curves=curves)


def alpha_curves(ds: Dataset, cfg: ExperimentConfig, n_jobs: int = 1) -> ExperimentReport:
    """Same protocol, kept for callers that only want the per-alpha tables."""
    return run_experiment(ds, cfg, n_jobs=n_jobs)
