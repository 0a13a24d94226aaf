"""Soft-label generation by repeated held-out-fold teaching.

Training a teacher on all rows and scoring those same rows yields
near-one-hot, overconfident probabilities. The jackknife variant instead
partitions the rows into M folds and scores each fold with a teacher
fitted on the other M-1, so no sample is ever scored by a teacher that
saw it; the whole procedure is repeated with fresh partitions and the
resulting tables are averaged.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .dataset import Dataset, partition_folds
from .errors import ConfigError, DataError
from .teacher import (
    BUILTIN_RANDOM_FOREST,
    RandomForest,
    SoftLabelTable,
    TeacherSpec,
)
from .util import derive_seed, map_jobs, sha256_arrays


@dataclass(frozen=True)
class DistillConfig:
    folds: int = 5
    repeats: int = 5
    teacher: TeacherSpec = field(default_factory=TeacherSpec)
    seed: int = 0

    def validate(self) -> None:
        if self.folds < 2:
            raise ConfigError(f"need at least 2 folds, got {self.folds}")
        if self.repeats < 1:
            raise ConfigError(f"need at least 1 repeat, got {self.repeats}")
        self.teacher.validate()
        if self.teacher.kind != BUILTIN_RANDOM_FOREST:
            raise ConfigError("held-out distillation needs a fittable teacher")


def partition_seed(cfg: DistillConfig, repeat: int) -> int:
    """Fold-partition seed for one repeat, derived from the single run seed."""
    return derive_seed(cfg.seed, "partition", repeat)


def teacher_seed(cfg: DistillConfig, repeat: int, fold: int) -> int:
    return derive_seed(cfg.seed, "teacher", repeat, fold)


def _distill_cell(args):
    """Fit a teacher on the fold complement and score the held-out fold."""
    (features, labels, n_classes, feature_names, train_rows, scored_rows,
     spec_dict, n_jobs) = args
    sub = Dataset(
        features=features[train_rows],
        labels=labels[train_rows],
        feature_names=feature_names,
        n_classes=n_classes,
    )
    forest = RandomForest(TeacherSpec(**spec_dict)).fit(sub, n_jobs=n_jobs)
    probs = forest.predict_proba_matrix(features[scored_rows])
    return probs, forest.train_fingerprint_


def jackknife_distill(ds: Dataset, cfg: DistillConfig, n_jobs: int = 1,
                      trace: list | None = None) -> SoftLabelTable:
    """Held-out soft labels for every row of ``ds``, averaged over repeats.

    Per repeat, the rows are partitioned into ``cfg.folds`` folds with a
    seed derived from (cfg.seed, repeat); each fold is scored by a teacher
    fitted on its complement with a seed derived from (cfg.seed, repeat,
    fold). Cells run independently (optionally in parallel) and merge by
    sample index, so the output is the same whatever the scheduling.

    When ``trace`` is a list, one record per (repeat, fold) cell is
    appended with the training/scored row sets and the teacher's training
    fingerprint, for leakage audits.
    """
    cfg.validate()
    if cfg.folds > ds.n:
        raise ConfigError(f"cannot make {cfg.folds} folds from {ds.n} rows")

    cells = []
    for r in range(cfg.repeats):
        part = partition_folds(ds, cfg.folds, partition_seed(cfg, r))
        for i in range(cfg.folds):
            train_rows = part.complement(i)
            scored_rows = part.folds[i]
            if len(np.unique(ds.labels[train_rows])) < 2:
                raise DataError(
                    f"repeat {r}, fold {i}: complement has a single class; "
                    f"use fewer folds or more data"
                )
            spec = replace(cfg.teacher, seed=teacher_seed(cfg, r, i))
            cells.append((r, i, train_rows, scored_rows, spec))

    tasks = [
        (ds.features, ds.labels, ds.n_classes, ds.feature_names,
         train_rows, scored_rows, spec.to_dict(), 1)  # teachers sequential inside cells
        for (_, _, train_rows, scored_rows, spec) in cells
    ]
    results = map_jobs(_distill_cell, tasks, n_jobs)

    acc = np.zeros((ds.n, ds.n_classes), dtype=np.float64)
    for (r, i, train_rows, scored_rows, _), (probs, fingerprint) in zip(cells, results):
        acc[scored_rows] += probs
        if trace is not None:
            trace.append({
                "repeat": r,
                "fold": i,
                "train_rows": train_rows,
                "scored_rows": scored_rows,
                "teacher_fingerprint": fingerprint,
                "train_fingerprint": sha256_arrays(ds.features[train_rows],
                                                   ds.labels[train_rows]),
            })
    return SoftLabelTable.from_dense(acc / cfg.repeats)


def direct_distill(ds: Dataset, teacher: TeacherSpec, n_jobs: int = 1) -> SoftLabelTable:
    """Overfit baseline: one teacher fitted on all rows scores all rows."""
    teacher.validate()
    if teacher.kind != BUILTIN_RANDOM_FOREST:
        raise ConfigError("direct distillation needs a fittable teacher")
    forest = RandomForest(teacher).fit(ds, n_jobs=n_jobs)
    return forest.score_table(ds)
