"""Teachers that emit per-sample class-probability vectors.

The built-in teacher is a bagged forest whose trees come from the same
induction kernel as the student trees (hard one-hot labels, bootstrap
rows, per-node feature subsampling, no pruning). Its probability for a
sample is the mean over trees of the reached leaf's class proportions.

Probabilities produced elsewhere (boosted ensembles, neural nets, ...)
enter through a CSV table ``index,p_0,...,p_{K-1}``; raw scores can be
softened with a temperature on import.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .errors import ConfigError, DataError
from .labels import check_simplex, one_hot_matrix, renormalize, soften_logits
from .tree import (
    TreeConfig,
    TreeNode,
    grow_tree,
    predict_logits_matrix,
    tree_from_nodes,
    tree_to_nodes,
)
from .util import atomic_write_text, derive_seed, map_jobs, pretty_json, sha256_arrays

BUILTIN_RANDOM_FOREST = "builtin_random_forest"
EXTERNAL_FILE = "external_file"


@dataclass(frozen=True)
class TeacherSpec:
    """How to obtain soft labels: fit the built-in forest, or read a file."""

    kind: str = BUILTIN_RANDOM_FOREST
    n_trees: int = 100
    min_leaf: int = 5
    features_per_split: int | None = None  # None: floor(sqrt(D)), at least 1
    seed: int = 0
    file_path: str | None = None
    bootstrap: bool = True
    temperature: float | None = None  # only for external raw-score files

    def validate(self) -> None:
        if self.kind not in (BUILTIN_RANDOM_FOREST, EXTERNAL_FILE):
            raise ConfigError(f"unknown teacher kind {self.kind!r}")
        if self.n_trees < 1:
            raise ConfigError(f"n_trees must be >= 1, got {self.n_trees}")
        if self.min_leaf < 1:
            raise ConfigError(f"min_leaf must be >= 1, got {self.min_leaf}")
        if self.features_per_split is not None and self.features_per_split < 1:
            raise ConfigError("features_per_split must be >= 1 when given")
        if self.kind == EXTERNAL_FILE and not self.file_path:
            raise ConfigError("external teacher needs file_path")

    def resolved_features_per_split(self, n_features: int) -> int:
        if self.features_per_split is not None:
            return min(self.features_per_split, n_features)
        return max(1, int(np.sqrt(n_features)))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "n_trees": self.n_trees,
            "min_leaf": self.min_leaf,
            "features_per_split": self.features_per_split,
            "seed": self.seed,
            "file_path": self.file_path,
            "bootstrap": self.bootstrap,
            "temperature": self.temperature,
        }


class SoftLabelTable:
    """Per-sample probability vectors keyed by row index.

    Rows are stored sorted by index; every vector is validated onto the
    simplex at construction. ``to_dense(n)`` requires exact coverage of
    ``0..n-1`` and is what training consumes.
    """

    def __init__(self, indices, probs, n_classes: int, validate: bool = True):
        indices = np.ascontiguousarray(indices, dtype=np.int64)
        probs = np.ascontiguousarray(probs, dtype=np.float64)
        if probs.ndim != 2 or probs.shape[1] != n_classes:
            raise DataError(f"probability rows must have {n_classes} columns")
        if len(indices) != len(probs):
            raise DataError("index/probability row count mismatch")
        if len(indices) and len(np.unique(indices)) != len(indices):
            raise DataError("duplicate sample index in soft-label table")
        if len(indices) and indices.min() < 0:
            raise DataError("negative sample index in soft-label table")
        order = np.argsort(indices)
        self.indices = indices[order]
        self.probs = probs[order]
        self.n_classes = n_classes
        if validate:
            for i, row in zip(self.indices, self.probs):
                try:
                    check_simplex(row)
                except ValueError as exc:
                    raise DataError(f"sample {int(i)}: {exc}") from None
        self.indices.setflags(write=False)
        self.probs.setflags(write=False)

    def __len__(self) -> int:
        return len(self.indices)

    def __contains__(self, index: int) -> bool:
        pos = np.searchsorted(self.indices, index)
        return pos < len(self.indices) and self.indices[pos] == index

    def get(self, index: int) -> np.ndarray:
        pos = np.searchsorted(self.indices, index)
        if pos >= len(self.indices) or self.indices[pos] != index:
            raise KeyError(index)
        return self.probs[pos]

    @classmethod
    def from_dense(cls, probs: np.ndarray, validate: bool = True) -> "SoftLabelTable":
        probs = np.asarray(probs, dtype=np.float64)
        return cls(np.arange(len(probs)), probs, probs.shape[1], validate=validate)

    def to_dense(self, n: int) -> np.ndarray:
        if len(self) != n or (n and (self.indices[0] != 0 or self.indices[-1] != n - 1)):
            missing = sorted(set(range(n)) - set(self.indices.tolist()))[:5]
            raise DataError(
                f"soft labels must cover all {n} rows exactly"
                + (f"; first missing: {missing}" if missing else "")
            )
        return self.probs

    def take(self, rows) -> "SoftLabelTable":
        """Re-indexed table for a row-subset dataset built with the same ``rows``."""
        rows = np.asarray(rows, dtype=np.int64)
        pos = np.searchsorted(self.indices, rows)
        if (pos >= len(self.indices)).any() or (self.indices[np.minimum(pos, len(self.indices) - 1)] != rows).any():
            raise DataError("take() requested rows missing from the table")
        return SoftLabelTable(np.arange(len(rows)), self.probs[pos], self.n_classes,
                              validate=False)

    def max_components(self) -> np.ndarray:
        """Largest probability per row; low values mean softer labels."""
        return self.probs.max(axis=1)

    def save_csv(self, path: str) -> None:
        header = "index," + ",".join(f"p_{k}" for k in range(self.n_classes))
        lines = [header]
        for i, row in zip(self.indices, self.probs):
            lines.append(f"{int(i)}," + ",".join(repr(float(v)) for v in row))
        atomic_write_text(path, "\n".join(lines) + "\n")

    @classmethod
    def load_csv(cls, path: str) -> "SoftLabelTable":
        indices, rows, n_classes = _read_label_csv(path)
        probs = np.array([renormalize_or_raise(r, i) for i, r in zip(indices, rows)])
        return cls(np.asarray(indices), probs, n_classes)


def renormalize_or_raise(row, index):
    try:
        return renormalize(np.asarray(row, dtype=np.float64))
    except ValueError as exc:
        raise DataError(f"sample {index}: {exc}") from None


def _read_label_csv(path: str):
    if not os.path.exists(path):
        raise DataError(f"file not found: {path}")
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError("no data rows") from None
        if len(header) < 3 or header[0] != "index":
            raise DataError("expected header index,p_0,...,p_{K-1}")
        n_classes = len(header) - 1
        indices, rows = [], []
        for r, row in enumerate(reader):
            if not row:
                continue
            if len(row) != n_classes + 1:
                raise DataError(f"row {r + 1}: expected {n_classes + 1} cells, got {len(row)}")
            try:
                indices.append(int(row[0]))
                rows.append([float(c) for c in row[1:]])
            except ValueError:
                raise DataError(f"row {r + 1}: unparseable cell") from None
    if not rows:
        raise DataError("no data rows")
    return indices, rows, n_classes


def load_external_soft_labels(path: str, ds: Dataset, temperature: float | None = None) -> SoftLabelTable:
    """Import a probability (or raw-score) table produced by an outside teacher.

    With ``temperature`` the rows are treated as raw scores and softened
    through ``softmax(row / temperature)``; otherwise they must already be
    probabilities up to file rounding and are renormalized.
    """
    indices, rows, n_classes = _read_label_csv(path)
    if n_classes != ds.n_classes:
        raise DataError(f"file has {n_classes} classes, dataset has {ds.n_classes}")
    bad = [i for i in indices if not 0 <= i < ds.n]
    if bad:
        raise DataError(f"sample index {bad[0]} outside [0, {ds.n})")
    if temperature is not None:
        probs = np.array([soften_logits(r, temperature) for r in rows])
    else:
        probs = np.array([renormalize_or_raise(r, i) for i, r in zip(indices, rows)])
    return SoftLabelTable(np.asarray(indices), probs, n_classes)


class RandomForest:
    """Bagged hard-label trees; probabilities are averaged leaf proportions.

    Each tree's bootstrap rows and per-node feature draws come from a
    generator seeded by (spec.seed, tree index), so refits are identical
    whatever the worker scheduling.
    """

    def __init__(self, spec: TeacherSpec):
        spec.validate()
        if spec.kind != BUILTIN_RANDOM_FOREST:
            raise ConfigError(f"cannot fit a {spec.kind!r} teacher")
        self.spec = spec
        self.trees_: list[TreeNode] = []
        self.n_classes_: int | None = None
        self.n_features_: int | None = None
        self.train_fingerprint_: str | None = None

    def fit(self, ds: Dataset, n_jobs: int = 1) -> "RandomForest":
        if ds.n == 0:
            raise DataError("cannot fit on an empty dataset")
        self.n_classes_ = ds.n_classes
        self.n_features_ = ds.n_features
        self.train_fingerprint_ = sha256_arrays(ds.features, ds.labels)
        hard = one_hot_matrix(ds.labels, ds.n_classes)
        fps = self.spec.resolved_features_per_split(ds.n_features)
        chunks = _tree_index_chunks(self.spec.n_trees, n_jobs)
        tasks = [
            (ds.features, hard, ds.labels, self.spec.min_leaf, fps,
             self.spec.seed, self.spec.bootstrap, t0, t1)
            for t0, t1 in chunks
        ]
        results = map_jobs(_fit_tree_chunk, tasks, n_jobs)
        self.trees_ = [tree for chunk in results for tree in chunk]
        return self

    def _require_fitted(self):
        if not self.trees_:
            raise DataError("forest is not fitted")

    def predict_proba_matrix(self, X) -> np.ndarray:
        self._require_fitted()
        X = np.asarray(X, dtype=np.float64)
        if X.shape[1] != self.n_features_:
            raise DataError(f"expected {self.n_features_} features, got {X.shape[1]}")
        acc = np.zeros((len(X), self.n_classes_), dtype=np.float64)
        for tree in self.trees_:
            acc += predict_logits_matrix(tree, X)
        return acc / len(self.trees_)

    def predict_proba(self, x) -> np.ndarray:
        return self.predict_proba_matrix(np.asarray(x, dtype=np.float64)[None, :])[0]

    def predict_matrix(self, X) -> np.ndarray:
        return np.argmax(self.predict_proba_matrix(X), axis=1)

    def score_table(self, ds: Dataset) -> SoftLabelTable:
        return SoftLabelTable.from_dense(self.predict_proba_matrix(ds.features),
                                         validate=False)

    def to_dict(self) -> dict:
        self._require_fitted()
        return {
            "format": "softtree.forest/1",
            "n_classes": self.n_classes_,
            "n_features": self.n_features_,
            "spec": self.spec.to_dict(),
            "trees": [tree_to_nodes(t) for t in self.trees_],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "RandomForest":
        if payload.get("format") != "softtree.forest/1":
            raise DataError("not a forest file")
        spec = TeacherSpec(**payload["spec"])
        forest = cls(spec)
        forest.n_classes_ = int(payload["n_classes"])
        forest.n_features_ = int(payload["n_features"])
        forest.trees_ = [tree_from_nodes(nodes) for nodes in payload["trees"]]
        return forest

    def save(self, path: str) -> None:
        atomic_write_text(path, pretty_json(self.to_dict()))

    @classmethod
    def load(cls, path: str) -> "RandomForest":
        if not os.path.exists(path):
            raise DataError(f"file not found: {path}")
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _tree_index_chunks(n_trees: int, n_jobs: int) -> list[tuple[int, int]]:
    n_chunks = min(max(1, n_jobs), n_trees)
    base, extra = divmod(n_trees, n_chunks)
    chunks, start = [], 0
    for i in range(n_chunks):
        size = base + (1 if i < extra else 0)
        chunks.append((start, start + size))
        start += size
    return chunks


def _fit_tree_chunk(args) -> list[TreeNode]:
    features, hard, labels, min_leaf, fps, seed, bootstrap, t0, t1 = args
    cfg = TreeConfig(min_leaf=min_leaf, alpha=1.0, criterion="gini")
    n = len(features)
    out = []
    for t in range(t0, t1):
        rng = np.random.default_rng(derive_seed(seed, "tree", t))
        rows = rng.integers(0, n, size=n) if bootstrap else np.arange(n)
        out.append(grow_tree(features[rows], hard[rows], labels[rows], cfg,
                             rng=rng, features_per_split=fps))
    return out


def fit_random_forest(ds: Dataset, spec: TeacherSpec, n_jobs: int = 1) -> RandomForest:
    return RandomForest(spec).fit(ds, n_jobs=n_jobs)
