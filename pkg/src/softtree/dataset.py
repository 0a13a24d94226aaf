"""Tabular classification data: CSV loading, label encoding, splits, fold partitions.

Encoding rules are deterministic so every artifact downstream is
reproducible from (file, flags, seed) alone:

* class labels map to ``0..K-1`` by sorted distinct raw value,
* declared categorical columns map to integer codes by first appearance,
* everything else must parse as a number; missing cells are rejected.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError
from .util import atomic_write_text, pretty_json


@dataclass(frozen=True)
class Dataset:
    """Immutable feature matrix plus encoded class labels.

    ``features`` is (n, D) float64, ``labels`` is (n,) int64 with values in
    ``[0, n_classes)``. ``label_names[c]`` is the raw value the code ``c``
    was read from; ``categorical_codes`` records, per declared categorical
    column, the raw values in code order.
    """

    features: np.ndarray
    labels: np.ndarray
    feature_names: list[str]
    n_classes: int
    label_names: list[str] = field(default_factory=list)
    categorical_codes: dict[str, list[str]] = field(default_factory=dict)
    label_column: str = "label"

    def __post_init__(self):
        features = np.ascontiguousarray(self.features, dtype=np.float64)
        labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if features.ndim != 2:
            raise DataError("features must be a 2-d matrix")
        if labels.ndim != 1 or len(labels) != len(features):
            raise DataError("labels must be one class index per feature row")
        if len(features) == 0:
            raise DataError("no data rows")
        if not np.isfinite(features).all():
            raise DataError("features contain non-finite values")
        if self.n_classes < 2:
            raise DataError(f"need at least 2 classes, got {self.n_classes}")
        if labels.min() < 0 or labels.max() >= self.n_classes:
            raise DataError("label index outside [0, n_classes)")
        if len(self.feature_names) != features.shape[1]:
            raise DataError("feature_names length does not match feature count")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        if not self.label_names:
            object.__setattr__(self, "label_names", [str(c) for c in range(self.n_classes)])
        features.setflags(write=False)
        labels.setflags(write=False)

    @property
    def n(self) -> int:
        return len(self.features)

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def take(self, indices) -> "Dataset":
        """Row-subset view with identical metadata."""
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(
            features=self.features[idx],
            labels=self.labels[idx],
            feature_names=self.feature_names,
            n_classes=self.n_classes,
            label_names=self.label_names,
            categorical_codes=self.categorical_codes,
            label_column=self.label_column,
        )

    def metadata(self) -> dict:
        return {
            "n_rows": self.n,
            "n_features": self.n_features,
            "n_classes": self.n_classes,
            "feature_names": list(self.feature_names),
            "label_column": self.label_column,
            "label_names": list(self.label_names),
            "categorical_codes": {k: list(v) for k, v in self.categorical_codes.items()},
        }

    def save_metadata(self, path: str) -> None:
        atomic_write_text(path, pretty_json(self.metadata()))


@dataclass(frozen=True)
class FoldPartition:
    """Disjoint cover of ``[0, n)`` by near-equal index folds."""

    folds: list[np.ndarray]
    seed: int

    def __post_init__(self):
        folds = [np.ascontiguousarray(f, dtype=np.int64) for f in self.folds]
        object.__setattr__(self, "folds", folds)
        sizes = [len(f) for f in folds]
        if sizes and max(sizes) - min(sizes) > 1:
            raise DataError("fold sizes differ by more than 1")
        n = sum(sizes)
        merged = np.concatenate(folds) if folds else np.empty(0, dtype=np.int64)
        if len(np.unique(merged)) != n or (n and (merged.min() < 0 or merged.max() >= n)):
            raise DataError("folds are not a disjoint cover of the row range")

    @property
    def n_folds(self) -> int:
        return len(self.folds)

    def complement(self, i: int) -> np.ndarray:
        """All indices outside fold ``i``, ascending."""
        rest = [f for j, f in enumerate(self.folds) if j != i]
        return np.sort(np.concatenate(rest))


def load_csv(path: str, label_column: str, categorical_columns=None) -> Dataset:
    """Load a headered, comma-delimited UTF-8 file into a Dataset.

    Cells in ``categorical_columns`` are coded by first appearance; every
    other non-label cell must parse as a number. Raises DataError with the
    offending row/column on any malformed cell.
    """
    if not os.path.exists(path):
        raise DataError(f"file not found: {path}")
    categorical = list(categorical_columns or [])
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError("no data rows") from None
        rows = [r for r in reader if r]
    if not rows:
        raise DataError("no data rows")
    if label_column not in header:
        raise DataError(f"label column {label_column!r} not in header")
    unknown = [c for c in categorical if c not in header]
    if unknown:
        raise DataError(f"categorical column(s) not in header: {', '.join(unknown)}")
    label_pos = header.index(label_column)
    feature_names = [h for h in header if h != label_column]
    feature_pos = [i for i, h in enumerate(header) if h != label_column]
    cat_cols = set(categorical)

    code_maps: dict[str, dict[str, int]] = {c: {} for c in categorical}
    n, d = len(rows), len(feature_names)
    features = np.empty((n, d), dtype=np.float64)
    raw_labels = []
    for r, row in enumerate(rows):
        if len(row) != len(header):
            raise DataError(f"row {r + 1}: expected {len(header)} cells, got {len(row)}")
        raw_labels.append(row[label_pos])
        for j, pos in enumerate(feature_pos):
            cell = row[pos].strip()
            name = feature_names[j]
            if cell == "":
                raise DataError(f"row {r + 1}, column {name!r}: missing value")
            if name in cat_cols:
                codes = code_maps[name]
                if cell not in codes:
                    codes[cell] = len(codes)
                features[r, j] = codes[cell]
            else:
                try:
                    value = float(cell)
                except ValueError:
                    raise DataError(
                        f"row {r + 1}, column {name!r}: cannot parse {cell!r} as a number"
                    ) from None
                if not math.isfinite(value):
                    raise DataError(f"row {r + 1}, column {name!r}: non-finite value")
                features[r, j] = value

    label_names = sorted(set(raw_labels))
    if len(label_names) < 2:
        raise DataError(f"need at least 2 classes, found {len(label_names)}")
    label_code = {v: c for c, v in enumerate(label_names)}
    labels = np.array([label_code[v] for v in raw_labels], dtype=np.int64)

    categorical_codes = {
        c: [v for v, _ in sorted(code_maps[c].items(), key=lambda kv: kv[1])]
        for c in categorical
    }
    return Dataset(
        features=features,
        labels=labels,
        feature_names=feature_names,
        n_classes=len(label_names),
        label_names=label_names,
        categorical_codes=categorical_codes,
        label_column=label_column,
    )


def save_csv(ds: Dataset, path: str) -> None:
    """Write a Dataset back out in the load_csv format (encoded values).

    Labels are written as their raw names, categorical codes as their raw
    values, so the file round-trips through load_csv.
    """
    lines = [",".join(ds.feature_names + [ds.label_column])]
    cat_cols = {name: ds.categorical_codes[name] for name in ds.categorical_codes}
    for r in range(ds.n):
        cells = []
        for j, name in enumerate(ds.feature_names):
            v = ds.features[r, j]
            if name in cat_cols:
                cells.append(cat_cols[name][int(v)])
            else:
                cells.append(repr(float(v)))
        cells.append(ds.label_names[int(ds.labels[r])])
        lines.append(",".join(cells))
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_features_csv(path: str, metadata: dict) -> np.ndarray:
    """Encode a feature file with a previously trained dataset's metadata.

    Columns are matched by header name; the label column may be present
    (it is ignored) or absent. Categorical cells must be values seen at
    training time.
    """
    if not os.path.exists(path):
        raise DataError(f"file not found: {path}")
    feature_names = metadata["feature_names"]
    codes = {name: {v: c for c, v in enumerate(vals)}
             for name, vals in metadata.get("categorical_codes", {}).items()}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError("no data rows") from None
        rows = [r for r in reader if r]
    if not rows:
        raise DataError("no data rows")
    missing = [c for c in feature_names if c not in header]
    if missing:
        raise DataError(f"feature column(s) missing: {', '.join(missing)}")
    positions = [header.index(c) for c in feature_names]
    out = np.empty((len(rows), len(feature_names)), dtype=np.float64)
    for r, row in enumerate(rows):
        if len(row) != len(header):
            raise DataError(f"row {r + 1}: expected {len(header)} cells, got {len(row)}")
        for j, pos in enumerate(positions):
            cell = row[pos].strip()
            name = feature_names[j]
            if cell == "":
                raise DataError(f"row {r + 1}, column {name!r}: missing value")
            if name in codes:
                if cell not in codes[name]:
                    raise DataError(
                        f"row {r + 1}, column {name!r}: unseen category {cell!r}"
                    )
                out[r, j] = codes[name][cell]
            else:
                try:
                    out[r, j] = float(cell)
                except ValueError:
                    raise DataError(
                        f"row {r + 1}, column {name!r}: cannot parse {cell!r} as a number"
                    ) from None
    return out


def split_indices(n: int, test_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Permute ``[0, n)`` and cut off ``floor(n * test_fraction)`` test rows.

    The floor is taken with a 1e-9 guard so fractions like 0.3 of 10 rows
    land on the mathematical value. Both index arrays come back ascending.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ConfigError(f"test_fraction must be in (0, 1), got {test_fraction}")
    n_test = int(math.floor(n * test_fraction + 1e-9))
    if n_test == 0 or n_test == n:
        raise DataError(f"test fraction {test_fraction} leaves an empty part for n={n}")
    perm = np.random.default_rng(seed).permutation(n)
    return np.sort(perm[n_test:]), np.sort(perm[:n_test])


def train_test_split(ds: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Deterministic (train, test) row split; test gets floor(n * fraction) rows."""
    train_idx, test_idx = split_indices(ds.n, test_fraction, seed)
    return ds.take(train_idx), ds.take(test_idx)


def partition_folds(ds: Dataset, n_folds: int, seed: int, stratified: bool = False) -> FoldPartition:
    """Randomly divide the rows into ``n_folds`` near-equal disjoint folds.

    Plain random by default; ``stratified=True`` deals each class's
    permuted rows round-robin instead, keeping class balance per fold.
    """
    if n_folds < 2:
        raise ConfigError(f"need at least 2 folds, got {n_folds}")
    if n_folds > ds.n:
        raise ConfigError(f"cannot make {n_folds} folds from {ds.n} rows")
    rng = np.random.default_rng(seed)
    if stratified:
        buckets: list[list[int]] = [[] for _ in range(n_folds)]
        cursor = 0
        for c in range(ds.n_classes):
            members = np.flatnonzero(ds.labels == c)
            for i in rng.permutation(len(members)):
                buckets[cursor % n_folds].append(int(members[i]))
                cursor += 1
        folds = [np.sort(np.array(b, dtype=np.int64)) for b in buckets]
    else:
        perm = rng.permutation(ds.n)
        base, extra = divmod(ds.n, n_folds)
        folds, start = [], 0
        for i in range(n_folds):
            size = base + (1 if i < extra else 0)
            folds.append(np.sort(perm[start:start + size]))
            start += size
    return FoldPartition(folds=folds, seed=seed)
