"""Synthetic tabular benchmarks with planted structure and label noise.

Network access is not assumed anywhere in this package, so the classic
UCI evaluation tables are stood in for by generators that match each
dataset's shape (rows, features, classes, categorical mix) and are
calibrated so an unpruned hard-label tree and a 100-tree forest land
near the accuracy profile reported for the real data. Class signal comes
from Gaussian numeric features and class-conditional categorical
distributions; a label-flip rate sets the irreducible error that the
hard-label tree overfits and the forest teacher averages away.
"""

from __future__ import annotations

import numpy as np

from .dataset import Dataset
from .util import derive_seed


def make_tabular(
    n: int,
    n_numeric: int,
    n_categorical: int,
    n_classes: int,
    *,
    informative_numeric: int,
    informative_categorical: int,
    class_sep: float,
    cat_sharpness: float,
    label_noise: float,
    cat_cardinality: int = 4,
    seed: int = 0,
) -> Dataset:
    """Draw a dataset with planted class structure.

    ``class_sep`` scales the numeric class means, ``cat_sharpness`` < 1
    makes class-conditional category distributions peakier (more
    informative), and ``label_noise`` is the probability a label is
    flipped to a different class after the features are drawn.
    """
    rng = np.random.default_rng(seed)
    truth = rng.integers(0, n_classes, size=n)

    columns = []
    names = []
    categorical_codes: dict[str, list[str]] = {}

    means = rng.normal(0.0, 1.0, size=(n_classes, informative_numeric)) * class_sep
    for j in range(n_numeric):
        if j < informative_numeric:
            col = rng.normal(0.0, 1.0, size=n) + means[truth, j]
        else:
            col = rng.normal(0.0, 1.0, size=n)
        columns.append(col)
        names.append(f"num_{j}")

    for j in range(n_categorical):
        name = f"cat_{j}"
        card = int(rng.integers(3, cat_cardinality + 1))
        if j < informative_categorical:
            dists = rng.dirichlet(np.full(card, cat_sharpness), size=n_classes)
        else:
            dists = np.full((n_classes, card), 1.0 / card)
        cum = np.cumsum(dists, axis=1)
        draws = rng.random(n)
        col = (draws[:, None] > cum[truth]).sum(axis=1)
        columns.append(col.astype(np.float64))
        names.append(name)
        categorical_codes[name] = [f"v{c}" for c in range(card)]

    labels = truth.copy()
    flip = rng.random(n) < label_noise
    if flip.any():
        shift = rng.integers(1, n_classes, size=n)
        labels[flip] = (labels[flip] + shift[flip]) % n_classes

    return Dataset(
        features=np.column_stack(columns),
        labels=labels,
        feature_names=names,
        n_classes=n_classes,
        label_names=[f"c{c}" for c in range(n_classes)],
        categorical_codes=categorical_codes,
        label_column="label",
    )


def make_separable(n: int, n_features: int = 2, n_classes: int = 2, seed: int = 0) -> Dataset:
    """Cleanly separable clusters; a single tree reaches perfect accuracy."""
    rng = np.random.default_rng(seed)
    truth = rng.integers(0, n_classes, size=n)
    centers = np.linspace(0.0, 8.0 * (n_classes - 1), n_classes)
    features = rng.normal(0.0, 0.5, size=(n, n_features))
    features[:, 0] += centers[truth]
    return Dataset(
        features=features,
        labels=truth,
        feature_names=[f"num_{j}" for j in range(n_features)],
        n_classes=n_classes,
    )


def crx_like(seed: int = 0) -> Dataset:
    """Credit-screening shape: 690 rows, 15 features (9 categorical), 2 classes."""
    return make_tabular(
        690, 6, 9, 2,
        informative_numeric=4, informative_categorical=4,
        class_sep=1.7, cat_sharpness=0.32, label_noise=0.10,
        seed=derive_seed(seed, "crx"),
    )


def german_like(seed: int = 0) -> Dataset:
    """Credit-risk shape: 1000 rows, 20 features (13 categorical), 2 classes."""
    return make_tabular(
        1000, 7, 13, 2,
        informative_numeric=3, informative_categorical=4,
        class_sep=0.85, cat_sharpness=0.45, label_noise=0.19,
        seed=derive_seed(seed, "german"),
    )


def adult_like(seed: int = 0, n: int = 2000) -> Dataset:
    """Census-income shape at desk scale: 14 features (8 categorical), 2 classes."""
    return make_tabular(
        n, 6, 8, 2,
        informative_numeric=3, informative_categorical=4,
        class_sep=0.9, cat_sharpness=0.5, label_noise=0.12,
        seed=derive_seed(seed, "adult"),
    )


def bank_like(seed: int = 0, n: int = 2000) -> Dataset:
    """Bank-marketing shape at desk scale: 17 features (9 categorical), 2 classes."""
    return make_tabular(
        n, 8, 9, 2,
        informative_numeric=4, informative_categorical=4,
        class_sep=1.2, cat_sharpness=0.45, label_noise=0.085,
        seed=derive_seed(seed, "bank"),
    )


def cmc_like(seed: int = 0) -> Dataset:
    """Contraceptive-survey shape: 1473 rows, 9 features (7 categorical), 3 classes."""
    return make_tabular(
        1473, 2, 7, 3,
        informative_numeric=2, informative_categorical=5,
        class_sep=0.8, cat_sharpness=0.5, label_noise=0.40,
        seed=derive_seed(seed, "cmc"),
    )


BENCHMARKS = {
    "crx_like": crx_like,
    "german_like": german_like,
    "adult_like": adult_like,
    "bank_like": bank_like,
    "cmc_like": cmc_like,
}
