"""Class-probability label algebra: one-hot, softened, mixed, averaged.

All operations are pure functions on 1-d (or row-stacked 2-d) float
vectors over K classes. A valid probability label is nonnegative and sums
to 1 within ``SIMPLEX_ATOL``; vectors read from external files may carry
rounding noise up to ``FILE_SUM_SLACK`` and are renormalized.
"""

from __future__ import annotations

import numpy as np

SIMPLEX_ATOL = 1e-9
FILE_SUM_SLACK = 1e-6


def to_one_hot(class_index: int, n_classes: int) -> np.ndarray:
    if not 0 <= class_index < n_classes:
        raise ValueError(f"class index {class_index} out of range [0, {n_classes})")
    vec = np.zeros(n_classes, dtype=np.float64)
    vec[class_index] = 1.0
    return vec


def one_hot_matrix(labels: np.ndarray, n_classes: int) -> np.ndarray:
    """Row-stacked one-hot vectors for a class-index array."""
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise ValueError("class index out of range")
    out = np.zeros((len(labels), n_classes), dtype=np.float64)
    out[np.arange(len(labels)), labels] = 1.0
    return out


def mix(hard: np.ndarray, soft: np.ndarray, alpha: float) -> np.ndarray:
    """Convex combination ``alpha * hard + (1 - alpha) * soft``.

    ``alpha=1`` returns the hard label exactly and ``alpha=0`` the soft
    label exactly, bit for bit.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    hard = np.asarray(hard, dtype=np.float64)
    soft = np.asarray(soft, dtype=np.float64)
    if hard.shape != soft.shape:
        raise ValueError(f"label shapes differ: {hard.shape} vs {soft.shape}")
    return alpha * hard + (1.0 - alpha) * soft


def pseudo_label(soft: np.ndarray) -> int:
    """Index of the largest component; ties go to the lowest index."""
    return int(np.argmax(np.asarray(soft)))


def soften_logits(raw_scores: np.ndarray, temperature: float) -> np.ndarray:
    """softmax(raw_scores / temperature); higher temperature flattens the output."""
    if not temperature > 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    z = np.asarray(raw_scores, dtype=np.float64) / temperature
    if not np.isfinite(z).all():
        raise ValueError("raw scores must be finite")
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


def average_labels(labels) -> np.ndarray:
    """Componentwise mean of a nonempty stack of equal-length vectors."""
    arr = np.asarray(labels, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.shape[0] == 0:
        raise ValueError("cannot average an empty list of labels")
    return arr.mean(axis=0)


def check_simplex(vec: np.ndarray, atol: float = SIMPLEX_ATOL) -> None:
    """Raise ValueError unless ``vec`` is a probability vector within ``atol``."""
    vec = np.asarray(vec, dtype=np.float64)
    if vec.ndim != 1 or vec.size == 0:
        raise ValueError("expected a nonempty 1-d vector")
    if not np.isfinite(vec).all():
        raise ValueError("label has non-finite components")
    if vec.min() < -atol or vec.max() > 1.0 + atol:
        raise ValueError("label components outside [0, 1]")
    if abs(float(vec.sum()) - 1.0) > atol:
        raise ValueError(f"label sums to {vec.sum()!r}, not 1")


def renormalize(vec: np.ndarray, slack: float = FILE_SUM_SLACK) -> np.ndarray:
    """Rescale a near-probability vector onto the simplex; reject beyond ``slack``.

    Vectors that already pass the strict simplex check come back unchanged,
    so valid tables round-trip through files bit for bit.
    """
    vec = np.asarray(vec, dtype=np.float64)
    if not np.isfinite(vec).all():
        raise ValueError("label has non-finite components")
    if vec.min() < -slack:
        raise ValueError("label has negative components")
    total = float(vec.sum())
    if abs(total - 1.0) > slack:
        raise ValueError(f"label sums to {total!r}, outside the {slack} slack")
    if abs(total - 1.0) <= SIMPLEX_ATOL and vec.min() >= 0.0:
        return vec
    clipped = np.clip(vec, 0.0, None)
    return clipped / clipped.sum()
