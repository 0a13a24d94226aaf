"""CART-style binary trees generalized to probability-vector labels.

One induction kernel grows every tree in this package. Each training
sample carries a label vector on the K-simplex; node proportions are the
mean of those vectors, impurity is computed from the proportions, and
splits maximize the weighted impurity decrease

    gain(v) = T(parent) - |left|/|parent| * T(left) - |right|/|parent| * T(right).

With one-hot label vectors this is exactly classical hard-label CART, so
the same kernel serves the soft-label student trees (through ``fit``),
the hard-label baseline (alpha=1), and the forest teacher's trees (which
add bootstrap rows and per-node feature subsampling on top).

Floating-point contract: candidate thresholds are midpoints between
consecutive distinct sorted feature values; split gains that agree within
``GAIN_TOL`` (relative to the best) are ties, broken by lowest feature
index then lowest threshold; a split is only taken when the best gain
exceeds ``GAIN_TOL``. The tolerance makes the chosen split independent of
floating-point summation order, so independently coded evaluators land on
the same tree.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .errors import ConfigError, DataError
from .labels import one_hot_matrix
from .util import atomic_write_text, pretty_json

GAIN_TOL = 1e-12
CRITERIA = ("gini", "entropy")


@dataclass
class TreeConfig:
    """Induction settings: leaf-size gate, label mixing weight, impurity criterion.

    ``min_leaf`` gates whether a node may be split (only nodes strictly
    larger may), it does not bound child sizes. ``alpha`` is the hard-label
    weight: 1 trains on hard labels only (the classical tree), 0 on the
    teacher's soft labels only. ``max_depth`` is an optional guard,
    unlimited by default.
    """

    min_leaf: int = 5
    alpha: float = 1.0
    criterion: str = "gini"
    max_depth: int | None = None
    seed: int = 0

    def validate(self) -> None:
        if self.min_leaf < 1:
            raise ConfigError(f"min_leaf must be >= 1, got {self.min_leaf}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.criterion not in CRITERIA:
            raise ConfigError(f"criterion must be one of {CRITERIA}, got {self.criterion!r}")
        if self.max_depth is not None and self.max_depth < 0:
            raise ConfigError(f"max_depth must be >= 0, got {self.max_depth}")


@dataclass
class TreeNode:
    """Internal node (feature_index, threshold, children) or leaf (logits, count)."""

    feature_index: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    logits: np.ndarray | None = None
    sample_count: int | None = None

    @property
    def is_leaf(self) -> bool:
        return self.logits is not None


def impurity(p: np.ndarray, criterion: str = "gini") -> float:
    """Impurity of one proportion vector: 0 iff pure, maximal at uniform."""
    p = np.asarray(p, dtype=np.float64)
    return float(_impurity_rows(p[None, :], criterion)[0])


def _impurity_rows(p: np.ndarray, criterion: str) -> np.ndarray:
    """Impurity along the last axis of a (..., K) proportion array."""
    if criterion == "gini":
        return 1.0 - np.sum(p * p, axis=-1)
    if criterion == "entropy":
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(p > 0.0, p * np.log(p), 0.0)
        return -np.sum(terms, axis=-1)
    raise ConfigError(f"criterion must be one of {CRITERIA}, got {criterion!r}")


def node_proportions(label_vectors: np.ndarray) -> np.ndarray:
    """Componentwise mean of the label vectors in a node."""
    arr = np.asarray(label_vectors, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.shape[0] == 0:
        raise ValueError("empty node has no proportions")
    return arr.mean(axis=0)


def impurity_decrease(parent_labels, left_labels, right_labels, criterion: str = "gini") -> float:
    """Weighted impurity reduction of a (left, right) partition of a node."""
    parent = np.asarray(parent_labels, dtype=np.float64)
    left = np.asarray(left_labels, dtype=np.float64)
    right = np.asarray(right_labels, dtype=np.float64)
    if len(left) == 0 or len(right) == 0:
        raise ValueError("both children must be nonempty")
    if len(left) + len(right) != len(parent):
        raise ValueError("children do not partition the parent")
    m = len(parent)
    return (
        impurity(node_proportions(parent), criterion)
        - (len(left) / m) * impurity(node_proportions(left), criterion)
        - (len(right) / m) * impurity(node_proportions(right), criterion)
    )


def is_pure(pseudo_labels: np.ndarray) -> bool:
    """True iff every sample in the node shares the same pseudo class."""
    pseudo_labels = np.asarray(pseudo_labels)
    if pseudo_labels.size == 0:
        raise ValueError("empty node has no purity")
    return bool((pseudo_labels == pseudo_labels[0]).all())


def best_split(X: np.ndarray, Y: np.ndarray, criterion: str = "gini", feature_indices=None):
    """Best (feature_index, threshold, decrease) over all midpoint candidates.

    Candidates are midpoints between consecutive distinct sorted values of
    each feature (restricted to ``feature_indices`` when given; reported
    indices are always in the full feature space). Returns None when no
    candidate clears the positive-gain tolerance. Tie handling follows the
    module contract above.
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    m = X.shape[0]
    if m < 2:
        return None
    if feature_indices is None:
        Xc, cols = X, None
    else:
        cols = np.sort(np.asarray(feature_indices, dtype=np.int64))
        Xc = X[:, cols]

    order = np.argsort(Xc, axis=0, kind="stable")
    Xs = np.take_along_axis(Xc, order, axis=0)
    boundary = Xs[:-1] < Xs[1:]
    if not boundary.any():
        return None

    left = np.cumsum(Y[order], axis=0)[:-1]          # (m-1, f, K) prefix label sums
    total = Y.sum(axis=0)
    right = np.maximum(total[None, None, :] - left, 0.0)
    n_left = np.arange(1, m, dtype=np.float64)[:, None]
    n_right = m - n_left
    t_left = _impurity_rows(left / n_left[..., None], criterion)
    t_right = _impurity_rows(right / n_right[..., None], criterion)
    parent = float(_impurity_rows((total / m)[None, :], criterion)[0])
    gain = parent - (n_left / m) * t_left - (n_right / m) * t_right
    gain[~boundary] = -np.inf

    g_max = float(gain.max())
    tol = GAIN_TOL * max(1.0, abs(g_max))
    if g_max <= tol:
        return None
    # argwhere over the transpose walks ties in (feature, threshold) order
    col, row = np.argwhere(gain.T >= g_max - tol)[0]
    lo, hi = float(Xs[row, col]), float(Xs[row + 1, col])
    threshold = (lo + hi) / 2.0
    if threshold >= hi:  # adjacent floats: keep the evaluated prefix on the left
        threshold = lo
    feature = int(col) if cols is None else int(cols[col])
    return feature, threshold, float(gain[row, col])


def grow_tree(X: np.ndarray, Y: np.ndarray, pseudo: np.ndarray, cfg: TreeConfig,
              rng: np.random.Generator | None = None,
              features_per_split: int | None = None) -> TreeNode:
    """Grow a tree on explicit arrays: rows X, label vectors Y, pseudo classes.

    A node becomes a leaf when its size is at most ``min_leaf``, its pseudo
    classes agree, the depth guard triggers, or no split has positive gain;
    leaves store the mean label vector and the sample count. When
    ``features_per_split`` is set, each node draws that many candidate
    features from ``rng`` (depth-first, left child first, so consumption
    order is deterministic).
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    pseudo = np.asarray(pseudo, dtype=np.int64)
    if len(X) == 0:
        raise DataError("cannot grow a tree on zero rows")
    subsample = features_per_split is not None and features_per_split < X.shape[1]
    if subsample and rng is None:
        raise ConfigError("feature subsampling requires an rng")

    root = TreeNode()
    work = [(root, X, Y, pseudo, 0)]
    while work:
        node, Xn, Yn, pn, depth = work.pop()
        m = len(Xn)
        split = None
        depth_ok = cfg.max_depth is None or depth < cfg.max_depth
        if m > cfg.min_leaf and depth_ok and not is_pure(pn):
            cols = None
            if subsample:
                cols = rng.choice(X.shape[1], size=features_per_split, replace=False)
            split = best_split(Xn, Yn, cfg.criterion, cols)
        if split is None:
            node.logits = Yn.mean(axis=0)
            node.sample_count = m
            continue
        f, t, _ = split
        mask = Xn[:, f] <= t
        node.feature_index = f
        node.threshold = t
        node.left = TreeNode()
        node.right = TreeNode()
        work.append((node.right, Xn[~mask], Yn[~mask], pn[~mask], depth + 1))
        work.append((node.left, Xn[mask], Yn[mask], pn[mask], depth + 1))
    return root


def fit(ds: Dataset, soft_labels, cfg: TreeConfig) -> TreeNode:
    """Train a tree on mixed labels ``alpha * one_hot + (1 - alpha) * soft``.

    ``soft_labels`` is a SoftLabelTable covering every row of ``ds``.
    Mixed labels and pseudo classes (argmax of each sample's mixed label)
    are computed once up front; induction then only sees the mixed labels,
    so ``alpha=1`` is bit-identical to training on the hard labels alone.
    """
    cfg.validate()
    if soft_labels.n_classes != ds.n_classes:
        raise DataError(
            f"soft labels have {soft_labels.n_classes} classes, dataset has {ds.n_classes}"
        )
    soft = soft_labels.to_dense(ds.n)
    hard = one_hot_matrix(ds.labels, ds.n_classes)
    mixed = cfg.alpha * hard + (1.0 - cfg.alpha) * soft
    pseudo = np.argmax(mixed, axis=1)
    return grow_tree(ds.features, mixed, pseudo, cfg)


def fit_hard(ds: Dataset, cfg: TreeConfig) -> TreeNode:
    """Classical hard-label tree: one-hot labels, pseudo class = true class."""
    cfg.validate()
    hard = one_hot_matrix(ds.labels, ds.n_classes)
    return grow_tree(ds.features, hard, ds.labels, cfg)


def predict_logits(tree: TreeNode, x) -> np.ndarray:
    """Route one sample to its leaf (``value <= threshold`` goes left)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("expected a 1-d feature vector")
    if not np.isfinite(x).all():
        raise ValueError("feature vector has non-finite values")
    node = tree
    while not node.is_leaf:
        if node.feature_index >= x.shape[0]:
            raise ValueError(
                f"tree tests feature {node.feature_index} but input has {x.shape[0]}"
            )
        node = node.left if x[node.feature_index] <= node.threshold else node.right
    return node.logits


def predict(tree: TreeNode, x) -> int:
    """Predicted class: argmax of the leaf logits, ties to the lowest index."""
    return int(np.argmax(predict_logits(tree, x)))


def predict_logits_matrix(tree: TreeNode, X) -> np.ndarray:
    """Leaf logits for every row of X, routed in bulk."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("expected a 2-d feature matrix")
    if not np.isfinite(X).all():
        raise ValueError("feature matrix has non-finite values")
    n_features = tree_n_features(tree)
    if n_features > X.shape[1]:
        raise ValueError(f"tree tests feature {n_features - 1} but input has {X.shape[1]}")
    out = np.empty((len(X), tree_n_classes(tree)), dtype=np.float64)
    stack = [(tree, np.arange(len(X)))]
    while stack:
        node, idx = stack.pop()
        if node.is_leaf:
            out[idx] = node.logits
            continue
        mask = X[idx, node.feature_index] <= node.threshold
        stack.append((node.left, idx[mask]))
        stack.append((node.right, idx[~mask]))
    return out


def predict_matrix(tree: TreeNode, X) -> np.ndarray:
    return np.argmax(predict_logits_matrix(tree, X), axis=1)


def _walk(tree: TreeNode):
    stack = [tree]
    while stack:
        node = stack.pop()
        yield node
        if not node.is_leaf:
            stack.append(node.right)
            stack.append(node.left)


def count_nodes(tree: TreeNode) -> int:
    return sum(1 for _ in _walk(tree))


def count_rules(tree: TreeNode) -> int:
    """Number of root-to-leaf decision paths, i.e. the leaf count."""
    return sum(1 for node in _walk(tree) if node.is_leaf)


def tree_depth(tree: TreeNode) -> int:
    """Maximum number of edges from the root to any leaf."""
    depth = 0
    stack = [(tree, 0)]
    while stack:
        node, d = stack.pop()
        if node.is_leaf:
            depth = max(depth, d)
        else:
            stack.append((node.left, d + 1))
            stack.append((node.right, d + 1))
    return depth


def tree_n_features(tree: TreeNode) -> int:
    """1 + the largest feature index the tree tests (0 for a bare leaf)."""
    return 1 + max(
        (node.feature_index for node in _walk(tree) if not node.is_leaf), default=-1
    )


def tree_n_classes(tree: TreeNode) -> int:
    node = tree
    while not node.is_leaf:
        node = node.left
    return len(node.logits)


def composition_count(total: int, parts: int) -> int:
    """Number of ordered ways to write ``total`` as a sum of ``parts`` nonnegative integers.

    Equals C(total + parts - 1, parts - 1), computed exactly. This is also
    the number of distinct class-count vectors an N-sample node can take
    over K classes, i.e. how few distinct impurity values hard labels can
    realize.
    """
    if total < 0:
        raise ValueError(f"total must be >= 0, got {total}")
    if parts < 1:
        raise ValueError(f"parts must be >= 1, got {parts}")
    return math.comb(total + parts - 1, parts - 1)


def tree_to_nodes(tree: TreeNode) -> list[dict]:
    """Flat preorder node-array encoding; children are indices into the list.

    Floats serialize via repr (shortest round-trip), so dump/load is
    lossless at full precision and needs no recursion however deep the
    tree is.
    """
    nodes: list[dict] = []
    stack = [(tree, None, None)]  # (node, parent position, "left"/"right")
    while stack:
        node, parent, side = stack.pop()
        pos = len(nodes)
        if parent is not None:
            nodes[parent][side] = pos
        if node.is_leaf:
            nodes.append({
                "logits": [float(v) for v in node.logits],
                "count": int(node.sample_count),
            })
        else:
            nodes.append({
                "feature": int(node.feature_index),
                "threshold": float(node.threshold),
                "left": None,
                "right": None,
            })
            stack.append((node.right, pos, "right"))
            stack.append((node.left, pos, "left"))
    return nodes


def tree_from_nodes(nodes: list[dict]) -> TreeNode:
    if not nodes:
        raise DataError("empty node list")
    built: list[TreeNode] = []
    for spec in nodes:
        if "logits" in spec:
            logits = np.asarray(spec["logits"], dtype=np.float64)
            built.append(TreeNode(logits=logits, sample_count=int(spec["count"])))
        else:
            built.append(TreeNode(feature_index=int(spec["feature"]),
                                  threshold=float(spec["threshold"])))
    for spec, node in zip(nodes, built):
        if "logits" not in spec:
            left, right = spec["left"], spec["right"]
            if left is None or right is None:
                raise DataError("internal node without two children")
            node.left = built[left]
            node.right = built[right]
    return built[0]


TREE_FORMAT = "softtree.tree/1"


def save_tree(path: str, tree: TreeNode, config: TreeConfig | None = None,
              dataset_meta: dict | None = None) -> None:
    """Write the flat-node JSON encoding plus optional training metadata."""
    payload = {
        "format": TREE_FORMAT,
        "n_classes": tree_n_classes(tree),
        "nodes": tree_to_nodes(tree),
    }
    if config is not None:
        payload["config"] = {
            "min_leaf": config.min_leaf,
            "alpha": config.alpha,
            "criterion": config.criterion,
            "max_depth": config.max_depth,
            "seed": config.seed,
        }
    if dataset_meta is not None:
        payload["dataset"] = dataset_meta
    atomic_write_text(path, pretty_json(payload))


def load_tree(path: str) -> tuple[TreeNode, dict]:
    """Read a tree file back; returns (root, full payload)."""
    if not os.path.exists(path):
        raise DataError(f"file not found: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"not valid JSON: {exc}") from None
    if payload.get("format") != TREE_FORMAT:
        raise DataError(f"not a {TREE_FORMAT} file")
    return tree_from_nodes(payload["nodes"]), payload


def rules_text(tree: TreeNode, feature_names=None, class_names=None) -> str:
    """One line per leaf: the conjunctive path, predicted class, logits, count."""

    def fname(i: int) -> str:
        return feature_names[i] if feature_names else f"f{i}"

    def cname(i: int) -> str:
        return class_names[i] if class_names else str(i)

    lines = []
    stack = [(tree, [])]
    while stack:
        node, conds = stack.pop()
        if node.is_leaf:
            path = " AND ".join(conds) if conds else "TRUE"
            pred = cname(int(np.argmax(node.logits)))
            probs = ", ".join(f"{v:.6f}" for v in node.logits)
            lines.append(f"IF {path} THEN class={pred}  probs=[{probs}]  samples={node.sample_count}")
            continue
        name = fname(node.feature_index)
        stack.append((node.right, conds + [f"{name} > {node.threshold!r}"]))
        stack.append((node.left, conds + [f"{name} <= {node.threshold!r}"]))
    return "\n".join(lines) + "\n"
