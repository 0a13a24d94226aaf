"""Independent reference implementations used as test oracles.

Everything here is deliberately written on a different code path from the
package kernel: candidate splits are evaluated one at a time with direct
membership masks and plain sums, and trees are grown recursively. The
shared contract (midpoint candidates, 1e-12 gain/tie tolerance,
lexicographic tie-break, <= routes left) is re-stated here from the
documented behavior, not imported.
"""

from __future__ import annotations

import math

import numpy as np

GAIN_TOL = 1e-12


def oracle_impurity(p, criterion="gini"):
    p = np.asarray(p, dtype=np.float64)
    if criterion == "gini":
        return 1.0 - sum(float(v) ** 2 for v in p)
    total = 0.0
    for v in p:
        if v > 0.0:
            total -= float(v) * math.log(float(v))
    return total


def oracle_decrease(Y, mask, criterion="gini"):
    """Gain of splitting label matrix Y by a boolean left-membership mask."""
    m = len(Y)
    left, right = Y[mask], Y[~mask]
    parent_p = Y.sum(axis=0) / m
    left_p = left.sum(axis=0) / len(left)
    right_p = right.sum(axis=0) / len(right)
    return (
        oracle_impurity(parent_p, criterion)
        - (len(left) / m) * oracle_impurity(left_p, criterion)
        - (len(right) / m) * oracle_impurity(right_p, criterion)
    )


def oracle_candidates(X):
    """Every (feature, threshold) midpoint candidate, in lexicographic order."""
    out = []
    for f in range(X.shape[1]):
        values = sorted(set(float(v) for v in X[:, f]))
        for lo, hi in zip(values, values[1:]):
            t = (lo + hi) / 2.0
            if t >= hi:
                t = lo
            out.append((f, t))
    return out


def oracle_best_split(X, Y, criterion="gini"):
    """Exhaustive enumeration of all candidates with the documented tie rule."""
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    scored = []
    for f, t in oracle_candidates(X):
        mask = X[:, f] <= t
        if not mask.any() or mask.all():
            continue
        scored.append((f, t, oracle_decrease(Y, mask, criterion)))
    if not scored:
        return None
    g_max = max(s[2] for s in scored)
    tol = GAIN_TOL * max(1.0, abs(g_max))
    if g_max <= tol:
        return None
    tied = [(f, t) for f, t, g in scored if g >= g_max - tol]
    f, t = min(tied)
    return f, t, g_max


class OracleNode:
    def __init__(self):
        self.feature = None
        self.threshold = None
        self.left = None
        self.right = None
        self.proportions = None
        self.count = None

    @property
    def is_leaf(self):
        return self.proportions is not None


def oracle_cart(X, y, n_classes, min_leaf=5, criterion="gini", max_depth=None, depth=0):
    """Reference hard-label CART under the shared tie rules."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    node = OracleNode()
    m = len(y)
    pure = len(set(y.tolist())) == 1
    depth_ok = max_depth is None or depth < max_depth
    split = None
    if m > min_leaf and depth_ok and not pure:
        onehot = np.zeros((m, n_classes))
        onehot[np.arange(m), y] = 1.0
        split = oracle_best_split(X, onehot, criterion)
    if split is None:
        node.proportions = np.bincount(y, minlength=n_classes) / m
        node.count = m
        return node
    f, t, _ = split
    mask = X[:, f] <= t
    node.feature = f
    node.threshold = t
    node.left = oracle_cart(X[mask], y[mask], n_classes, min_leaf, criterion,
                            max_depth, depth + 1)
    node.right = oracle_cart(X[~mask], y[~mask], n_classes, min_leaf, criterion,
                             max_depth, depth + 1)
    return node


def oracle_predict(node, x):
    while not node.is_leaf:
        node = node.left if x[node.feature] <= node.threshold else node.right
    return int(np.argmax(node.proportions))


def oracle_count_nodes(node):
    if node.is_leaf:
        return 1
    return 1 + oracle_count_nodes(node.left) + oracle_count_nodes(node.right)


def oracle_count_leaves(node):
    if node.is_leaf:
        return 1
    return oracle_count_leaves(node.left) + oracle_count_leaves(node.right)


def same_structure(kernel_node, oracle_node):
    """Compare a package tree against an oracle tree: splits and leaf classes."""
    if oracle_node.is_leaf != kernel_node.is_leaf:
        return False
    if oracle_node.is_leaf:
        return int(np.argmax(kernel_node.logits)) == int(np.argmax(oracle_node.proportions))
    if kernel_node.feature_index != oracle_node.feature:
        return False
    if kernel_node.threshold != oracle_node.threshold:
        return False
    return (same_structure(kernel_node.left, oracle_node.left)
            and same_structure(kernel_node.right, oracle_node.right))


def random_soft_instance(rng, max_samples=12, max_features=4, max_classes=3):
    """Small random (X, Y) instance with soft labels for split-oracle checks."""
    m = int(rng.integers(2, max_samples + 1))
    d = int(rng.integers(1, max_features + 1))
    k = int(rng.integers(2, max_classes + 1))
    X = rng.normal(0.0, 1.0, size=(m, d))
    if rng.random() < 0.3:  # force duplicate feature values sometimes
        X = np.round(X, 1)
    if rng.random() < 0.2 and d > 1:  # and duplicated columns for tie pressure
        X[:, -1] = X[:, 0]
    Y = rng.dirichlet(np.ones(k), size=m)
    return X, Y
