"""CART regression trees grown by greedy variance reduction."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError

LEAF = -1


@dataclass(frozen=True)
class RegressionTree:
    """A fitted tree stored as parallel node arrays (node 0 is the root).

    Internal nodes route ``x[feature] <= threshold`` to ``left``; leaves have
    ``feature == LEAF`` and predict ``value``, the mean training target of
    their region.  ``n_samples`` records how many training rows reached each
    node.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_samples: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def is_leaf(self, node: int) -> bool:
        return self.feature[node] == LEAF

    def depth(self) -> int:
        depths = np.zeros(self.n_nodes, dtype=int)
        for node in range(self.n_nodes):
            if not self.is_leaf(node):
                depths[self.left[node]] = depths[self.right[node]] = depths[node] + 1
        return int(depths.max())

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        node = np.zeros(len(X), dtype=np.intp)
        active = self.feature[node] != LEAF
        while active.any():
            rows = np.nonzero(active)[0]
            cur = node[rows]
            go_left = X[rows, self.feature[cur]] <= self.threshold[cur]
            nxt = np.where(go_left, self.left[cur], self.right[cur])
            node[rows] = nxt
            active[rows] = self.feature[nxt] != LEAF
        return self.value[node]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "n_samples": self.n_samples.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "RegressionTree":
        return cls(
            feature=np.array(doc["feature"], dtype=np.intp),
            threshold=np.array(doc["threshold"], dtype=float),
            left=np.array(doc["left"], dtype=np.intp),
            right=np.array(doc["right"], dtype=np.intp),
            value=np.array(doc["value"], dtype=float),
            n_samples=np.array(doc["n_samples"], dtype=np.intp),
        )


def split_tolerance(y: np.ndarray) -> float:
    """Two candidate splits whose child SSE differ by less than this are ties."""
    return 1e-9 * (float(np.sum((y - y.mean()) ** 2)) + 1e-12)


def best_split(X: np.ndarray, y: np.ndarray, min_samples_leaf: int, features) -> tuple | None:
    """Best (sse, feature, threshold) over midpoints of consecutive distinct
    values, or ``None`` when no candidate leaves ``min_samples_leaf`` rows on
    both sides.  Ties go to the lowest feature index, then the smallest
    threshold.
    """
    n = len(y)
    yc = y - y.mean()
    tol = split_tolerance(y)
    sizes = np.arange(1, n)
    best = None
    for f in features:
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        ys = yc[order]
        cs = np.cumsum(ys)
        cs2 = np.cumsum(ys * ys)
        left_sse = cs2[:-1] - cs[:-1] ** 2 / sizes
        right_sum = cs[-1] - cs[:-1]
        right_sse = (cs2[-1] - cs2[:-1]) - right_sum ** 2 / (n - sizes)
        total = left_sse + right_sse
        valid = (xs[1:] > xs[:-1]) & (sizes >= min_samples_leaf) & (n - sizes >= min_samples_leaf)
        if not valid.any():
            continue
        lowest = total[valid].min()
        if best is not None and lowest >= best[0] - tol:
            continue
        pos = int(np.nonzero(valid & (total <= lowest + tol))[0][0])
        lo, hi = xs[pos], xs[pos + 1]
        threshold = lo + (hi - lo) / 2.0
        if not lo <= threshold < hi:
            threshold = lo
        best = (float(lowest), int(f), float(threshold))
    return best


def fit_tree(X, y, max_depth: int | None = 20, min_samples_leaf: int = 5,
             min_samples_split: int = 2, features_per_split: int | None = None,
             rng: np.random.Generator | None = None) -> RegressionTree:
    """Grow a regression tree minimising the summed squared error of children.

    ``max_depth=None`` grows until leaves are pure or the sample limits stop
    splitting.  When ``features_per_split`` is smaller than the number of
    features, each node considers a random subset drawn from ``rng``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or len(X) == 0 or len(X) != len(y):
        raise ValidationError("fit_tree needs a non-empty 2-D X with one target per row")
    if min_samples_leaf < 1 or min_samples_split < 2:
        raise ValidationError("min_samples_leaf must be >= 1 and min_samples_split >= 2")
    n_features = X.shape[1]
    k = n_features if features_per_split is None else int(features_per_split)
    if not 1 <= k <= n_features:
        raise ValidationError(f"features_per_split must be in [1, {n_features}]")
    if k < n_features and rng is None:
        rng = np.random.default_rng(0)

    feature, threshold, left, right, value, n_samples = [], [], [], [], [], []

    def new_node(rows):
        for arr, v in ((feature, LEAF), (threshold, 0.0), (left, LEAF), (right, LEAF)):
            arr.append(v)
        ys = y[rows]
        value.append(float(ys[0]) if np.ptp(ys) == 0 else float(ys.mean()))
        n_samples.append(len(rows))
        return len(feature) - 1

    root = new_node(np.arange(len(y)))
    stack = [(root, np.arange(len(y)), 0)]
    while stack:
        node, rows, depth = stack.pop()
        ys = y[rows]
        if (len(rows) < min_samples_split or len(rows) < 2 * min_samples_leaf
                or (max_depth is not None and depth >= max_depth) or np.ptp(ys) == 0):
            continue
        if k < n_features:
            candidates = np.sort(rng.choice(n_features, size=k, replace=False))
        else:
            candidates = range(n_features)
        found = best_split(X[rows], ys, min_samples_leaf, candidates)
        if found is None:
            continue
        _, f, thr = found
        mask = X[rows, f] <= thr
        left_rows, right_rows = rows[mask], rows[~mask]
        feature[node], threshold[node] = f, thr
        left[node] = new_node(left_rows)
        right[node] = new_node(right_rows)
        # right pushed first so the left subtree is numbered first
        stack.append((right[node], right_rows, depth + 1))
        stack.append((left[node], left_rows, depth + 1))

    return RegressionTree(
        feature=np.array(feature, dtype=np.intp),
        threshold=np.array(threshold, dtype=float),
        left=np.array(left, dtype=np.intp),
        right=np.array(right, dtype=np.intp),
        value=np.array(value, dtype=float),
        n_samples=np.array(n_samples, dtype=np.intp),
    )
