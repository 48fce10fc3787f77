from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from .tree import RegressionTree, fit_tree


@dataclass(frozen=True)
class Forest:
    """Bagged regression trees; predicts the mean of the member trees."""

    trees: tuple[RegressionTree, ...]
    tree_seeds: tuple[int, ...]
    features_per_split: int
    bootstrap: bool = True

    def predict(self, X) -> np.ndarray:
        preds = np.stack([tree.predict(X) for tree in self.trees])
        return preds.mean(axis=0)

    def to_dict(self) -> dict:
        return {
            "trees": [tree.to_dict() for tree in self.trees],
            "tree_seeds": list(self.tree_seeds),
            "features_per_split": self.features_per_split,
            "bootstrap": self.bootstrap,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Forest":
        return cls(
            trees=tuple(RegressionTree.from_dict(t) for t in doc["trees"]),
            tree_seeds=tuple(int(s) for s in doc["tree_seeds"]),
            features_per_split=int(doc["features_per_split"]),
            bootstrap=bool(doc["bootstrap"]),
        )


def tree_seeds(seed: int, n_trees: int) -> tuple[int, ...]:
    # independent child streams, so tree i does not depend on how many trees precede it
    children = np.random.SeedSequence(seed).spawn(n_trees)
    return tuple(int(child.generate_state(1, dtype=np.uint64)[0]) for child in children)


def fit_forest(X, y, n_trees: int = 50, max_depth: int | None = 20, min_samples_leaf: int = 5,
               min_samples_split: int = 2, features_per_split: int | None = None,
               bootstrap: bool = True, seed: int = 0) -> Forest:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or len(X) == 0 or len(X) != len(y):
        raise ValidationError("fit_forest needs a non-empty 2-D X with one target per row")
    if n_trees < 1:
        raise ValidationError("n_trees must be >= 1")
    n, d = X.shape
    k = math.ceil(d / 3) if features_per_split is None else int(features_per_split)
    seeds = tree_seeds(seed, n_trees)
    trees = []
    for s in seeds:
        rng = np.random.default_rng(s)
        rows = rng.integers(0, n, size=n) if bootstrap else np.arange(n)
        trees.append(fit_tree(X[rows], y[rows], max_depth=max_depth,
                              min_samples_leaf=min_samples_leaf,
                              min_samples_split=min_samples_split,
                              features_per_split=k, rng=rng))
    return Forest(tuple(trees), seeds, k, bootstrap)
