from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from .tree import RegressionTree, fit_tree


@dataclass(frozen=True)
class BoostedEnsemble:
    """Squared-error gradient boosting: ``base_value + sum(rate * tree(x))``.

    ``train_mse`` holds the training MSE after 0, 1, ..., n_stages stages.
    """

    base_value: float
    stages: tuple[tuple[RegressionTree, float], ...]
    train_mse: tuple[float, ...] = ()

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        pred = np.full(len(X), self.base_value)
        for tree, rate in self.stages:
            pred = pred + rate * tree.predict(X)
        return pred

    def to_dict(self) -> dict:
        return {
            "base_value": self.base_value,
            "stages": [{"tree": tree.to_dict(), "learning_rate": rate} for tree, rate in self.stages],
            "train_mse": list(self.train_mse),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "BoostedEnsemble":
        stages = tuple((RegressionTree.from_dict(s["tree"]), float(s["learning_rate"]))
                       for s in doc["stages"])
        return cls(float(doc["base_value"]), stages, tuple(doc.get("train_mse", ())))


def fit_boosted(X, y, n_stages: int = 100, learning_rate: float = 0.1, max_depth: int | None = 3,
                min_samples_leaf: int = 1) -> BoostedEnsemble:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or len(X) == 0 or len(X) != len(y):
        raise ValidationError("fit_boosted needs a non-empty 2-D X with one target per row")
    if n_stages < 1:
        raise ValidationError("n_stages must be >= 1")
    if not 0 < learning_rate <= 1:
        raise ValidationError("learning_rate must be in (0, 1]")
    base = float(y.mean())
    pred = np.full(len(y), base)
    history = [float(np.mean((y - pred) ** 2))]
    stages = []
    for _ in range(n_stages):
        tree = fit_tree(X, y - pred, max_depth=max_depth, min_samples_leaf=min_samples_leaf)
        pred = pred + learning_rate * tree.predict(X)
        stages.append((tree, float(learning_rate)))
        history.append(float(np.mean((y - pred) ** 2)))
    return BoostedEnsemble(base, tuple(stages), tuple(history))
