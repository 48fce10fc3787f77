"""Fully connected regression network trained on the Huber loss.

Hidden layers use ReLU and inverted dropout (active only while training);
the output layer is linear.  Training is mini-batch Adam.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import TrainingError, ValidationError


def huber(residual, delta: float = 1.0) -> np.ndarray:
    r = np.abs(np.asarray(residual, dtype=float))
    return np.where(r <= delta, 0.5 * r * r, delta * (r - 0.5 * delta))


def huber_grad(residual, delta: float = 1.0) -> np.ndarray:
    return np.clip(np.asarray(residual, dtype=float), -delta, delta)


@dataclass
class Network:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    dropout: float = 0.1
    huber_delta: float = 1.0
    loss_history: list[float] = field(default_factory=list)

    @classmethod
    def zeros(cls, sizes, dropout=0.1, huber_delta=1.0) -> "Network":
        weights = [np.zeros((a, b)) for a, b in zip(sizes[:-1], sizes[1:])]
        biases = [np.zeros(b) for b in sizes[1:]]
        return cls(weights, biases, dropout, huber_delta)

    @classmethod
    def init(cls, sizes, rng: np.random.Generator, dropout=0.1, huber_delta=1.0) -> "Network":
        """He-normal weights, zero biases."""
        weights = [rng.standard_normal((a, b)) * np.sqrt(2.0 / a)
                   for a, b in zip(sizes[:-1], sizes[1:])]
        biases = [np.zeros(b) for b in sizes[1:]]
        return cls(weights, biases, dropout, huber_delta)

    @property
    def sizes(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    def parameters(self) -> list[np.ndarray]:
        return [p for pair in zip(self.weights, self.biases) for p in pair]

    def dropout_masks(self, n_rows: int, rng: np.random.Generator) -> list[np.ndarray]:
        keep = 1.0 - self.dropout
        return [(rng.random((n_rows, w.shape[1])) < keep) / keep for w in self.weights[:-1]]

    def _forward(self, X, masks=None):
        acts = [X]
        h = X
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w + b
            if i == last:
                h = z
            else:
                h = np.maximum(z, 0.0)
                if masks is not None:
                    h = h * masks[i]
            acts.append(h)
        return acts

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return self._forward(X)[-1][:, 0]

    def loss(self, X, y, masks=None) -> float:
        out = self._forward(np.atleast_2d(X), masks)[-1][:, 0]
        return float(np.mean(huber(out - y, self.huber_delta)))

    def loss_and_gradients(self, X, y, masks=None):
        """Mean Huber loss and its gradient w.r.t. ``parameters()``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        y = np.asarray(y, dtype=float)
        acts = self._forward(X, masks)
        residual = acts[-1][:, 0] - y
        loss = float(np.mean(huber(residual, self.huber_delta)))
        delta = (huber_grad(residual, self.huber_delta) / len(y))[:, None]
        grads_w, grads_b = [], []
        for i in range(len(self.weights) - 1, -1, -1):
            grads_w.append(acts[i].T @ delta)
            grads_b.append(delta.sum(axis=0))
            if i > 0:
                delta = delta @ self.weights[i].T
                # acts[i] > 0 exactly where the unit was active and kept
                delta = delta * (acts[i] > 0)
                if masks is not None:
                    delta = delta * masks[i - 1]
        grads_w.reverse()
        grads_b.reverse()
        return loss, [g for pair in zip(grads_w, grads_b) for g in pair]

    def to_dict(self) -> dict:
        return {
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "dropout": self.dropout,
            "huber_delta": self.huber_delta,
            "loss_history": list(self.loss_history),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Network":
        weights = [np.array(w, dtype=float).reshape(len(w), -1) for w in doc["weights"]]
        return cls(
            weights=weights,
            biases=[np.array(b, dtype=float) for b in doc["biases"]],
            dropout=float(doc["dropout"]),
            huber_delta=float(doc["huber_delta"]),
            loss_history=list(doc.get("loss_history", [])),
        )


def fit_network(X, y, hidden_sizes=(128, 64, 32), dropout: float = 0.1, huber_delta: float = 1.0,
                epochs: int = 30, batch_size: int = 256, step_size: float = 1e-3,
                seed: int = 0) -> Network:
    """Train on min-max scaled ``X`` with Adam; ``y`` stays in minutes."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or len(X) == 0 or len(X) != len(y):
        raise ValidationError("fit_network needs a non-empty 2-D X with one target per row")
    if len(hidden_sizes) != 3 or min(hidden_sizes) < 1:
        raise ValidationError("hidden_sizes must be three positive widths")
    if not 0 <= dropout < 1:
        raise ValidationError("dropout must be in [0, 1)")
    if huber_delta <= 0 or epochs < 1 or batch_size < 1 or step_size <= 0:
        raise ValidationError("huber_delta, epochs, batch_size and step_size must be positive")

    rng = np.random.default_rng(seed)
    sizes = [X.shape[1], *map(int, hidden_sizes), 1]
    net = Network.init(sizes, rng, dropout, huber_delta)
    # start the output at the target median, the minimiser of the loss for large residuals
    net.biases[-1][:] = np.median(y)

    params = net.parameters()
    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    t = 0
    n = len(y)
    for epoch in range(epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, batch_size):
            batch = order[start:start + batch_size]
            masks = net.dropout_masks(len(batch), rng) if dropout > 0 else None
            loss, grads = net.loss_and_gradients(X[batch], y[batch], masks)
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite loss at epoch {epoch}, batch starting {start}")
            t += 1
            for p, g, mi, vi in zip(params, grads, m, v):
                mi *= beta1
                mi += (1 - beta1) * g
                vi *= beta2
                vi += (1 - beta2) * g * g
                p -= step_size * (mi / (1 - beta1 ** t)) / (np.sqrt(vi / (1 - beta2 ** t)) + eps)
            total += loss * len(batch)
        net.loss_history.append(total / n)
    return net
