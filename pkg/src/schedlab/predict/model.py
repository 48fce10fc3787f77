"""Runtime models: feature pipeline + estimator + safety margin + clamping."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from ..errors import ValidationError
from ..trace import (FeatureScaler, JobRecord, UserAggregates, WorkloadTrace, augment,
                     augment_matrix, fit_scaler, fit_user_aggregates)
from .boosting import BoostedEnsemble, fit_boosted
from .forest import Forest, fit_forest
from .network import Network, fit_network
from .tree import RegressionTree, fit_tree

MIN_RUNTIME_MINUTES = 0.017
WALLTIME_CAP_MINUTES = 1440.0
FORMAT_VERSION = 1

DEFAULT_PARAMS: dict[str, dict[str, Any]] = {
    "tree": {"max_depth": 20, "min_samples_leaf": 5, "min_samples_split": 2},
    "forest": {"n_trees": 50, "max_depth": 20, "min_samples_leaf": 5, "min_samples_split": 2,
               "features_per_split": None, "bootstrap": True, "seed": 0},
    "boosted": {"n_stages": 100, "learning_rate": 0.1, "max_depth": 3, "min_samples_leaf": 1},
    "network": {"hidden_sizes": [128, 64, 32], "dropout": 0.1, "huber_delta": 1.0,
                "epochs": 50, "batch_size": 256, "step_size": 3e-3, "seed": 0},
}
KINDS = tuple(DEFAULT_PARAMS)

_FITTERS = {"tree": fit_tree, "forest": fit_forest, "boosted": fit_boosted, "network": fit_network}
_ESTIMATORS = {"tree": RegressionTree, "forest": Forest, "boosted": BoostedEnsemble,
               "network": Network}


def check_kind(kind: str) -> str:
    if kind not in DEFAULT_PARAMS:
        raise ValidationError(f"unknown model kind {kind!r}; valid kinds: {', '.join(KINDS)}")
    return kind


def resolve_params(kind: str, overrides: dict | None = None) -> dict:
    """Defaults for ``kind`` updated with the recognised keys of ``overrides``."""
    params = dict(DEFAULT_PARAMS[check_kind(kind)])
    for key, value in (overrides or {}).items():
        if key in params:
            params[key] = value
    return params


@dataclass
class RuntimeModel:
    kind: str
    estimator: Any
    scaler: FeatureScaler
    aggregates: UserAggregates | None = None
    safety_margin_minutes: float = 0.0
    params: dict = field(default_factory=dict)
    min_runtime: float = MIN_RUNTIME_MINUTES
    walltime_cap: float = WALLTIME_CAP_MINUTES

    def design_matrix(self, jobs) -> np.ndarray:
        """Features the estimator consumes for a trace or a sequence of records."""
        jobs = list(jobs)
        if self.aggregates is not None:
            X = (np.array([augment(job, self.aggregates) for job in jobs]) if jobs
                 else np.empty((0, self.scaler.min_.size)))
        else:
            X = (np.array([job.features() for job in jobs]) if jobs
                 else np.empty((0, self.scaler.min_.size)))
        if self.kind == "network":
            X = self.scaler.transform(X)
        return X

    def predict_raw(self, jobs) -> np.ndarray:
        X = self.design_matrix(jobs)
        if len(X) == 0:
            return np.empty(0)
        return np.asarray(self.estimator.predict(X), dtype=float)

    def predict_many(self, jobs) -> np.ndarray:
        """Predicted runtimes in minutes, margin added and clamped."""
        raw = self.predict_raw(jobs)
        return np.clip(raw + self.safety_margin_minutes, self.min_runtime, self.walltime_cap)

    def predict(self, record: JobRecord) -> float:
        return float(self.predict_many([record])[0])

    def with_margin(self, minutes: float) -> "RuntimeModel":
        if minutes < 0:
            raise ValidationError("safety margin must be non-negative")
        return RuntimeModel(self.kind, self.estimator, self.scaler, self.aggregates, float(minutes),
                            dict(self.params), self.min_runtime, self.walltime_cap)

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "kind": self.kind,
            "params": self.params,
            "safety_margin_minutes": self.safety_margin_minutes,
            "min_runtime": self.min_runtime,
            "walltime_cap": self.walltime_cap,
            "scaler": self.scaler.to_dict(),
            "aggregates": None if self.aggregates is None else self.aggregates.to_dict(),
            "estimator": self.estimator.to_dict(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "RuntimeModel":
        kind = check_kind(doc["kind"])
        aggregates = doc.get("aggregates")
        return cls(
            kind=kind,
            estimator=_ESTIMATORS[kind].from_dict(doc["estimator"]),
            scaler=FeatureScaler.from_dict(doc["scaler"]),
            aggregates=None if aggregates is None else UserAggregates.from_dict(aggregates),
            safety_margin_minutes=float(doc["safety_margin_minutes"]),
            params=dict(doc["params"]),
            min_runtime=float(doc["min_runtime"]),
            walltime_cap=float(doc["walltime_cap"]),
        )


def fit_runtime_model(train: WorkloadTrace, kind: str = "tree", params: dict | None = None,
                      augment_users: bool = False, safety_margin: float = 0.0,
                      walltime_cap: float = WALLTIME_CAP_MINUTES) -> RuntimeModel:
    """Fit a runtime model on ``train``; targets are run_time in minutes."""
    if not train.jobs:
        raise ValidationError("cannot train on an empty trace")
    if safety_margin < 0:
        raise ValidationError("safety margin must be non-negative")
    params = resolve_params(kind, params)
    aggregates = fit_user_aggregates(train) if augment_users else None
    X = augment_matrix(train, aggregates) if aggregates is not None else train.feature_matrix()
    y = train.column("run_time")
    scaler = fit_scaler(X)
    fit_args = dict(params)
    if kind == "network":
        fit_args["hidden_sizes"] = tuple(fit_args["hidden_sizes"])
        X = scaler.transform(X)
    estimator = _FITTERS[kind](X, y, **fit_args)
    return RuntimeModel(kind, estimator, scaler, aggregates, float(safety_margin), params,
                        MIN_RUNTIME_MINUTES, float(walltime_cap))


def constant_model(minutes: float, n_features: int = 7, safety_margin: float = 0.0) -> RuntimeModel:
    """A single-leaf tree model that predicts ``minutes`` for every job."""
    tree = RegressionTree(np.array([-1]), np.array([0.0]), np.array([-1]), np.array([-1]),
                          np.array([float(minutes)]), np.array([1]))
    scaler = FeatureScaler(np.zeros(n_features), np.ones(n_features))
    return RuntimeModel("tree", tree, scaler, None, safety_margin, dict(DEFAULT_PARAMS["tree"]))


def save_model(model: RuntimeModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model.to_dict(), indent=1, sort_keys=True) + "\n",
                          encoding="utf-8")


def load_model(path: str | Path) -> RuntimeModel:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ValidationError(f"cannot read model {path}: {exc}") from None
    if doc.get("format_version") != FORMAT_VERSION:
        raise ValidationError(f"unsupported model format {doc.get('format_version')!r}")
    return RuntimeModel.from_dict(doc)

