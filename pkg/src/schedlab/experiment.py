"""Experiment configuration shared by the command-line subcommands."""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, fields
from pathlib import Path

from .config import parse_value, read_flat_document
from .errors import ValidationError
from .predict.model import KINDS, check_kind
from .sim.policies import POLICY_NAMES
from .trace import (SyntheticSpec, WorkloadTrace, generate_synthetic_trace, random_test_size,
                    read_trace, split_random, split_temporal, split_window)

SPLITS = ("random", "temporal", "window")
_HYPERPARAMS = ("max_depth", "min_samples_leaf", "min_samples_split", "n_trees",
                "features_per_split", "bootstrap", "n_stages", "learning_rate", "hidden_sizes",
                "dropout", "huber_delta", "epochs", "batch_size", "step_size")


@dataclass
class ExperimentConfig:
    seed: int = 0
    out: str = "out"
    # trace source: a CSV path, or the synthetic generator below
    trace: str | None = None
    n_jobs: int = 3000
    lognormal_mu: float = 2.5
    lognormal_sigma: float = 1.8
    inflation_min: float = 1.0
    inflation_mean: float = 8.0
    underestimate_fraction: float = 0.014
    n_users: int = 40
    arrival_rate_per_hour: float = 40.0
    walltime_cap_minutes: float = 1440.0
    arrival_window_hours: float | None = None
    max_cpu_log2: int = 8
    # train / test split
    split: str = "random"
    test_fraction: float = 0.3
    test_size: int | None = None
    window_seconds: float = 86400.0
    # model
    model: str = "tree"
    augment: bool = False
    safety_margin: float = 0.0
    model_path: str | None = None
    max_depth: int | None = None
    min_samples_leaf: int | None = None
    min_samples_split: int | None = None
    n_trees: int | None = None
    features_per_split: int | None = None
    bootstrap: bool | None = None
    n_stages: int | None = None
    learning_rate: float | None = None
    hidden_sizes: list | None = None
    dropout: float | None = None
    huber_delta: float | None = None
    epochs: int | None = None
    batch_size: int | None = None
    step_size: float | None = None
    # simulation
    capacity: int = 512
    policy: str = "easy"
    policies: str = "easy,diws"
    kill_at_walltime: bool = False

    def __post_init__(self):
        check_kind(self.model)
        if self.split not in SPLITS:
            raise ValidationError(f"unknown split {self.split!r}; valid splits: {', '.join(SPLITS)}")
        if self.capacity < 1:
            raise ValidationError("capacity must be a positive integer")
        for name in [self.policy, *self.policy_list()]:
            if name.lower() not in POLICY_NAMES and name.lower() != "easybf":
                raise ValidationError(f"unknown policy {name!r}; valid policies: "
                                      f"{', '.join(POLICY_NAMES)}")
        if self.safety_margin < 0:
            raise ValidationError("safety_margin must be non-negative")

    @classmethod
    def build(cls, config_path=None, overrides: dict | None = None) -> "ExperimentConfig":
        doc = read_flat_document(config_path) if config_path else {}
        doc.update(overrides or {})
        known = {f.name: f for f in fields(cls)}
        unknown = sorted(set(doc) - set(known))
        if unknown:
            raise ValidationError(f"unknown config keys: {', '.join(unknown)}")
        kwargs = {key: _coerce(key, known[key].type, value) for key, value in doc.items()}
        return cls(**kwargs)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def policy_list(self) -> list[str]:
        return [p.strip() for p in str(self.policies).split(",") if p.strip()]

    def synthetic_spec(self) -> SyntheticSpec:
        doc = {f.name: getattr(self, f.name) for f in fields(SyntheticSpec) if hasattr(self, f.name)}
        doc["seed"] = self.seed
        return SyntheticSpec.from_mapping(doc)

    def model_params(self) -> dict:
        params = {k: getattr(self, k) for k in _HYPERPARAMS if getattr(self, k) is not None}
        if self.model in ("forest", "network"):
            params["seed"] = self.seed
        return params

    def out_dir(self) -> Path:
        path = Path(self.out)
        path.mkdir(parents=True, exist_ok=True)
        return path


def _coerce(key: str, annotation: str, value):
    if isinstance(value, str) and annotation not in ("str", "str | None"):
        value = parse_value(value)
    if value is None:
        if "None" in annotation:
            return None
        raise ValidationError(f"config key {key!r} may not be null")
    base = annotation.replace(" | None", "")
    try:
        if base == "bool":
            if isinstance(value, str):
                lowered = value.lower()
                if lowered not in ("true", "false", "1", "0", "yes", "no"):
                    raise ValueError(value)
                return lowered in ("true", "1", "yes")
            return bool(value)
        if base == "int":
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(value)
            return int(value)
        if base == "float":
            out = float(value)
            if math.isnan(out):
                raise ValueError(value)
            return out
        if base == "list":
            if isinstance(value, str):
                value = [v for v in value.split(",") if v.strip()]
            return [int(v) for v in value]
        return str(value)
    except (TypeError, ValueError):
        raise ValidationError(f"config key {key!r}: cannot interpret {value!r} as {base}") from None


def load_workload(cfg: ExperimentConfig) -> WorkloadTrace:
    if cfg.trace:
        if not Path(cfg.trace).exists():
            raise ValidationError(f"trace file not found: {cfg.trace}")
        return read_trace(cfg.trace)
    return generate_synthetic_trace(cfg.synthetic_spec())


def train_test_split(trace: WorkloadTrace, cfg: ExperimentConfig):
    if cfg.split == "random":
        return split_random(trace, cfg.test_fraction, cfg.seed)
    if cfg.split == "temporal":
        size = cfg.test_size
        if size is None:
            # same cardinality as the random split
            size = random_test_size(len(trace), cfg.test_fraction)
        return split_temporal(trace, size)
    return split_window(trace, cfg.window_seconds)


__all__ = ["ExperimentConfig", "KINDS", "SPLITS", "load_workload", "train_test_split"]
