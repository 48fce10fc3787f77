"""Workload traces: parsing, splitting, user-level augmentation, scaling and
synthetic generation.

Trace files are CSV with the header::

    job_id,submit_time,cpu,mem_gb,nodes,gpus,user_id,qos,time_limit,run_time

``submit_time`` is in seconds since the trace epoch, ``time_limit`` and
``run_time`` are in minutes.  ``job_id`` may be omitted, in which case ids are
assigned in row order.
"""
from __future__ import annotations

import csv
import io
import math
from collections.abc import Mapping
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Iterable, Iterator, TextIO

import numpy as np

from .errors import TraceFormatError, ValidationError

FEATURES = ("cpu", "mem_gb", "nodes", "gpus", "user_id", "qos", "time_limit")
USER_MEAN_FEATURES = ("cpu", "mem_gb", "nodes", "gpus", "time_limit")
AUGMENTED_FEATURES = FEATURES + tuple(f"user_mean_{name}" for name in USER_MEAN_FEATURES)
COLUMNS = ("job_id", "submit_time") + FEATURES[:-1] + ("time_limit", "run_time")

_INT_COLUMNS = frozenset({"job_id", "cpu", "nodes", "gpus", "user_id", "qos"})


@dataclass(frozen=True)
class JobRecord:
    job_id: int
    submit_time: float
    cpu: int
    mem_gb: float
    nodes: int
    gpus: int
    user_id: int
    qos: int
    time_limit: float
    run_time: float

    def __post_init__(self):
        problems = []
        if not self.run_time > 0:
            problems.append(f"run_time must be positive, got {self.run_time}")
        if not self.time_limit > 0:
            problems.append(f"time_limit must be positive, got {self.time_limit}")
        if self.cpu < 1:
            problems.append(f"cpu must be >= 1, got {self.cpu}")
        if self.nodes < 1:
            problems.append(f"nodes must be >= 1, got {self.nodes}")
        if not self.mem_gb > 0:
            problems.append(f"mem_gb must be positive, got {self.mem_gb}")
        if self.gpus < 0 or self.user_id < 0 or self.qos < 0 or self.job_id < 0:
            problems.append("job_id, gpus, user_id and qos must be non-negative")
        if not (self.submit_time >= 0 and math.isfinite(self.submit_time)):
            problems.append(f"submit_time must be finite and non-negative, got {self.submit_time}")
        for name in ("mem_gb", "time_limit", "run_time"):
            if not math.isfinite(getattr(self, name)):
                problems.append(f"{name} must be finite")
        if problems:
            raise ValidationError(f"job {self.job_id}: " + "; ".join(problems))

    def features(self) -> np.ndarray:
        """The seven submission-time features, in learning order."""
        return np.array([getattr(self, name) for name in FEATURES], dtype=float)


@dataclass(frozen=True)
class WorkloadTrace:
    jobs: tuple[JobRecord, ...]
    epoch: float = 0.0

    def __post_init__(self):
        jobs = tuple(self.jobs)
        object.__setattr__(self, "jobs", jobs)
        seen = set()
        for prev, job in zip(jobs, jobs[1:]):
            if (job.submit_time, job.job_id) < (prev.submit_time, prev.job_id):
                raise ValidationError("jobs must be sorted by (submit_time, job_id)")
        for job in jobs:
            if job.job_id in seen:
                raise ValidationError(f"duplicate job_id {job.job_id}")
            seen.add(job.job_id)

    @classmethod
    def from_jobs(cls, jobs: Iterable[JobRecord], epoch: float = 0.0) -> "WorkloadTrace":
        return cls(tuple(sorted(jobs, key=lambda j: (j.submit_time, j.job_id))), epoch)

    def __len__(self):
        return len(self.jobs)

    def __iter__(self) -> Iterator[JobRecord]:
        return iter(self.jobs)

    def __getitem__(self, item):
        return self.jobs[item]

    def feature_matrix(self) -> np.ndarray:
        if not self.jobs:
            return np.empty((0, len(FEATURES)))
        return np.array([job.features() for job in self.jobs])

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(job, name) for job in self.jobs], dtype=float)


# -- parsing and serialization ------------------------------------------------

def _parse_value(raw: str, column: str, line: int):
    text = raw.strip()
    try:
        value = float(text)
    except ValueError:
        raise TraceFormatError(f"cannot parse {text!r} as a number", line, column) from None
    if not math.isfinite(value):
        raise TraceFormatError(f"non-finite value {text!r}", line, column)
    if column in _INT_COLUMNS:
        if not value.is_integer():
            raise TraceFormatError(f"expected an integer, got {text!r}", line, column)
        return int(value)
    return value


def parse_trace(source: TextIO | str) -> WorkloadTrace:
    """Parse a trace CSV from a text stream (or a string holding the CSV)."""
    if isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.reader(source)
    try:
        header = [name.strip() for name in next(reader)]
    except StopIteration:
        raise TraceFormatError("empty trace file: missing header row", 1) from None
    required = [c for c in COLUMNS if c != "job_id"]
    missing = [c for c in required if c not in header]
    if missing:
        raise TraceFormatError(f"header is missing columns {missing}", 1)
    index = {name: header.index(name) for name in COLUMNS if name in header}
    has_ids = "job_id" in index

    jobs = []
    for row in reader:
        line = reader.line_num
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise TraceFormatError(f"expected {len(header)} fields, got {len(row)}", line)
        values = {name: _parse_value(row[i], name, line) for name, i in index.items()}
        if not has_ids:
            values["job_id"] = len(jobs)
        try:
            jobs.append(JobRecord(**values))
        except ValidationError as exc:
            raise TraceFormatError(str(exc), line) from None
    ids = [job.job_id for job in jobs]
    if len(set(ids)) != len(ids):
        raise ValidationError("job_id values must be unique")
    return WorkloadTrace.from_jobs(jobs)


def read_trace(path: str | Path) -> WorkloadTrace:
    with open(path, newline="", encoding="utf-8") as fh:
        return parse_trace(fh)


def _format_value(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def format_trace(trace: WorkloadTrace) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(COLUMNS)
    for job in trace:
        writer.writerow([_format_value(getattr(job, name)) for name in COLUMNS])
    return out.getvalue()


def write_trace(trace: WorkloadTrace, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(format_trace(trace))


# -- splitting ----------------------------------------------------------------

def random_test_size(n: int, test_fraction: float) -> int:
    """round(test_fraction * n), half up, kept inside [1, n - 1]."""
    if n < 2:
        raise ValidationError(f"need at least 2 jobs to split, got {n}")
    if not 0 < test_fraction < 1:
        raise ValidationError(f"test_fraction must be in (0, 1), got {test_fraction}")
    return min(max(math.floor(test_fraction * n + 0.5), 1), n - 1)


def split_random(trace: WorkloadTrace, test_fraction: float = 0.3, seed: int = 0):
    """Random train/test partition; each part keeps submit order."""
    n = len(trace)
    n_test = random_test_size(n, test_fraction)
    perm = np.random.default_rng(seed).permutation(n)
    test_idx = np.sort(perm[:n_test])
    train_idx = np.sort(perm[n_test:])
    jobs = trace.jobs
    return (WorkloadTrace(tuple(jobs[i] for i in train_idx), trace.epoch),
            WorkloadTrace(tuple(jobs[i] for i in test_idx), trace.epoch))


def split_temporal(trace: WorkloadTrace, test_size: int):
    """The last ``test_size`` jobs in submit order become the test set."""
    n = len(trace)
    if not 0 < test_size < n:
        raise ValidationError(f"test_size must be in [1, {n - 1}], got {test_size}")
    cut = n - test_size
    return (WorkloadTrace(trace.jobs[:cut], trace.epoch),
            WorkloadTrace(trace.jobs[cut:], trace.epoch))


def split_window(trace: WorkloadTrace, window_seconds: float = 86400.0):
    """(history, window): the window holds jobs submitted within the last
    ``window_seconds`` of the trace (strictly after ``max_submit - window``)."""
    if not trace.jobs:
        raise ValidationError("cannot split an empty trace")
    if window_seconds <= 0:
        raise ValidationError("window_seconds must be positive")
    cutoff = trace.jobs[-1].submit_time - window_seconds
    cut = next(i for i, job in enumerate(trace.jobs) if job.submit_time > cutoff)
    return (WorkloadTrace(trace.jobs[:cut], trace.epoch),
            WorkloadTrace(trace.jobs[cut:], trace.epoch))


# -- per-user augmentation ----------------------------------------------------

@dataclass(frozen=True)
class UserAggregate:
    user_id: int
    mean_cpu: float
    mean_mem_gb: float
    mean_nodes: float
    mean_gpus: float
    mean_time_limit: float

    def means(self) -> tuple[float, ...]:
        return (self.mean_cpu, self.mean_mem_gb, self.mean_nodes,
                self.mean_gpus, self.mean_time_limit)


class UserAggregates(Mapping):
    """user_id -> UserAggregate, plus job-weighted global means used for
    users absent from the fitting set."""

    def __init__(self, by_user: dict[int, UserAggregate], global_means: tuple[float, ...]):
        self._by_user = dict(by_user)
        self.global_means = tuple(float(v) for v in global_means)

    def __getitem__(self, user_id):
        return self._by_user[user_id]

    def __iter__(self):
        return iter(self._by_user)

    def __len__(self):
        return len(self._by_user)

    def means_for(self, user_id: int) -> tuple[float, ...]:
        agg = self._by_user.get(user_id)
        return agg.means() if agg is not None else self.global_means

    def to_dict(self) -> dict:
        return {
            "global_means": list(self.global_means),
            "users": {str(uid): list(agg.means()) for uid, agg in sorted(self._by_user.items())},
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "UserAggregates":
        by_user = {int(uid): UserAggregate(int(uid), *map(float, means))
                   for uid, means in doc["users"].items()}
        return cls(by_user, tuple(doc["global_means"]))


def fit_user_aggregates(train: WorkloadTrace) -> UserAggregates:
    if not train.jobs:
        raise ValidationError("cannot fit user aggregates on an empty trace")
    cols = np.array([[getattr(job, name) for name in USER_MEAN_FEATURES] for job in train],
                    dtype=float)
    users = np.array([job.user_id for job in train])
    by_user = {}
    for uid in np.unique(users):
        means = cols[users == uid].mean(axis=0)
        by_user[int(uid)] = UserAggregate(int(uid), *(float(m) for m in means))
    return UserAggregates(by_user, tuple(cols.mean(axis=0)))


def augment(record: JobRecord, aggregates: UserAggregates) -> np.ndarray:
    """Base features followed by the submitting user's mean requests."""
    return np.concatenate([record.features(), aggregates.means_for(record.user_id)])


def augment_matrix(trace: WorkloadTrace, aggregates: UserAggregates) -> np.ndarray:
    if not trace.jobs:
        return np.empty((0, len(AUGMENTED_FEATURES)))
    return np.array([augment(job, aggregates) for job in trace])


# -- min-max scaling ----------------------------------------------------------

@dataclass(frozen=True)
class FeatureScaler:
    min_: np.ndarray
    max_: np.ndarray

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        span = self.max_ - self.min_
        safe = np.where(span > 0, span, 1.0)
        out = (X - self.min_) / safe
        # constant features map to 0
        return np.where(span > 0, out, 0.0)

    def to_dict(self) -> dict:
        return {"min": self.min_.tolist(), "max": self.max_.tolist()}

    @classmethod
    def from_dict(cls, doc: dict) -> "FeatureScaler":
        return cls(np.array(doc["min"], dtype=float), np.array(doc["max"], dtype=float))


def fit_scaler(X) -> FeatureScaler:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValidationError("fit_scaler needs a non-empty 2-D matrix")
    return FeatureScaler(X.min(axis=0), X.max(axis=0))


def transform(scaler: FeatureScaler, X) -> np.ndarray:
    return scaler.transform(X)


# -- synthetic workloads ------------------------------------------------------

# Walltimes users typically type in, minutes.
_WALLTIME_GRID = np.array([1, 2, 5, 10, 15, 20, 30, 45, 60, 90, 120, 180, 240, 360,
                           480, 600, 720, 960, 1200, 1440], dtype=float)
_USER_VARIANCE_SHARE = 0.6
_CORES_PER_NODE = 16
_MIN_RUNTIME = 0.017


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of the synthetic workload generator.

    Runtimes (minutes) are log-normal with per-user location offsets, so the
    submitting user and the request shape carry signal about the runtime.
    Walltimes inflate the runtime by ``inflation_min + Exp(inflation_mean -
    inflation_min)`` and are rounded up to a typical walltime value; a fraction
    ``underestimate_fraction`` of jobs instead get a walltime below their
    runtime.
    """

    n_jobs: int = 1000
    seed: int = 0
    lognormal_mu: float = 2.5
    lognormal_sigma: float = 1.8
    inflation_min: float = 1.0
    inflation_mean: float = 8.0
    underestimate_fraction: float = 0.014
    n_users: int = 40
    arrival_rate_per_hour: float = 60.0
    walltime_cap_minutes: float = 1440.0
    arrival_window_hours: float | None = None
    max_cpu_log2: int = 8

    def __post_init__(self):
        checks = [
            (self.n_jobs >= 1, "n_jobs must be >= 1"),
            (self.lognormal_sigma > 0, "lognormal_sigma must be positive"),
            (math.isfinite(self.lognormal_mu), "lognormal_mu must be finite"),
            (self.inflation_min >= 1.0, "inflation_min must be >= 1"),
            (self.inflation_mean >= self.inflation_min, "inflation_mean must be >= inflation_min"),
            (0 <= self.underestimate_fraction < 1, "underestimate_fraction must be in [0, 1)"),
            (self.n_users >= 1, "n_users must be >= 1"),
            (self.arrival_rate_per_hour > 0, "arrival_rate_per_hour must be positive"),
            (self.walltime_cap_minutes >= 1, "walltime_cap_minutes must be >= 1"),
            (self.arrival_window_hours is None or self.arrival_window_hours > 0,
             "arrival_window_hours must be positive"),
            (0 <= self.max_cpu_log2 <= 16, "max_cpu_log2 must be in [0, 16]"),
        ]
        bad = [msg for ok, msg in checks if not ok]
        if bad:
            raise ValidationError("invalid synthetic spec: " + "; ".join(bad))

    @classmethod
    def from_mapping(cls, doc: Mapping) -> "SyntheticSpec":
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, value in doc.items():
            if key not in known:
                continue
            if value is None:
                kwargs[key] = None
            elif key in ("n_jobs", "seed", "n_users", "max_cpu_log2"):
                kwargs[key] = int(value)
            else:
                kwargs[key] = float(value)
        return cls(**kwargs)


def load_synthetic_spec(path: str | Path) -> SyntheticSpec:
    from .config import read_flat_document
    return SyntheticSpec.from_mapping(read_flat_document(path))


def generate_synthetic_trace(spec: SyntheticSpec) -> WorkloadTrace:
    rng = np.random.default_rng(spec.seed)
    n, cap = spec.n_jobs, spec.walltime_cap_minutes
    sigma_user = spec.lognormal_sigma * math.sqrt(_USER_VARIANCE_SHARE)
    sigma_job = spec.lognormal_sigma * math.sqrt(1 - _USER_VARIANCE_SHARE)

    # user profiles
    n_users = spec.n_users
    user_weight = 1.0 / np.arange(1, n_users + 1) ** 0.8
    user_weight /= user_weight.sum()
    user_mu = spec.lognormal_mu + sigma_user * rng.standard_normal(n_users)
    user_cpu_log2 = rng.integers(0, spec.max_cpu_log2 + 1, size=n_users)
    user_mem_per_core = rng.choice([0.5, 1.875, 3.75, 7.8125], size=n_users)
    user_gpu = rng.random(n_users) < 0.5
    user_qos = np.where(rng.random(n_users) < 0.9, 0, rng.integers(1, 4, size=n_users))

    # arrivals, seconds
    if spec.arrival_window_hours is not None:
        window = spec.arrival_window_hours * 3600.0
        submit = np.sort(rng.uniform(0.0, window, size=n))
        submit = np.minimum(np.floor(submit * 1000) / 1000, np.nextafter(window, 0))
    else:
        gaps = rng.exponential(3600.0 / spec.arrival_rate_per_hour, size=n)
        submit = np.round(np.cumsum(gaps) - gaps[0], 3)

    users = rng.choice(n_users, size=n, p=user_weight)
    shift = rng.choice([-1, 0, 0, 1], size=n)
    cpu_log2 = np.clip(user_cpu_log2[users] + shift, 0, spec.max_cpu_log2)
    cpu = (2 ** cpu_log2).astype(int)
    nodes = np.maximum(1, -(-cpu // _CORES_PER_NODE))
    gpus = np.where(user_gpu[users], 4 * nodes, 0)
    mem = np.round(cpu * user_mem_per_core[users], 3)

    log_rt = user_mu[users] + 0.3 * shift + sigma_job * rng.standard_normal(n)
    run_time = np.round(np.clip(np.exp(log_rt), _MIN_RUNTIME, cap), 3)
    run_time = np.maximum(run_time, _MIN_RUNTIME)

    extra = spec.inflation_mean - spec.inflation_min
    inflation = spec.inflation_min + (rng.exponential(extra, size=n) if extra > 0 else 0.0)
    wanted = run_time * inflation
    grid = np.unique(np.minimum(_WALLTIME_GRID, cap))
    pos = np.searchsorted(grid, wanted, side="left")
    time_limit = np.where(pos < len(grid), grid[np.minimum(pos, len(grid) - 1)], cap)
    time_limit = np.maximum(time_limit, run_time)

    under = rng.random(n) < spec.underestimate_fraction
    shrink = rng.uniform(0.3, 0.95, size=n)
    under_limit = np.maximum(np.floor(run_time * shrink * 1000) / 1000, 0.001)
    time_limit = np.where(under, under_limit, time_limit)

    jobs = [
        JobRecord(
            job_id=i,
            submit_time=float(submit[i]),
            cpu=int(cpu[i]),
            mem_gb=float(mem[i]),
            nodes=int(nodes[i]),
            gpus=int(gpus[i]),
            user_id=int(users[i]),
            qos=int(user_qos[users[i]]),
            time_limit=float(time_limit[i]),
            run_time=float(run_time[i]),
        )
        for i in range(n)
    ]
    return WorkloadTrace(tuple(jobs))
