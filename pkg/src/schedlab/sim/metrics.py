from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError

# waiting-time histogram thresholds, seconds (strict <)
WAIT_BUCKETS = (("1m", 60.0), ("10m", 600.0), ("1h", 3600.0), ("6h", 21600.0), ("1d", 86400.0))

METRIC_KEYS = ("makespan", "scheduling_time", "mean_waiting_time", "mean_turnaround_time",
               "mean_slowdown", "max_waiting_time", "max_turnaround_time", "max_slowdown")


@dataclass(frozen=True)
class JobOutcome:
    job_id: int
    submit_time: float
    start_time: float
    end_time: float
    runtime: float

    @property
    def waiting_time(self) -> float:
        return self.start_time - self.submit_time

    @property
    def turnaround_time(self) -> float:
        return self.end_time - self.submit_time

    @property
    def slowdown(self) -> float:
        return self.turnaround_time / self.runtime


@dataclass(frozen=True)
class ScheduleMetrics:
    makespan: float
    scheduling_time: float
    mean_waiting_time: float
    mean_turnaround_time: float
    mean_slowdown: float
    max_waiting_time: float
    max_turnaround_time: float
    max_slowdown: float
    wait_buckets: dict[str, int]
    n_jobs: int

    def to_document(self, digits: int | None = 4) -> dict:
        def fmt(v):
            return round(float(v), digits) if digits is not None else float(v)

        doc = {key: fmt(getattr(self, key)) for key in METRIC_KEYS}
        doc["n_jobs"] = self.n_jobs
        for label, _ in WAIT_BUCKETS:
            doc[f"wait_lt_{label}"] = self.wait_buckets[label]
        doc["wait_ge_1d"] = self.n_jobs - self.wait_buckets["1d"]
        return doc


def wait_buckets(waits) -> dict[str, int]:
    waits = np.asarray(waits, dtype=float)
    return {label: int(np.count_nonzero(waits < limit)) for label, limit in WAIT_BUCKETS}


def schedule_metrics(outcomes, scheduling_time: float = 0.0) -> ScheduleMetrics:
    outcomes = list(outcomes)
    if not outcomes:
        raise ValidationError("schedule_metrics needs at least one outcome")
    wait = np.array([o.waiting_time for o in outcomes])
    turnaround = np.array([o.turnaround_time for o in outcomes])
    slowdown = np.array([o.slowdown for o in outcomes])
    start = min(o.submit_time for o in outcomes)
    return ScheduleMetrics(
        makespan=float(max(o.end_time for o in outcomes) - start),
        scheduling_time=float(scheduling_time),
        mean_waiting_time=float(wait.mean()),
        mean_turnaround_time=float(turnaround.mean()),
        mean_slowdown=float(slowdown.mean()),
        max_waiting_time=float(wait.max()),
        max_turnaround_time=float(turnaround.max()),
        max_slowdown=float(slowdown.max()),
        wait_buckets=wait_buckets(wait),
        n_jobs=len(outcomes),
    )


def utilization(outcomes, demands: dict[int, int], capacity: int,
                start: float | None = None, end: float | None = None) -> float:
    """Busy resource-seconds inside ``[start, end]`` over ``capacity * (end - start)``.

    The interval defaults to first submission .. last completion.
    """
    outcomes = list(outcomes)
    if start is None:
        start = min(o.submit_time for o in outcomes)
    if end is None:
        end = max(o.end_time for o in outcomes)
    if end <= start:
        raise ValidationError("utilization interval must have positive length")
    busy = sum(demands[o.job_id] * max(0.0, min(o.end_time, end) - max(o.start_time, start))
               for o in outcomes)
    return busy / (capacity * (end - start))


def format_outcomes(outcomes) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["job_id", "submit", "start", "end", "wait", "turnaround", "slowdown"])
    for o in outcomes:
        writer.writerow([o.job_id] + [f"{v:.4f}" for v in (o.submit_time, o.start_time, o.end_time,
                                                          o.waiting_time, o.turnaround_time,
                                                          o.slowdown)])
    return out.getvalue()
