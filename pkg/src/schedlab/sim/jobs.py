from __future__ import annotations

import logging
from dataclasses import dataclass

from ..errors import ValidationError
from ..trace import WorkloadTrace

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Platform:
    """A pool of ``capacity`` identical resources (CPU cores)."""

    capacity: int

    def __post_init__(self):
        if int(self.capacity) != self.capacity or self.capacity < 1:
            raise ValidationError(f"platform capacity must be a positive integer, got {self.capacity}")


@dataclass(frozen=True)
class SimJob:
    """A job as seen by the simulator; times in seconds."""

    job_id: int
    submit_time: float
    demand: int
    requested_time: float
    actual_runtime: float

    def __post_init__(self):
        if self.demand < 1 or not self.requested_time > 0 or not self.actual_runtime > 0:
            raise ValidationError(f"job {self.job_id}: demand, requested_time and actual_runtime "
                                  "must be positive")


def to_sim_jobs(trace: WorkloadTrace, platform: Platform, policy) -> list[SimJob]:
    """Map trace records to simulator jobs under ``policy``.

    Demand is the requested core count, clamped to the platform size.  The
    planned duration is the user walltime, or the model prediction for
    policies that carry a runtime model.
    """
    model = getattr(policy, "model", None)
    if model is not None:
        planned = model.predict_many(trace.jobs) if trace.jobs else []
    else:
        planned = [job.time_limit for job in trace]
    jobs = []
    for job, minutes in zip(trace, planned):
        demand = job.cpu
        if demand > platform.capacity:
            log.warning("job %d requests %d cores on a %d-core platform; clamped",
                        job.job_id, demand, platform.capacity)
            demand = platform.capacity
        jobs.append(SimJob(job.job_id, job.submit_time, int(demand), float(minutes) * 60.0,
                           job.run_time * 60.0))
    return jobs
