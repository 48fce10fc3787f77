"""Discrete-event replay of a job list on a homogeneous platform."""
from __future__ import annotations

import heapq
import time
from dataclasses import dataclass

from ..errors import ValidationError
from .jobs import Platform, SimJob
from .metrics import JobOutcome, ScheduleMetrics, schedule_metrics


@dataclass(frozen=True)
class SimulationOutcome:
    policy: str
    outcomes: tuple[JobOutcome, ...]
    metrics: ScheduleMetrics

    def by_id(self) -> dict[int, JobOutcome]:
        return {o.job_id: o for o in self.outcomes}


def simulate(jobs: list[SimJob], platform: Platform, policy,
             kill_at_walltime: bool = False) -> SimulationOutcome:
    """Replay ``jobs`` (sorted by submit time) under ``policy``.

    At each event instant completions are applied first, then submissions,
    then one scheduling pass.  Jobs always run their full actual runtime
    unless ``kill_at_walltime`` truncates them at their planned duration.
    """
    jobs = list(jobs)
    if not jobs:
        raise ValidationError("nothing to simulate: empty job list")
    for prev, job in zip(jobs, jobs[1:]):
        if (job.submit_time, job.job_id) < (prev.submit_time, prev.job_id):
            raise ValidationError("jobs must be sorted by (submit_time, job_id)")
    for job in jobs:
        if job.demand > platform.capacity:
            raise ValidationError(f"job {job.job_id} demands {job.demand} > capacity "
                                  f"{platform.capacity}")

    free = platform.capacity
    queue: list[SimJob] = []
    running: dict[int, tuple[float, int]] = {}  # job_id -> (expected end, demand)
    completions: list[tuple[float, int, int]] = []  # (end, job_id, demand)
    starts: dict[int, tuple[float, float]] = {}  # job_id -> (start, executed runtime)
    sched_seconds = 0.0
    nxt = 0

    while nxt < len(jobs) or completions:
        now = min(jobs[nxt].submit_time if nxt < len(jobs) else float("inf"),
                  completions[0][0] if completions else float("inf"))
        while completions and completions[0][0] == now:
            _, job_id, demand = heapq.heappop(completions)
            del running[job_id]
            free += demand
        while nxt < len(jobs) and jobs[nxt].submit_time == now:
            queue.append(jobs[nxt])
            nxt += 1
        if not queue:
            continue

        tick = time.perf_counter()
        started, _ = policy.step(queue, running.values(), free, now)
        sched_seconds += time.perf_counter() - tick

        if started:
            ids = set()
            for job in started:
                executed = (min(job.actual_runtime, job.requested_time) if kill_at_walltime
                            else job.actual_runtime)
                starts[job.job_id] = (now, executed)
                running[job.job_id] = (now + job.requested_time, job.demand)
                heapq.heappush(completions, (now + executed, job.job_id, job.demand))
                free -= job.demand
                ids.add(job.job_id)
            if free < 0:
                raise AssertionError(f"policy {policy.name} oversubscribed the platform at {now}")
            queue = [job for job in queue if job.job_id not in ids]

    outcomes = tuple(
        JobOutcome(job.job_id, job.submit_time, starts[job.job_id][0],
                   starts[job.job_id][0] + starts[job.job_id][1], starts[job.job_id][1])
        for job in jobs
    )
    return SimulationOutcome(policy.name, outcomes, schedule_metrics(outcomes, sched_seconds))
