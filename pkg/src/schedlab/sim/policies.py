"""Queue policies: FCFS, EASY backfilling and duration-informed EASY (DIWS).

A policy step looks at the waiting queue (in priority order), the expected
ends of running jobs and the free resources at ``now``, and returns the jobs
to start now.  Steps do not mutate their inputs.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from ..errors import ValidationError
from .jobs import SimJob


@dataclass(frozen=True)
class Reservation:
    job_id: int
    time: float
    # resources free at ``time`` beyond what the reserved job needs
    extra: int


def policy_step_fcfs(queue: Sequence[SimJob], free: int, now: float) -> list[SimJob]:
    started = []
    for job in queue:
        if job.demand > free:
            break
        started.append(job)
        free -= job.demand
    return started


def head_reservation(head: SimJob, running: Iterable[tuple[float, int]], free: int,
                     now: float) -> Reservation:
    """Earliest time the head's demand is free, assuming running jobs end at
    their expected ends (never earlier than ``now``)."""
    ends = sorted((max(now, end), demand) for end, demand in running)
    available = free
    when = now
    for end, demand in ends:
        if available >= head.demand:
            break
        available += demand
        when = end
    if available < head.demand:
        raise ValueError(f"job {head.job_id} needs {head.demand} resources; only "
                         f"{available} exist")
    # jobs ending exactly at the reservation instant all count as released
    released = sum(d for end, d in ends if end <= when)
    return Reservation(head.job_id, when, free + released - head.demand)


def policy_step_easy(queue: Sequence[SimJob], running: Iterable[tuple[float, int]], free: int,
                     now: float) -> tuple[list[SimJob], Reservation | None]:
    """EASY backfilling with a single reservation for the queue head.

    ``running`` holds ``(expected_end, demand)`` for each running job.
    """
    running = list(running)
    started = policy_step_fcfs(queue, free, now)
    free -= sum(job.demand for job in started)
    rest = queue[len(started):]
    if not rest:
        return started, None
    head = rest[0]
    running.extend((now + job.requested_time, job.demand) for job in started)
    reservation = head_reservation(head, running, free, now)
    extra = reservation.extra
    for job in rest[1:]:
        if free == 0:
            break
        if job.demand > free:
            continue
        if now + job.requested_time <= reservation.time:
            started.append(job)
            free -= job.demand
        elif job.demand <= extra:
            started.append(job)
            free -= job.demand
            extra -= job.demand
    return started, reservation


def diws_order(queue: Iterable[SimJob]) -> list[SimJob]:
    """Shortest planned duration first; ties keep submission order."""
    return sorted(queue, key=lambda j: (j.requested_time, j.submit_time, j.job_id))


def policy_step_diws(queue: Sequence[SimJob], running: Iterable[tuple[float, int]], free: int,
                     now: float) -> tuple[list[SimJob], Reservation | None]:
    return policy_step_easy(diws_order(queue), running, free, now)


@dataclass(frozen=True)
class FCFS:
    name = "fcfs"
    model = None

    def step(self, queue, running, free, now):
        return policy_step_fcfs(queue, free, now), None


@dataclass(frozen=True)
class EASY:
    name = "easy"
    model = None

    def step(self, queue, running, free, now):
        return policy_step_easy(queue, running, free, now)


@dataclass(frozen=True)
class DIWS:
    """EASY backfilling on a queue sorted by model-predicted runtime; the
    model also supplies each job's planned duration (see ``to_sim_jobs``)."""

    model: object

    name = "diws"

    def step(self, queue, running, free, now):
        return policy_step_diws(queue, running, free, now)


POLICY_NAMES = ("fcfs", "easy", "diws")


def make_policy(name: str, model=None):
    name = name.lower()
    if name == "fcfs":
        return FCFS()
    if name in ("easy", "easybf"):
        return EASY()
    if name == "diws":
        if model is None:
            raise ValidationError("the diws policy needs a trained runtime model")
        return DIWS(model)
    raise ValidationError(f"unknown policy {name!r}; valid policies: {', '.join(POLICY_NAMES)}")
