"""Event-driven batch scheduling simulator with FCFS, EASY and DIWS policies."""
from .engine import SimulationOutcome, simulate
from .jobs import Platform, SimJob, to_sim_jobs
from .metrics import (JobOutcome, ScheduleMetrics, format_outcomes, schedule_metrics, utilization,
                      wait_buckets)
from .policies import (DIWS, EASY, FCFS, POLICY_NAMES, Reservation, diws_order, head_reservation,
                       make_policy, policy_step_diws, policy_step_easy, policy_step_fcfs)

__all__ = [
    "DIWS", "EASY", "FCFS", "JobOutcome", "POLICY_NAMES", "Platform", "Reservation",
    "ScheduleMetrics", "SimJob", "SimulationOutcome", "diws_order", "format_outcomes",
    "head_reservation", "make_policy", "policy_step_diws", "policy_step_easy", "policy_step_fcfs",
    "schedule_metrics", "simulate", "to_sim_jobs", "utilization", "wait_buckets",
]
