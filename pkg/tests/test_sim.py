import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from instances import canonical_jobs, synthetic_instance, tiny_instance
from oracles import conservation_violations, head_protection_violations, replay_schedule
from schedlab.errors import ValidationError
from schedlab.predict import constant_model
from schedlab.sim import (DIWS, EASY, FCFS, Platform, SimJob, diws_order, format_outcomes,
                          head_reservation, make_policy, policy_step_easy, policy_step_fcfs,
                          schedule_metrics, simulate, to_sim_jobs, wait_buckets)
from schedlab.sim.metrics import JobOutcome
from schedlab.trace import parse_trace

HEADER = "job_id,submit_time,cpu,mem_gb,nodes,gpus,user_id,qos,time_limit,run_time\n"


def starts(result):
    return {o.job_id: o.start_time for o in result.outcomes}


def diws_key(j):
    return (j.requested_time, j.submit_time, j.job_id)


class TimeLimitModel:
    """Stand-in predictor that echoes the user walltime."""

    def predict_many(self, records):
        return np.array([r.time_limit for r in records], dtype=float)


# -- canonical instance -------------------------------------------------------

def test_canonical_easy_instance():
    result = simulate(canonical_jobs(), Platform(2), EASY())
    assert starts(result) == {1: 0.0, 2: 600.0, 3: 0.0}
    assert [o.waiting_time for o in result.outcomes] == [0, 600, 0]
    assert result.metrics.makespan == 900
    assert result.metrics.mean_waiting_time == 200
    assert result.metrics.mean_slowdown == pytest.approx(5 / 3)


def test_canonical_fcfs_instance():
    result = simulate(canonical_jobs(), Platform(2), FCFS())
    assert starts(result) == {1: 0.0, 2: 600.0, 3: 900.0}
    easy = simulate(canonical_jobs(), Platform(2), EASY())
    assert result.metrics.mean_waiting_time > easy.metrics.mean_waiting_time


def test_canonical_matches_replay_oracle():
    jobs = canonical_jobs()
    assert starts(simulate(jobs, Platform(2), EASY())) == replay_schedule(jobs, 2)
    assert starts(simulate(jobs, Platform(2), FCFS())) == replay_schedule(jobs, 2, backfill=False)


def test_single_job_unloaded():
    result = simulate([SimJob(0, 50.0, 4, 900.0, 600.0)], Platform(8), EASY())
    o = result.outcomes[0]
    assert (o.start_time, o.waiting_time, o.slowdown) == (50.0, 0.0, 1.0)
    assert result.metrics.makespan == 600


# -- policy steps --------------------------------------------------------------

def test_fcfs_step_examples():
    assert policy_step_fcfs([], 4, 0.0) == []
    head = SimJob(0, 0.0, 1, 10.0, 10.0)
    assert policy_step_fcfs([head], 1, 0.0) == [head]


def test_fcfs_does_not_skip_but_easy_does():
    big = SimJob(0, 0.0, 2, 100.0, 100.0)
    small = SimJob(1, 0.0, 1, 50.0, 50.0)
    running = [(200.0, 1)]
    assert policy_step_fcfs([big, small], 1, 0.0) == []
    started, res = policy_step_easy([big, small], running, 1, 0.0)
    assert started == [small] and res.time == 200.0


def test_easy_without_blocked_head_reduces_to_fcfs():
    queue = [SimJob(i, 0.0, 1, 10.0, 10.0) for i in range(3)]
    started, res = policy_step_easy(queue, [], 5, 0.0)
    assert started == policy_step_fcfs(queue, 5, 0.0) and res is None


def test_easy_negative_backfill_case():
    head = SimJob(0, 0.0, 2, 300.0, 300.0)
    long = SimJob(1, 0.0, 1, 700.0, 700.0)
    started, res = policy_step_easy([head, long], [(600.0, 1)], 1, 0.0)
    assert started == [] and (res.time, res.extra) == (600.0, 0)


def test_easy_backfills_into_extra_resources():
    # head needs 2 of the 3 cores released at 600; a long 1-core job fits the spare core
    head = SimJob(0, 0.0, 2, 300.0, 300.0)
    long = SimJob(1, 0.0, 1, 5000.0, 5000.0)
    started, res = policy_step_easy([head, long], [(600.0, 2)], 1, 0.0)
    assert started == [long] and res.extra == 1


def test_head_reservation_overrun_job_counts_as_ending_now():
    head = SimJob(0, 0.0, 2, 10.0, 10.0)
    res = head_reservation(head, [(50.0, 1), (80.0, 1)], 0, now=100.0)
    assert res.time == 100.0 and res.extra == 0


def test_head_reservation_simultaneous_release():
    head = SimJob(0, 0.0, 1, 10.0, 10.0)
    res = head_reservation(head, [(30.0, 2), (30.0, 2)], 0, now=0.0)
    assert res.time == 30.0 and res.extra == 3


# -- DIWS ---------------------------------------------------------------------

def test_diws_equal_predictions_equal_easy():
    jobs = [SimJob(i, float(s), d, 420.0, float(a)) for i, (s, d, a) in
            enumerate([(0, 2, 300), (0, 3, 100), (5, 1, 900), (10, 2, 60), (12, 3, 30)])]
    model = constant_model(7.0)
    assert starts(simulate(jobs, Platform(3), DIWS(model))) == starts(simulate(jobs, Platform(3),
                                                                             EASY()))


def test_diws_short_prediction_becomes_head():
    long = SimJob(0, 0.0, 1, 500 * 60.0, 60.0)
    short = SimJob(1, 1.0, 1, 5 * 60.0, 60.0)
    assert diws_order([long, short])[0] is short


def test_diws_six_job_composition_oracle():
    rng = np.random.default_rng(6)
    jobs = [SimJob(i, float(s), int(rng.integers(1, 4)), float(rng.integers(1, 20)),
                   float(rng.integers(1, 20)))
            for i, s in enumerate(sorted(rng.integers(0, 10, 6)))]
    got = starts(simulate(jobs, Platform(3), DIWS(constant_model(1.0))))
    assert got == replay_schedule(jobs, 3, order=diws_key)


def test_diws_requires_model():
    with pytest.raises(ValidationError, match="model"):
        make_policy("diws")
    assert make_policy("EasyBF").name == "easy"
    with pytest.raises(ValidationError, match="fcfs, easy, diws"):
        make_policy("sjf")


# -- job mapping --------------------------------------------------------------

def test_to_sim_jobs_units_and_clamping(caplog):
    trace = parse_trace(HEADER + "0,0,4,1,1,0,0,0,10,5\n1,3,32768,1,1,0,0,0,20,2.5\n")
    jobs = to_sim_jobs(trace, Platform(15680), EASY())
    assert jobs[0].requested_time == 600 and jobs[0].actual_runtime == 300
    with caplog.at_level(logging.WARNING):
        jobs = to_sim_jobs(trace, Platform(15680), EASY())
    assert jobs[1].demand == 15680 and "clamped" in caplog.text
    diws = to_sim_jobs(trace, Platform(15680), DIWS(constant_model(7.0)))
    assert [j.requested_time for j in diws] == [420.0, 420.0]


def test_simulate_rejects_bad_input():
    with pytest.raises(ValidationError):
        simulate([], Platform(1), EASY())
    with pytest.raises(ValidationError):
        simulate([SimJob(0, 0.0, 4, 1.0, 1.0)], Platform(2), EASY())
    with pytest.raises(ValidationError):
        simulate([SimJob(0, 5.0, 1, 1.0, 1.0), SimJob(1, 0.0, 1, 1.0, 1.0)], Platform(2), EASY())
    with pytest.raises(ValidationError):
        Platform(0)


# -- metrics ------------------------------------------------------------------

def test_wait_bucket_tally():
    assert wait_buckets([30, 500, 7000]) == {"1m": 1, "10m": 2, "1h": 2, "6h": 3, "1d": 3}
    # thresholds are strict
    assert wait_buckets([60, 600])["1m"] == 0 and wait_buckets([600])["10m"] == 0


def test_metrics_single_job():
    m = schedule_metrics([JobOutcome(0, 0.0, 0.0, 600.0, 600.0)])
    assert m.mean_slowdown == 1 and m.makespan == 600


def test_metrics_empty_is_error():
    with pytest.raises(ValidationError):
        schedule_metrics([])


def test_metrics_document_and_csv():
    result = simulate(canonical_jobs(), Platform(2), EASY())
    doc = result.metrics.to_document()
    assert list(doc)[:8] == ["makespan", "scheduling_time", "mean_waiting_time",
                             "mean_turnaround_time", "mean_slowdown", "max_waiting_time",
                             "max_turnaround_time", "max_slowdown"]
    assert doc["wait_lt_1m"] == 2 and doc["wait_lt_1h"] == 3 and doc["wait_ge_1d"] == 0
    lines = format_outcomes(result.outcomes).splitlines()
    assert lines[0] == "job_id,submit,start,end,wait,turnaround,slowdown"
    assert lines[2] == "2,0.0000,600.0000,900.0000,600.0000,900.0000,3.0000"


# -- kill at walltime ---------------------------------------------------------

def test_kill_at_walltime_truncates():
    jobs = [SimJob(0, 0.0, 1, 100.0, 300.0), SimJob(1, 0.0, 1, 50.0, 50.0)]
    default = simulate(jobs, Platform(1), FCFS())
    killed = simulate(jobs, Platform(1), FCFS(), kill_at_walltime=True)
    assert default.by_id()[1].start_time == 300 and killed.by_id()[1].start_time == 100
    assert killed.by_id()[0].end_time == killed.by_id()[0].start_time + 100
    assert starts(killed) == replay_schedule(jobs, 1, backfill=False, kill=True)


# -- properties over random instances -----------------------------------------

seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=80, deadline=None)
@given(seeds)
def test_easy_matches_replay_oracle(seed):
    jobs, cap = tiny_instance(np.random.default_rng(seed), max_jobs=7, max_capacity=4)
    assert starts(simulate(jobs, Platform(cap), EASY())) == replay_schedule(jobs, cap)


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_fcfs_and_diws_match_replay_oracle(seed):
    jobs, cap = tiny_instance(np.random.default_rng(seed), max_jobs=7, max_capacity=4)
    assert starts(simulate(jobs, Platform(cap), FCFS())) == replay_schedule(jobs, cap,
                                                                           backfill=False)
    got = starts(simulate(jobs, Platform(cap), DIWS(constant_model(1.0))))
    assert got == replay_schedule(jobs, cap, order=diws_key)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_kill_mode_matches_replay_oracle(seed):
    jobs, cap = tiny_instance(np.random.default_rng(seed))
    got = starts(simulate(jobs, Platform(cap), EASY(), kill_at_walltime=True))
    assert got == replay_schedule(jobs, cap, kill=True)


@settings(max_examples=25, deadline=None)
@given(seeds, st.sampled_from([8, 32, 512]), st.sampled_from(["fcfs", "easy", "diws"]))
def test_schedule_validity(seed, capacity, name):
    jobs, platform = synthetic_instance(seed % 10_000, 120, capacity)
    result = simulate(jobs, platform, make_policy(name, constant_model(30.0)))
    demands = {j.job_id: j.demand for j in jobs}
    assert not conservation_violations(result.outcomes, demands, capacity)
    for job, o in zip(jobs, result.outcomes):
        assert o.start_time >= job.submit_time
        # exact in floating point: the engine adds the runtime to the start
        assert o.end_time == o.start_time + job.actual_runtime
        assert o.slowdown >= 1 - 1e-12


@settings(max_examples=25, deadline=None)
@given(seeds, st.sampled_from([8, 32, 512]))
def test_easy_head_protection(seed, capacity):
    jobs, platform = synthetic_instance(seed % 10_000, 120, capacity, underestimates=False)
    result = simulate(jobs, platform, EASY())
    assert not head_protection_violations(jobs, result.outcomes, capacity)


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_fcfs_starts_follow_queue_order(seed):
    jobs, platform = synthetic_instance(seed % 10_000, 80, 32)
    result = simulate(jobs, platform, FCFS())
    got = [o.start_time for o in result.outcomes]
    assert all(a <= b for a, b in zip(got, got[1:]))


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_diws_with_walltime_predictions_is_sorted_easy(seed):
    jobs, platform = synthetic_instance(seed % 10_000, 60, 32)
    trace_jobs = to_sim_jobs_from_limits(seed % 10_000)
    result = simulate(trace_jobs, platform, DIWS(TimeLimitModel()))
    assert [j.requested_time for j in trace_jobs] == [j.requested_time for j in jobs]
    assert starts(result) == replay_schedule(jobs, 32, order=diws_key)


def to_sim_jobs_from_limits(seed):
    from schedlab.trace import SyntheticSpec, generate_synthetic_trace
    spec = SyntheticSpec(n_jobs=60, seed=seed, n_users=8, arrival_rate_per_hour=120,
                         lognormal_mu=2.0, lognormal_sigma=1.2)
    return to_sim_jobs(generate_synthetic_trace(spec), Platform(32), DIWS(TimeLimitModel()))


@settings(max_examples=30, deadline=None)
@given(seeds, st.sampled_from(["fcfs", "easy", "diws"]))
def test_unloaded_system_has_no_waiting(seed, name):
    jobs, _ = synthetic_instance(seed % 10_000, 50, 8)
    capacity = sum(j.demand for j in jobs)
    result = simulate(jobs, Platform(capacity), make_policy(name, constant_model(3.0)))
    assert all(o.waiting_time == 0 for o in result.outcomes)


def test_simulation_deterministic():
    jobs, platform = synthetic_instance(3, 150, 32)
    a = simulate(jobs, platform, EASY())
    b = simulate(jobs, platform, EASY())
    assert a.outcomes == b.outcomes
    assert format_outcomes(a.outcomes) == format_outcomes(b.outcomes)
