"""Dependency rule, lockstep simulator, closed form and cost estimator."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parbucket.errors import DataError, InvariantError
from parbucket.scheduler import (
    DependencyState, ScheduleEvent, ScheduleTrace, attach_touches, closed_form_start, io_cost,
    lockstep_simulate, schedule_violations, verify_schedule,
)


def state_with(*counts):
    s = DependencyState(levels=8)
    s.counters[: len(counts)] = counts
    return s


def test_can_resolve_after_four_feeds():
    assert state_with(4, 0).can_resolve(1)


def test_cannot_resolve_before_four_feeds():
    assert not state_with(3, 0).can_resolve(1)


def test_adjacent_in_flight_blocks():
    s = state_with(24, 5, 0)
    assert s.can_resolve(1) and s.can_resolve(2)
    s.record_start(1)
    assert not s.can_resolve(2)


def test_non_adjacent_in_flight_allowed():
    s = state_with(24, 5, 4, 0)
    s.record_start(1)
    assert s.can_resolve(3)


def test_deeper_dependency_on_fifth_resolve():
    # Res(1,5) needs Res(2,1) to have finished
    assert not state_with(20, 4, 0).can_resolve(1)
    assert state_with(20, 4, 1).can_resolve(1)


def test_record_start_end_counts():
    s = DependencyState()
    s.record_start(0)
    s.record_end(0)
    assert s.count(0) == 1


def test_double_start_is_an_error():
    s = DependencyState()
    s.record_start(0)
    with pytest.raises(InvariantError):
        s.record_start(0)


def test_end_without_start_is_an_error():
    with pytest.raises(InvariantError):
        DependencyState().record_end(2)


@settings(max_examples=50)
@given(st.lists(st.integers(0, 5), min_size=1, max_size=400), st.randoms(use_true_random=False))
def test_random_legal_interleavings_keep_invariants(picks, rnd):
    s = DependencyState(levels=8)
    for i in picks:
        if s.in_flight and rnd.random() < 0.5:
            s.record_end(rnd.choice(sorted(s.in_flight)))
        elif s.can_resolve(i):
            s.record_start(i)
        assert s.check() == []


def test_closed_form_values():
    assert [closed_form_start(0, k) for k in (1, 2, 3)] == [0, 5, 10]
    assert closed_form_start(1, 1) == 16
    assert closed_form_start(2, 1) == 80


def test_simulate_first_level1_start():
    assert lockstep_simulate(64).index()[(1, 1)].start == 16


def test_simulate_four_ops():
    tr = lockstep_simulate(4)
    assert sorted((e.level, e.k) for e in tr.events) == [(0, 1), (0, 2), (0, 3), (0, 4), (1, 1)]


def test_simulate_single_op():
    assert lockstep_simulate(1).events == [ScheduleEvent(0, 1, 0, 1)]


@pytest.mark.parametrize("n", [1, 5, 17, 64, 255, 1000, 4096])
def test_simulate_matches_closed_form(n):
    tr = lockstep_simulate(n)
    assert all(e.start == closed_form_start(e.level, e.k) for e in tr.events)
    assert verify_schedule(tr)


@pytest.mark.parametrize("dur", [lambda i: 1, lambda i: 2 ** i, lambda i: max(1, 4 ** i - 1)])
def test_shorter_durations_verify(dur):
    tr = lockstep_simulate(2000, dur)
    assert verify_schedule(tr)
    assert all(e.end == 5 * e.k - 4 for e in tr.events if e.level == 0)


def test_operations_never_delayed():
    tr = lockstep_simulate(4096)
    assert all(e.end == 5 * e.k - 4 for e in tr.events if e.level == 0)


def test_verify_rejects_early_start():
    tr = lockstep_simulate(16)
    evs = [ScheduleEvent(e.level, e.k, 15, 19) if (e.level, e.k) == (1, 1) else e for e in tr.events]
    assert not verify_schedule(ScheduleTrace(evs))


def test_verify_rejects_adjacent_overlap():
    evs = [ScheduleEvent(0, k, 5 * k - 5, 5 * k - 4) for k in range(1, 5)]
    evs.append(ScheduleEvent(1, 1, 16, 20))
    evs.append(ScheduleEvent(0, 5, 17, 18))
    msgs = schedule_violations(ScheduleTrace(evs))
    assert any("overlap" in m for m in msgs)


def test_csv_round_trip(tmp_path):
    tr = lockstep_simulate(100)
    text = tr.to_csv()
    assert "level,k,start,end" in text.splitlines()[1]
    assert ScheduleTrace.from_csv(text).events == tr.events


def test_csv_bad_row():
    with pytest.raises(DataError):
        ScheduleTrace.from_csv("level,k,start,end\n1,2,x,4\n")


def _timed(touches_by_level, n=256):
    tr = lockstep_simulate(n)
    ev = np.array([(e.level, e.k, touches_by_level(e.level)) for e in tr.events], np.int64)
    return attach_touches(tr, ev)


def test_io_single_block():
    d = 4
    tr = attach_touches(lockstep_simulate(1), np.array([(0, 1, 2 * d)]))
    assert io_cost(tr, 2 * d, 1) == 1


def test_io_halves_when_block_doubles():
    tr = _timed(lambda i: 1000 * 4 ** i)
    a, b = io_cost(tr, 8, 4), io_cost(tr, 16, 4)
    assert b / a == pytest.approx(0.5, rel=0.02)


def test_io_many_processors_within_twice_level_max():
    tr = _timed(lambda i: 300 * 4 ** i)
    nlev = tr.levels()
    per_level = [sum(-(-e.touches // 8) for e in tr.events if e.level == i) for i in range(nlev)]
    cost = io_cost(tr, 8, nlev)
    assert max(per_level) <= cost <= 2 * max(per_level)


def test_io_one_processor_is_total_cost():
    tr = _timed(lambda i: 100 * 4 ** i)
    assert io_cost(tr, 8, 1) == sum(-(-e.touches // 8) for e in tr.events)


def test_io_rejects_bad_parameters():
    with pytest.raises(ValueError):
        io_cost(ScheduleTrace(), 0, 1)
