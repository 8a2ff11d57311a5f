from dataclasses import dataclass

import pytest
from hypothesis import given
from hypothesis.strategies import integers

from sparsetrain.common.errors import ScheduleError
from sparsetrain.pipeline import (
    ParamHistory,
    UpdateSemantics,
    block_cycle_clocks,
    pipeline_fill_cycles,
    queue_depth,
    schedule_at,
    stale_update_view,
    steady_state_samples,
)
from sparsetrain.topology import BASELINE_NETWORK, JunctionSpec


@dataclass(frozen=True)
class Tagged:
    """Stand-in parameter store whose every junction reads back its tag."""

    tag: str

    def junction(self, i):
        return (self.tag, i)


def test_two_junction_schedule():
    n = 10
    slot = schedule_at(n + 1, 2)
    assert slot.ff(2) == n
    slot = schedule_at(n + 2, 2)
    assert slot.ff(1) == n + 2
    assert slot.ff(2) == n + 1
    assert slot.bp(2) == n
    assert slot.up(2) == n
    assert slot.up(1) == n - 1
    assert slot.bp(1) is None


def test_first_block_cycle_is_fill():
    slot = schedule_at(0, 2)
    assert slot.ff(1) == 0
    assert not slot.active(slot.ff(2))
    assert not any(slot.active(slot.up(i)) for i in (1, 2))
    assert not any(slot.active(slot.bp(i)) for i in (1, 2))


def test_three_junction_schedule():
    slot = schedule_at(10, 3)
    assert slot.ff_input == (10, 9, 8)
    assert slot.bp_input == (None, 6, 7)
    assert slot.up_input == (5, 6, 7)


def test_every_sample_visits_every_stage_in_order():
    L = 3
    seen = {}
    for t in range(40):
        slot = schedule_at(t, L)
        for i in range(1, L + 1):
            seen.setdefault(("ff", i, slot.ff(i)), t)
            seen.setdefault(("up", i, slot.up(i)), t)
    n = 12
    ff_times = [seen[("ff", i, n)] for i in range(1, L + 1)]
    up_times = [seen[("up", i, n)] for i in range(L, 0, -1)]
    assert ff_times + up_times == list(range(n, n + 2 * L))


def test_active_respects_total():
    slot = schedule_at(5, 2)
    assert slot.active(5)
    assert not slot.active(5, total=5)
    assert not slot.active(-1)


def test_schedule_rejects_bad_arguments():
    with pytest.raises(ScheduleError):
        schedule_at(-1, 2)
    with pytest.raises(ScheduleError):
        schedule_at(0, 0)


def test_block_cycle_clocks():
    assert block_cycle_clocks(BASELINE_NETWORK.junction(1)) == 34
    assert block_cycle_clocks(BASELINE_NETWORK.junction(2)) == 34
    j = JunctionSpec(n_left=4, n_right=2, d_out=2, d_in=4, z=8)
    assert block_cycle_clocks(j) == 3


def test_queue_depth():
    assert queue_depth(1, 2) == 4
    assert queue_depth(2, 2) == 2
    assert queue_depth(0, 2) == 6
    for L in range(1, 6):
        assert queue_depth(L, L) == 2
    with pytest.raises(ScheduleError):
        queue_depth(3, 2)


def test_fill_and_steady_state():
    assert pipeline_fill_cycles(2) == 3
    assert steady_state_samples(2, 2) == 0
    assert steady_state_samples(3, 2) == 1
    assert steady_state_samples(10, 2) == 8


def test_sequential_view_is_latest():
    history = ParamHistory(Tagged("init"), depth=1)
    assert stale_update_view(history, 5, 1, UpdateSemantics.SEQUENTIAL) == ("init", 1)
    history.commit(0, Tagged("t0"))
    history.commit(1, Tagged("t1"))
    assert stale_update_view(history, 1, 2, UpdateSemantics.SEQUENTIAL) == ("t1", 2)


def test_pipelined_view_is_previous_block_cycle():
    history = ParamHistory(Tagged("init"), depth=1)
    assert stale_update_view(history, 0, 1) == ("init", 1)
    history.commit(0, Tagged("t0"))
    assert stale_update_view(history, 1, 1) == ("t0", 1)
    history.commit(1, Tagged("t1"))
    assert stale_update_view(history, 2, 2) == ("t1", 2)
    with pytest.raises(ScheduleError):
        stale_update_view(history, 1, 1)


def test_first_block_cycles_see_initial_params():
    L = 2
    history = ParamHistory(Tagged("init"), depth=1)
    for t in range(L):
        # nothing has reached UP yet, so every snapshot still equals the initial one
        assert not any(schedule_at(t, L).active(schedule_at(t, L).up(i)) for i in range(1, L + 1))
        assert stale_update_view(history, t, 1) == ("init", 1)
        history.commit(t, history.initial)


def test_junction_one_feedforward_staleness():
    # FF of sample n+2 in junction 1 reads the end of block cycle n+1, which
    # includes junction 1's UP of sample n-2 but not of sample n-1.
    L, n = 2, 10
    t = schedule_at(n + 2, L).t
    assert schedule_at(t, L).ff(1) == n + 2
    visible = [schedule_at(c, L).up(1) for c in range(t)]
    assert n - 2 in visible
    assert n - 1 not in visible
    assert schedule_at(t, L).up(1) == n - 1


def test_history_bounds():
    history = ParamHistory(Tagged("init"), depth=2)
    for t in range(4):
        history.commit(t, Tagged(f"t{t}"))
    assert history.at_end_of(3).tag == "t3"
    assert history.at_end_of(2).tag == "t2"
    assert history.at_end_of(-1).tag == "init"
    with pytest.raises(ScheduleError):
        history.at_end_of(1)
    with pytest.raises(ScheduleError):
        history.commit(3, Tagged("again"))
    with pytest.raises(ScheduleError):
        ParamHistory(Tagged("init"), depth=0)


@given(L=integers(1, 4), t=integers(0, 100))
def test_schedule_invariants(L, t):
    slot, following = schedule_at(t, L), schedule_at(t + 1, L)
    assert slot.bp(1) is None
    for i in range(1, L + 1):
        gap = slot.ff(i) - slot.up(i)
        assert gap == 2 * (L - i) + 1
        assert queue_depth(i, L) == gap + 1
        if i > 1:
            assert slot.bp(i) == slot.up(i)
        assert following.ff(i) == slot.ff(i) + 1
        assert following.up(i) == slot.up(i) + 1
    fill = pipeline_fill_cycles(L)
    done = steady_state_samples(t, L)
    if t >= fill:
        assert all(slot.active(slot.ff(i)) and slot.active(slot.up(i)) for i in range(1, L + 1))
        assert done == slot.up(1) + 1
        assert steady_state_samples(t + 1, L) - done == 1
    else:
        assert done == max(0, slot.up(1) + 1)
        assert not slot.active(slot.up(1))
