import itertools

import numpy
import pytest

from Cosim.core import Interval
from Cosim.exceptions import InstanceTooLarge, PlanningError, \
    UnreachableTaskError
from Cosim.planner import Arm, BlackoutWindow, DurativeAction, Policy, \
    Schedule, Task, build_tils, defer_schedule, replan, schedule_exact, \
    schedule_greedy, schedule_rows, verify
from Cosim.roadnet import CitsMessage, Delivery

AT_START = Policy('at_start')
OVER_ALL = Policy('over_all')


def tasks(n):
    return [Task('t%02d' % (i + 1), 'p%02d' % (i + 1), 'bin1',
                 'slot%d' % (i + 1)) for i in range(n)]


def arm(id, duration=10.0, kind='industrial', reach=None):
    return Arm(id, kind, duration * 0.3, duration * 0.4, duration * 0.3,
               reach)


def window(start, end):
    return BlackoutWindow(Interval(start, end))


def delivery(start, end, arrived_at=1.0):
    msg = CitsMessage('e%g' % start, 0.0, Interval(start, end),
                      'emergency_brake')
    return Delivery(msg, arrived_at)


def starts(schedule):
    return [a.start for a in sorted(schedule.actions, key=lambda a: a.start)]


def test_build_tils_pads_and_merges():
    tils = build_tils([delivery(100, 103)], 50.0, 2.0)
    assert [(w.start, w.end) for w in tils] == [(98.0, 105.0)]
    merged = build_tils([delivery(100, 103), delivery(106, 108)], 50.0, 2.0)
    assert [(w.start, w.end) for w in merged] == [(98.0, 110.0)]
    assert merged[0].provenance == ('e100', 'e106')
    assert build_tils([Delivery(delivery(100, 103).message, None)], 50.0,
                      2.0) == []
    assert build_tils([delivery(100, 103, arrived_at=60.0)], 50.0, 2.0) == []
    assert build_tils([delivery(100, 103)], 106.0, 2.0) == []


def test_two_arms_in_parallel():
    s = schedule_greedy(tasks(2), [arm('a'), arm('b')], [], 0.0)
    assert s.makespan == pytest.approx(10.0)


def test_greedy_defers_past_window():
    s = schedule_greedy(tasks(2), [arm('a')], [window(5, 15)], 0.0, AT_START)
    assert starts(s) == [0.0, 15.0]
    assert s.makespan == pytest.approx(25.0)


def test_empty_order():
    s = schedule_greedy([], [arm('a')], [], 0.0)
    assert s.actions == ()
    assert s.makespan == 0.0
    assert schedule_exact([], [arm('a')], [], 0.0).optimal is True


def test_ties_go_to_lower_arm_id():
    s = schedule_greedy(tasks(1), [arm('mod1'), arm('ind0')], [], 0.0)
    assert s.actions[0].arm == 'ind0'


def test_single_task_exact():
    s = schedule_exact(tasks(1), [arm('a', 15.0)], [], 0.0)
    assert s.makespan == pytest.approx(15.0)
    assert s.optimal is True


def test_exact_over_all_window():
    s = schedule_exact(tasks(3), [arm('a')], [window(25, 40)], 0.0, OVER_ALL)
    assert starts(s) == [0.0, 10.0, 40.0]
    assert s.makespan == pytest.approx(50.0)


def test_exact_at_start_window():
    s = schedule_exact(tasks(3), [arm('a')], [window(25, 40)], 0.0, AT_START)
    assert starts(s) == [0.0, 10.0, 20.0]


def test_exact_balances_unequal_arms():
    s = schedule_exact(tasks(5), [arm('a', 10.0), arm('b', 15.0)], [], 0.0)
    assert s.makespan == pytest.approx(30.0)
    assert s.optimal is True


def test_exact_refuses_large_instances():
    with pytest.raises(InstanceTooLarge):
        schedule_exact(tasks(9), [arm('a')], [], 0.0)


def test_unreachable_task_is_named():
    far = Task('t99', 'p99', 'bin9', 'slot9')
    arms = [arm('a', reach=frozenset(['bin1', 'slot1']))]
    with pytest.raises(UnreachableTaskError, match='t99'):
        schedule_greedy([far], arms, [], 0.0)
    with pytest.raises(UnreachableTaskError):
        schedule_exact([far], arms, [], 0.0)


def test_reach_is_respected():
    ts = tasks(4)
    arms = [arm('a', reach=frozenset(['bin1', 'slot1', 'slot2'])),
            arm('b')]
    s = schedule_greedy(ts, arms, [], 0.0)
    verify(s, ts, arms, [])
    assert all(a.arm == 'b' for a in s.actions
               if a.task in ('t03', 't04'))


def test_exhausted_budget_is_not_optimal():
    ts = tasks(6)
    arms = [arm('a'), arm('b', 12.0), arm('c', 15.0)]
    s = schedule_exact(ts, arms, [window(5, 9)], 0.0, AT_START, budget=3)
    assert s.optimal is False
    verify(s, ts, arms, [window(5, 9)], AT_START)


def test_ungated_kinds_ignore_windows():
    policy = Policy('at_start', gated_kinds=['industrial'])
    s = schedule_greedy(tasks(1), [arm('m', kind='modular')], [window(0, 50)],
                        0.0, policy)
    assert s.actions[0].start == 0.0
    assert s.actions[0].til_enable is False


def test_replan_without_history_is_greedy():
    ts, arms = tasks(5), [arm('a'), arm('b', 15.0)]
    windows = [window(12, 20)]
    assert replan(ts, [], arms, windows, 0.0, AT_START) == \
        schedule_greedy(ts, arms, windows, 0.0, AT_START)


def test_replan_waits_for_in_flight_arm():
    arms = [arm('a'), arm('b')]
    busy = DurativeAction('t00', 'a', 2.0, 10.0)
    s = replan(tasks(1), [busy], arms, [], 5.0)
    assert (s.actions[0].arm, s.actions[0].start) == ('b', 5.0)
    s = replan(tasks(2), [busy], arms, [], 5.0)
    assert sorted((a.arm, a.start) for a in s.actions) == \
        [('a', 12.0), ('b', 5.0)]


def test_replan_keeps_incumbent_unless_strictly_shorter():
    ts, arms = tasks(2), [arm('a'), arm('b')]
    incumbent = Schedule((DurativeAction('t01', 'b', 0.0, 10.0),
                          DurativeAction('t02', 'a', 0.0, 10.0)))
    s = replan(ts, [], arms, [], 0.0, incumbent=incumbent)
    assert sorted((a.task, a.arm) for a in s.actions) == \
        [('t01', 'b'), ('t02', 'a')]


def test_defer_schedule_keeps_order_and_arm():
    arms = [arm('a')]
    planned = schedule_greedy(tasks(3), arms, [], 0.0)
    deferred = defer_schedule(planned, arms, [window(8, 15)], 0.0, AT_START)
    assert [(a.task, a.start) for a in deferred.actions] == \
        [('t01', 0.0), ('t02', 15.0), ('t03', 25.0)]


def test_verify_catches_blocked_start():
    arms = [arm('a')]
    bad = Schedule((DurativeAction('t01', 'a', 6.0, 10.0),))
    with pytest.raises(PlanningError, match='blackout'):
        verify(bad, tasks(1), arms, [window(5, 15)], AT_START)


def test_schedule_rows():
    s = schedule_greedy(tasks(1), [arm('a')], [], 0.0)
    assert schedule_rows(s) == [('t01', 'a', 0.0, 10.0)]


def brute_force(ts, arms, windows, policy, ready=0.0):
    best = float('inf')
    windows = sorted(windows)
    if not isinstance(ready, dict):
        ready = dict((a.id, ready) for a in arms)
    for assignment in itertools.product(arms, repeat=len(ts)):
        if not all(a.can_serve(t) for a, t in zip(assignment, ts)):
            continue
        makespan = 0.0
        for a in arms:
            count = sum(1 for x in assignment if x is a)
            free = ready[a.id]
            for _ in range(count):
                free = policy.start_for(a, free, windows) + a.duration
            if count:
                makespan = max(makespan, free)
        best = min(best, makespan)
    return best


def random_instance(rng, max_tasks, limited=False):
    """ Up to three arms and two windows. ``limited`` adds reach sets
    (the first arm always serves everything) and per-arm ready times. """
    n_arms = int(rng.integers(1, 4))
    n_tasks = int(rng.integers(1, max_tasks + 1))
    ts = tasks(n_tasks)
    if limited:
        ts = [Task(t.id, t.part, 'bin%d' % rng.integers(0, 2), t.slot)
              for t in ts]
    places = sorted(set([t.source for t in ts] + [t.slot for t in ts]))
    arms = []
    for i in range(n_arms):
        reach = None
        if limited and i > 0 and rng.random() < 0.7:
            reach = frozenset(p for p in places if rng.random() < 0.6)
        kind = ['industrial', 'modular'][int(rng.integers(0, 2))]
        arms.append(arm('arm%d' % i, float(rng.integers(5, 21)), kind,
                        reach))
    windows = []
    t = 0.0
    for _ in range(int(rng.integers(0, 3))):
        t += float(rng.uniform(0.0, 30.0))
        length = float(rng.uniform(1.0, 15.0))
        windows.append(window(t, t + length))
        t += length + 1.0
    ready = 0.0
    if limited:
        ready = dict((a.id, float(rng.integers(0, 11))) for a in arms)
    return ts, arms, windows, ready


@pytest.mark.parametrize('limited', [False, True])
def test_exact_matches_brute_force(limited):
    rng = numpy.random.default_rng(11)
    for _ in range(200):
        ts, arms, windows, ready = random_instance(rng, 4, limited)
        policy = [AT_START, OVER_ALL][int(rng.integers(0, 2))]
        s = schedule_exact(ts, arms, windows, ready, policy)
        verify(s, ts, arms, windows, policy, ready)
        assert s.optimal is True
        assert s.makespan == pytest.approx(
            brute_force(ts, arms, windows, policy, ready))


@pytest.mark.parametrize('limited', [False, True])
def test_greedy_close_to_exact(limited):
    rng = numpy.random.default_rng(12)
    for _ in range(500):
        ts, arms, windows, ready = random_instance(rng, 6, limited)
        policy = [AT_START, OVER_ALL][int(rng.integers(0, 2))]
        greedy = schedule_greedy(ts, arms, windows, ready, policy)
        exact = schedule_exact(ts, arms, windows, ready, policy)
        verify(greedy, ts, arms, windows, policy, ready)
        verify(exact, ts, arms, windows, policy, ready)
        assert exact.makespan <= greedy.makespan + 1e-9
        assert greedy.makespan <= 1.3 * exact.makespan + 1e-9


def test_greedy_parks_a_task_to_free_the_fast_arm():
    ts = [Task('t0', 'p0', 'b1', 's0'), Task('t1', 'p1', 'b1', 's1')]
    arms = [arm('a0', 11.0), arm('a1', 18.0),
            arm('a2', 11.0, reach=frozenset(['b1', 's0']))]
    s = schedule_greedy(ts, arms, [], 0.0)
    assert s.makespan == pytest.approx(11.0)
    assert sorted((a.task, a.arm) for a in s.actions) == \
        [('t0', 'a2'), ('t1', 'a0')]
    assert s.makespan == pytest.approx(
        schedule_exact(ts, arms, [], 0.0).makespan)


def test_adding_a_window_never_shortens_the_exact_schedule():
    rng = numpy.random.default_rng(13)
    checked = 0
    for _ in range(200):
        ts, arms, windows, ready = random_instance(rng, 5, True)
        if not windows:
            continue
        policy = [AT_START, OVER_ALL][int(rng.integers(0, 2))]
        fewer = schedule_exact(ts, arms, windows[:-1], ready, policy)
        more = schedule_exact(ts, arms, windows, ready, policy)
        assert more.makespan >= fewer.makespan - 1e-9
        checked += 1
    assert checked > 50


@pytest.mark.parametrize('n', [1, 3, 6])
def test_one_arm_without_windows_sums_durations(n):
    ts, arms = tasks(n), [arm('a', 12.0)]
    for s in (schedule_greedy(ts, arms, [], 0.0),
              schedule_greedy(ts[::-1], arms, [], 0.0, priority='lpt'),
              schedule_exact(ts, arms, [], 0.0)):
        assert s.makespan == pytest.approx(12.0 * n)
