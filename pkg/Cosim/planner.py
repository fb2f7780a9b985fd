"""
Makespan scheduling of pick-and-place actions over parallel arms with
timed initial literals.

Every delivered hazard announcement becomes a blackout window during
which ``til_enable`` is false. An action gated by ``til_enable`` may not
start inside a window (``at_start``) or, in the conservative mode, may
not overlap one at all (``over_all``). Actions on ungated arm kinds
ignore windows.

A task's duration depends only on the arm executing it (pick + transfer
+ place), so the tasks queued on one arm are interchangeable and a
schedule is determined by how many and which tasks each arm gets.
"""

import itertools
import logging
from dataclasses import dataclass
from typing import Optional

from Cosim.config import ARM_KINDS, BUDGET, EXACT_MAX_TASKS, TIL_MODES
from Cosim.core import Interval, merge_intervals
from Cosim.exceptions import (InstanceTooLarge, PlanningError,
                              UnreachableTaskError)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Arm:
    """ ``reach`` is the set of bins and slots the arm serves; ``None``
    means everything. """
    id: str
    kind: str
    pick: float
    transfer: float
    place: float
    reach: Optional[frozenset] = None

    def __post_init__(self):
        if self.kind not in ARM_KINDS:
            raise PlanningError('arm %s: unknown kind %r' % (self.id, self.kind))
        if min(self.pick, self.transfer, self.place) <= 0:
            raise PlanningError('arm %s: phase durations must be positive'
                                % self.id)

    @property
    def duration(self):
        return self.pick + self.transfer + self.place

    def can_serve(self, task):
        return self.reach is None or \
            (task.source in self.reach and task.slot in self.reach)


@dataclass(frozen=True)
class Task:
    id: str
    part: str
    source: str
    slot: str
    tray: str = None
    attempt: int = 0


@dataclass(frozen=True, order=True)
class BlackoutWindow:
    interval: Interval
    provenance: tuple = ()
    margin: float = 0.0

    @property
    def start(self):
        return self.interval.start

    @property
    def end(self):
        return self.interval.end


@dataclass(frozen=True)
class DurativeAction:
    task: str
    arm: str
    start: float
    duration: float
    til_enable: bool = True

    @property
    def end(self):
        return self.start + self.duration


@dataclass(frozen=True)
class Schedule:
    actions: tuple = ()
    optimal: Optional[bool] = None

    @property
    def makespan(self):
        return max((a.end for a in self.actions), default=0.0)

    def by_arm(self):
        res = {}
        for a in sorted(self.actions, key=lambda a: (a.start, a.task)):
            res.setdefault(a.arm, []).append(a)
        return res

    def task_ids(self):
        return set(a.task for a in self.actions)


class Policy:
    """ TIL semantics shared by the planner and the dispatcher. """
    def __init__(self, mode='at_start', gated_kinds=ARM_KINDS):
        if mode not in TIL_MODES:
            raise PlanningError('unknown TIL mode %r' % mode)
        self.mode = mode
        self.gated_kinds = frozenset(gated_kinds)

    def gated(self, arm):
        return arm.kind in self.gated_kinds

    def blocking(self, t, duration, windows):
        """ First window preventing a start at ``t``, or ``None``. """
        for w in windows:
            if self.mode == 'at_start':
                if w.interval.contains(t):
                    return w
            elif w.interval.overlaps(t, t + duration):
                return w
        return None

    def earliest_start(self, t, duration, windows):
        """ Earliest instant ``>= t`` allowed by the windows. Windows are
        sorted and disjoint, so one forward pass suffices. """
        for w in windows:
            if self.mode == 'at_start':
                blocked = w.start <= t < w.end
            else:
                blocked = t < w.end and t + duration > w.start
            if blocked:
                t = w.end
        return t

    def start_for(self, arm, t, windows):
        if not self.gated(arm):
            return t
        return self.earliest_start(t, arm.duration, windows)


DEFAULT_POLICY = Policy()


def build_tils(deliveries, now, margin):
    """ Blackout windows from every announcement delivered by ``now``.

    Each hazard window is widened by ``margin`` on both sides; overlapping
    or touching windows are merged, windows already over are dropped.
    """
    if margin < 0:
        raise PlanningError('margin must be non-negative')
    raw = sorted((d.message.window.start - margin,
                  d.message.window.end + margin, d.message.event_id)
                 for d in deliveries if d.known_by(now))
    windows = []
    for iv in merge_intervals(Interval(s, e) for s, e, _ in raw):
        if iv.end > now:
            sources = tuple(src for s, e, src in raw
                            if iv.start <= s and e <= iv.end)
            windows.append(BlackoutWindow(iv, sources, margin))
    return windows


def _ready_map(ready, arms):
    if isinstance(ready, dict):
        return dict((a.id, float(ready.get(a.id, 0.0))) for a in arms)
    return dict((a.id, float(ready)) for a in arms)


def _check_reach(tasks, arms):
    for task in tasks:
        if not any(arm.can_serve(task) for arm in arms):
            raise UnreachableTaskError(task.id, [a.id for a in arms])


def _prioritize(tasks, arms, priority):
    if priority == 'order':
        return list(tasks)
    elif priority == 'lpt':
        def shortest(task):
            return min(a.duration for a in arms if a.can_serve(task))
        return sorted(tasks, key=lambda t: (-shortest(t), t.id))
    raise PlanningError('unknown priority %r' % priority)


class _Instance:
    def __init__(self, arms, windows, ready, policy):
        self.arms = sorted(arms, key=lambda a: a.id)
        self.by_id = dict((a.id, a) for a in self.arms)
        self.windows = sorted(windows)
        self.ready = _ready_map(ready, self.arms)
        self.policy = policy
        self._ends = {}

    def next_end(self, arm, free):
        start = self.policy.start_for(arm, free, self.windows)
        return start, start + arm.duration

    def arm_end(self, arm_id, n):
        """ End of the ``n``-th action on an arm; only the count matters. """
        ends = self._ends.setdefault(arm_id, [self.ready[arm_id]])
        arm = self.by_id[arm_id]
        while len(ends) <= n:
            ends.append(self.next_end(arm, ends[-1])[1])
        return ends[n]

    def key(self, seqs):
        ends = [self.arm_end(a, len(seq)) for a, seq in seqs.items() if seq]
        ends.sort(reverse=True)
        return (ends[0] if ends else 0.0, tuple(ends))

    def build(self, seqs, optimal=None):
        actions = []
        for arm in self.arms:
            free = self.ready[arm.id]
            for task in seqs.get(arm.id, []):
                start, free = self.next_end(arm, free)
                actions.append(DurativeAction(task.id, arm.id, start,
                                              arm.duration,
                                              self.policy.gated(arm)))
        actions.sort(key=lambda a: (a.start, a.arm, a.task))
        return Schedule(tuple(actions), optimal)


def _greedy_seqs(inst, tasks):
    seqs = dict((a.id, []) for a in inst.arms)
    free = dict(inst.ready)
    for task in tasks:
        best = None
        for arm in inst.arms:
            if not arm.can_serve(task):
                continue
            start, end = inst.next_end(arm, free[arm.id])
            if best is None or start < best[0]:
                best = (start, end, arm)
        start, end, arm = best
        seqs[arm.id].append(task)
        free[arm.id] = end
    return seqs


def _chain(inst, seqs, current, source, received, depth):
    """ Move a task off ``source``; if that alone does not lower the key,
    let the receiving arm pass one of its tasks on, and so on over arms
    not yet visited. Returns the first improving assignment or ``None``. """
    for i, task in enumerate(seqs[source]):
        for arm in inst.arms:
            if arm.id == source or arm.id in received or \
               not arm.can_serve(task):
                continue
            trial = dict(seqs)
            trial[source] = seqs[source][:i] + seqs[source][i + 1:]
            trial[arm.id] = seqs[arm.id] + [task]
            if inst.key(trial) < current:
                return trial
            if depth > 1:
                res = _chain(inst, trial, current, arm.id,
                             received | {arm.id}, depth - 1)
                if res is not None:
                    return res
    return None


def _local_search(inst, seqs):
    """ First-improvement search over reassignments and cross-arm swaps
    until no move lowers (makespan, sorted arm ends).

    Reach limits can trap both moves: freeing a fast arm may first need
    one of its tasks parked on an arm of narrower reach. At such a point
    chains of reassignments over distinct arms are tried. Ends depend
    only on per-arm counts and grow with them, so whenever a shorter
    assignment exists some chain out of a critical arm lowers the key,
    and the fixpoint is optimal. """
    current = inst.key(seqs)
    improved = True
    while improved:
        improved = False
        for a, b in itertools.permutations(sorted(seqs), 2):
            arm_b = inst.by_id[b]
            for i, task in enumerate(seqs[a]):
                if not arm_b.can_serve(task):
                    continue
                trial = dict(seqs)
                trial[a] = seqs[a][:i] + seqs[a][i + 1:]
                trial[b] = seqs[b] + [task]
                k = inst.key(trial)
                if k < current:
                    seqs, current, improved = trial, k, True
                    break
            if improved:
                break
        if improved:
            continue
        for a, b in itertools.combinations(sorted(seqs), 2):
            arm_a, arm_b = inst.by_id[a], inst.by_id[b]
            for i, j in itertools.product(range(len(seqs[a])),
                                          range(len(seqs[b]))):
                x, y = seqs[a][i], seqs[b][j]
                if not (arm_b.can_serve(x) and arm_a.can_serve(y)):
                    continue
                trial = dict(seqs)
                trial[a] = seqs[a][:i] + [y] + seqs[a][i + 1:]
                trial[b] = seqs[b][:j] + [x] + seqs[b][j + 1:]
                k = inst.key(trial)
                if k < current:
                    seqs, current, improved = trial, k, True
                    break
            if improved:
                break
        if improved or len(inst.arms) < 3:
            continue
        for source in sorted(seqs):
            trial = _chain(inst, seqs, current, source, frozenset(),
                           len(inst.arms) - 1)
            if trial is not None:
                seqs, current, improved = trial, inst.key(trial), True
                break
    return seqs


def schedule_greedy(tasks, arms, windows, ready, policy=DEFAULT_POLICY,
                    priority='order'):
    """ List scheduling followed by local search.

    Each task, in priority order, goes to the arm offering the earliest
    start allowed by the windows; ties go to the lower arm id.

    :param ready: time, or dict of per-arm times, before which no arm
      may start
    """
    _check_reach(tasks, arms)
    if not tasks:
        return Schedule((), None)
    inst = _Instance(arms, windows, ready, policy)
    seqs = _greedy_seqs(inst, _prioritize(tasks, inst.arms, priority))
    seqs = _local_search(inst, seqs)
    return inst.build(seqs)


def _fluid_bound(frees, durations, r):
    """ Smallest T with sum over arms of max(0, (T - free) / duration) >= r,
    a relaxation of how many actions fit by T. """
    if r == 0:
        return 0.0
    arms = sorted(zip(frees, durations))
    slope = base = 0.0
    for k, (f, d) in enumerate(arms):
        slope += 1.0 / d
        base += f / d
        t = (r + base) / slope
        if k + 1 == len(arms) or t <= arms[k + 1][0]:
            return t


def schedule_exact(tasks, arms, windows, ready, policy=DEFAULT_POLICY,
                   budget=BUDGET):
    """ Minimum-makespan schedule by branch and bound.

    Tasks are branched in order over the arms able to serve them, each
    appended to its arm's sequence. Starts are always pushed to the
    earliest instant the windows allow: an optimal schedule exists in
    which every action starts at the ready time, when its arm frees up,
    or at the end of a window, because moving a start earlier to such an
    instant never delays any later action on the arm and never shifts
    another arm. With equal durations per arm, appending covers every
    per-arm sequence up to a relabelling of interchangeable tasks.

    :param budget: node limit; when hit, the best schedule so far is
      returned with ``optimal`` set to False
    """
    if len(tasks) > EXACT_MAX_TASKS:
        raise InstanceTooLarge('exact search limited to %d tasks, got %d'
                               % (EXACT_MAX_TASKS, len(tasks)))
    _check_reach(tasks, arms)
    if not tasks:
        return Schedule((), True)
    inst = _Instance(arms, windows, ready, policy)
    incumbent = schedule_greedy(tasks, arms, windows, ready, policy)
    best = [incumbent.makespan, None]
    nodes = [0]
    eligible = [[arm for arm in inst.arms if arm.can_serve(t)] for t in tasks]
    durations = [a.duration for a in inst.arms]

    def search(i, free, assignment, partial):
        nodes[0] += 1
        if nodes[0] > budget:
            return False
        if i == len(tasks):
            if partial < best[0]:
                best[0] = partial
                best[1] = list(assignment)
            return True
        r = len(tasks) - i
        frees = [free[a.id] for a in inst.arms]
        bound = max(partial, _fluid_bound(frees, durations, r),
                    min(free[a.id] + a.duration for a in eligible[i]))
        if bound >= best[0]:
            return True
        for arm in eligible[i]:
            old = free[arm.id]
            end = inst.next_end(arm, old)[1]
            free[arm.id] = end
            assignment.append(arm.id)
            ok = search(i + 1, free, assignment, max(partial, end))
            assignment.pop()
            free[arm.id] = old
            if not ok:
                return False
        return True

    complete = search(0, dict(inst.ready), [], 0.0)
    if not complete:
        logger.warning('exact search stopped after %d nodes; result may be '
                       'suboptimal', budget)
    if best[1] is None:
        return Schedule(incumbent.actions, complete)
    seqs = dict((a.id, []) for a in inst.arms)
    for task, arm_id in zip(tasks, best[1]):
        seqs[arm_id].append(task)
    return inst.build(seqs, complete)


def defer_schedule(schedule, arms, windows, ready, policy=DEFAULT_POLICY):
    """ The Wait rule applied to a whole schedule: every arm keeps its
    tasks and their order, and each action starts at its planned start or
    when the arm frees up, pushed past any window that blocks it. """
    inst = _Instance(arms, windows, ready, policy)
    actions = []
    for arm_id, planned in schedule.by_arm().items():
        arm = inst.by_id[arm_id]
        free = inst.ready[arm_id]
        for a in planned:
            start = policy.start_for(arm, max(free, a.start), inst.windows)
            free = start + arm.duration
            actions.append(DurativeAction(a.task, arm_id, start,
                                          arm.duration, a.til_enable))
    actions.sort(key=lambda a: (a.start, a.arm, a.task))
    return Schedule(tuple(actions))


def replan(remaining, in_flight, arms, windows, now, policy=DEFAULT_POLICY,
           priority='order', incumbent=None):
    """ Reschedule the tasks not yet started.

    In-flight actions stay where they are; their arms become available
    when they end. If ``incumbent`` covers exactly the remaining tasks,
    it is kept (with the Wait rule applied) unless the new schedule is
    strictly shorter.
    """
    ready = dict((a.id, now) for a in arms)
    for action in in_flight:
        ready[action.arm] = max(ready[action.arm], action.end)
    fresh = schedule_greedy(remaining, arms, windows, ready, policy, priority)
    if incumbent is not None and \
       incumbent.task_ids() == set(t.id for t in remaining):
        kept = defer_schedule(incumbent, arms, windows, ready, policy)
        if kept.makespan <= fresh.makespan:
            logger.debug('replan at %.3f: keeping incumbent (%.3f <= %.3f)',
                         now, kept.makespan, fresh.makespan)
            return kept
    logger.debug('replan at %.3f: %d tasks, makespan %.3f', now,
                 len(remaining), fresh.makespan)
    return fresh


def verify(schedule, tasks, arms, windows, policy=DEFAULT_POLICY, ready=0.0):
    """ Raise :py:class:`PlanningError` unless the schedule is sound:
    every task once, reach respected, no overlap on an arm, no gated
    start blocked by a window. """
    by_id = dict((a.id, a) for a in arms)
    ready = _ready_map(ready, arms)
    tasks_by_id = dict((t.id, t) for t in tasks)
    seen = [a.task for a in schedule.actions]
    if sorted(seen) != sorted(tasks_by_id):
        raise PlanningError('schedule covers %s, expected %s'
                            % (sorted(seen), sorted(tasks_by_id)))
    windows = sorted(windows)
    for arm_id, actions in schedule.by_arm().items():
        arm = by_id[arm_id]
        free = ready[arm_id]
        for a in actions:
            if not arm.can_serve(tasks_by_id[a.task]):
                raise PlanningError('%s cannot serve %s' % (arm_id, a.task))
            if a.start < free - 1e-9:
                raise PlanningError('%s overlaps on %s' % (a.task, arm_id))
            if policy.gated(arm) and \
               policy.blocking(a.start, a.duration, windows):
                raise PlanningError('%s starts inside a blackout' % a.task)
            free = a.end


def schedule_rows(schedule):
    return [(a.task, a.arm, a.start, a.duration) for a in schedule.actions]
