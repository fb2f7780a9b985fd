"""
Discrete-event co-simulation of the cell on the moving trailer.

Events are processed in ``(time, seq)`` order from one heap. Physics
ticks every :py:data:`Cosim.config.TICK` seconds while an action is in
flight or a part rests on a tray, applying the latest acceleration sample
to every part. The strategy decides how the cell uses hazard
announcements:

``static``
    the trailer does not move; the initial schedule runs as planned
``on_wheels``
    the trailer moves; announcements are ignored
``wait``
    the initial schedule runs; an action whose start is blocked by a
    known window is deferred to the end of the window
``replan_til``
    every announcement (and every recovery) triggers a replan of the
    tasks not yet started
"""

import functools
import heapq
import logging
import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy

from Cosim.config import STRATEGIES, TICK
from Cosim.core import Streams
from Cosim.disturbance import (DROP, HELD, ON_TRAY, CellState, PartState,
                               apply_accel)
from Cosim.motion import load_trace, synth_trace, zero_trace
from Cosim.planner import (DEFAULT_POLICY, DurativeAction, Schedule,
                           build_tils, replan, schedule_greedy)
from Cosim.roadnet import broadcast, generate_events, signage

logger = logging.getLogger(__name__)

STATIC, ON_WHEELS, WAIT, REPLAN_TIL = STRATEGIES
INFORMED = (WAIT, REPLAN_TIL)

ACTION_START = 'action_start'
GRASP = 'grasp'
ACTION_END = 'action_end'
MESSAGE_ARRIVAL = 'message_arrival'
ACCEL_TICK = 'accel_tick'
ORDER_COMPLETE = 'order_complete'


@dataclass(frozen=True)
class SimEvent:
    time: float
    seq: int
    kind: str
    arm: str = ''
    task: str = ''
    detail: str = ''


class Gate(NamedTuple):
    start: bool
    until: float


@dataclass(frozen=True)
class StartRecord:
    """ An action start with the windows the cell knew at dispatch. """
    time: float
    task: str
    arm: str
    duration: float
    til_enable: bool
    windows: tuple = ()


@dataclass(frozen=True)
class Carry:
    """ A part held by an arm over ``[grasp, release]``. """
    task: str
    arm: str
    part: str
    grasp: float
    release: float
    dropped: bool = False


@dataclass(frozen=True)
class PlanRecord:
    time: float
    reason: str
    schedule: Schedule


@dataclass(frozen=True)
class Exposure:
    task: str
    arm: str
    event: str
    announced: bool


@dataclass
class RunResult:
    strategy: str
    seed: int
    tpt: float
    complete: bool
    cell: CellState
    timeline: list = field(default_factory=list)
    incidents: list = field(default_factory=list)
    events: list = field(default_factory=list)
    deliveries: list = field(default_factory=list)
    plans: list = field(default_factory=list)
    starts: list = field(default_factory=list)
    carries: list = field(default_factory=list)
    lost_tasks: list = field(default_factory=list)
    ticks: int = 0


def dispatch_gate(action, known_windows, strategy, now, policy=DEFAULT_POLICY):
    """ Whether ``action`` may start at ``now``.

    Only the informed strategies look at windows, and only for actions
    carrying ``til_enable``. A blocked action is deferred to the end of
    the blocking window; later windows are checked again then.
    """
    if strategy not in INFORMED or not action.til_enable:
        return Gate(True, now)
    blocking = policy.blocking(now, action.duration, sorted(known_windows))
    if blocking is None:
        return Gate(True, now)
    return Gate(False, blocking.end)


@functools.lru_cache(maxsize=8)
def _recorded(path):
    return load_trace(path)


def road_and_trace(config, streams):
    """ The road events of a run and the trailer trace they produce.

    Events come from the ``events`` stream and are identical across
    strategies for one seed; only ``static`` swaps in a trace at rest.
    """
    source = config.trace
    recorded = _recorded(source.path) if source.source == 'file' else None
    horizon = recorded.last if recorded is not None else source.horizon
    events = list(config.road.events)
    events += generate_events(config.road.rate_per_hour, horizon,
                              config.road.params, streams['events'],
                              [e.id for e in events])
    events.sort(key=lambda e: (e.onset, e.id))
    if config.strategy == STATIC:
        trace = zero_trace(horizon, source.period)
    elif recorded is not None:
        trace = recorded
    else:
        trace = synth_trace(events, horizon, source.noise_rms,
                            streams['motion'], source.period)
    return events, trace


class _Flight:
    def __init__(self, task, arm, start, end, grasp):
        self.task = task
        self.arm = arm
        self.start = start
        self.end = end
        self.grasp = grasp
        self.dropped = False


class Simulation:
    """ One run of one strategy on one seed. """
    def __init__(self, config, keep_ticks=False):
        self.config = config
        self.strategy = config.strategy
        self.informed = self.strategy in INFORMED
        self.policy = config.planner.policy()
        self.keep_ticks = keep_ticks
        self.arms = dict((a.id, a) for a in config.arms)
        streams = Streams(config.seed)
        self.rng = streams['disturbance']
        self.events, self.trace = road_and_trace(config, streams)
        self.deliveries = broadcast(signage(self.events), config.channel,
                                    streams['channel'])
        self.lateral = self.trace.lateral()
        self.tasks = config.order.tasks()
        self.rank = dict((t.id, i) for i, t in enumerate(self.tasks))
        types = dict((p.part, p.type) for p in config.order.parts())
        self.parts = dict((t.part, PartState(t.part, types[t.part]))
                          for t in self.tasks)
        self.trays = frozenset(t.tray for t in self.tasks)
        self.queues = dict((a, []) for a in self.arms)
        self.flying = {}
        self.version = dict((a, 0) for a in self.arms)
        self.pool = []
        self.known = []
        self.heap = []
        self.seq = 0
        self.ticking = False
        self.finished = False
        self.now = 0.0
        self.result = RunResult(self.strategy, config.seed, 0.0, False,
                                CellState(), events=self.events,
                                deliveries=self.deliveries)

    def push(self, time, kind, payload=None):
        heapq.heappush(self.heap, (time, self.seq, kind, payload))
        self.seq += 1

    def log(self, kind, arm='', task='', detail=''):
        timeline = self.result.timeline
        timeline.append(SimEvent(self.now, len(timeline), kind, arm, task,
                                 detail))

    def windows(self, now):
        return [w for w in self.known if w.end > now]

    def run(self):
        plan = schedule_greedy(self.tasks, list(self.arms.values()),
                               self.windows(0.0), 0.0, self.policy,
                               self.config.planner.priority)
        self.install(plan, 'initial')
        for d in self.deliveries:
            if not d.lost:
                self.push(d.arrived_at, MESSAGE_ARRIVAL, d)
        for arm in sorted(self.arms):
            self.dispatch(arm)
        cap = self.config.executor.time_cap
        handlers = {
            ACTION_START: self.on_start,
            GRASP: self.on_grasp,
            ACTION_END: self.on_end,
            MESSAGE_ARRIVAL: self.on_message,
            ACCEL_TICK: self.on_tick,
            ORDER_COMPLETE: self.on_complete,
        }
        while self.heap and not self.finished:
            time, _, kind, payload = heapq.heappop(self.heap)
            if time > cap:
                break
            self.now = time
            handlers[kind](payload)
        res = self.result
        res.complete = self.finished
        res.tpt = self.now if self.finished else cap
        res.cell = CellState(tuple(self.parts.values()))
        if not self.finished:
            logger.warning('%s seed %d: time cap %g s reached', self.strategy,
                           self.config.seed, cap)
        logger.debug('%s seed %d: TPT %.3f, %d incidents, %d ticks',
                     self.strategy, self.config.seed, res.tpt,
                     len(res.incidents), res.ticks)
        return res

    def install(self, schedule, reason):
        tasks = dict((t.id, t) for q in self.queues.values() for t, _ in q)
        tasks.update((t.id, t) for t in self.tasks)
        tasks.update((t.id, t) for t in self.pool)
        self.pool = []
        for arm in self.queues:
            self.queues[arm] = []
        for arm, actions in schedule.by_arm().items():
            self.queues[arm] = [(tasks[a.task], a.start) for a in actions]
        for arm in self.version:
            self.version[arm] += 1
        self.result.plans.append(PlanRecord(self.now, reason, schedule))

    def dispatch(self, arm_id):
        """ Start the arm's next action now, or schedule the attempt. """
        if arm_id in self.flying or not self.queues[arm_id]:
            return
        task, planned = self.queues[arm_id][0]
        self.version[arm_id] += 1
        if planned > self.now:
            self.push(planned, ACTION_START, (arm_id, self.version[arm_id]))
            return
        arm = self.arms[arm_id]
        action = DurativeAction(task.id, arm_id, self.now, arm.duration,
                                self.policy.gated(arm))
        known = self.windows(self.now) if self.informed else []
        gate = dispatch_gate(action, known, self.strategy, self.now,
                             self.policy)
        if not gate.start:
            self.log('deferred', arm_id, task.id, '%.6f' % gate.until)
            self.push(gate.until, ACTION_START, (arm_id, self.version[arm_id]))
            return
        self.queues[arm_id].pop(0)
        flight = _Flight(task, arm_id, self.now, action.end,
                         self.now + arm.pick)
        self.flying[arm_id] = flight
        self.result.starts.append(StartRecord(
            self.now, task.id, arm_id, arm.duration, action.til_enable,
            tuple(known)))
        self.log(ACTION_START, arm_id, task.id)
        self.push(flight.grasp, GRASP, flight)
        self.push(flight.end, ACTION_END, flight)
        self.start_ticking()

    def on_start(self, payload):
        arm_id, version = payload
        if version == self.version[arm_id]:
            self.dispatch(arm_id)

    def on_grasp(self, flight):
        part = self.parts[flight.task.part]
        self.parts[part.part] = replace(part, location=HELD, where=flight.arm,
                                        tray=None, pose_error=0.0,
                                        slipping=False)
        self.log(GRASP, flight.arm, flight.task.id)

    def on_end(self, flight):
        del self.flying[flight.arm]
        task = flight.task
        if not flight.dropped:
            part = self.parts[task.part]
            self.parts[part.part] = replace(part, location=ON_TRAY,
                                            where=task.slot, tray=task.tray,
                                            slipping=False)
            self.result.carries.append(Carry(task.id, flight.arm, task.part,
                                             flight.grasp, self.now))
            self.log(ACTION_END, flight.arm, task.id, 'placed')
            self.dispatch(flight.arm)
        else:
            self.log(ACTION_END, flight.arm, task.id, 'dropped')
            self.recover(flight)
        if not self.flying and not any(self.queues.values()) and \
           not self.pool:
            self.push(self.now, ORDER_COMPLETE)

    def recover(self, flight):
        task = flight.task
        if task.attempt >= self.config.executor.max_retries:
            logger.info('%s: giving up on %s after %d attempts', self.strategy,
                        task.part, task.attempt + 1)
            self.result.lost_tasks.append(task)
            self.dispatch(flight.arm)
            return
        base = task.id.split('.')[0]
        retry = replace(task, id='%s.r%d' % (base, task.attempt + 1),
                        attempt=task.attempt + 1)
        self.rank[retry.id] = self.rank[base]
        self.log('recovery', flight.arm, retry.id)
        if self.strategy == REPLAN_TIL:
            self.pool.append(retry)
            self.replan('recovery %s' % retry.id)
        else:
            self.queues[flight.arm].append((retry, 0.0))
            self.dispatch(flight.arm)

    def on_message(self, delivery):
        msg = delivery.message
        self.log(MESSAGE_ARRIVAL, detail=msg.event_id)
        if not self.informed:
            return
        self.known = build_tils(self.deliveries, self.now,
                                self.config.planner.margin)
        if self.strategy == REPLAN_TIL:
            self.replan('message %s' % msg.event_id)

    def replan(self, reason):
        pending = [t for q in self.queues.values() for t, _ in q] + self.pool
        if not pending:
            return
        pending.sort(key=lambda t: (self.rank[t.id], t.attempt))
        arms = list(self.arms.values())
        in_flight = [DurativeAction(f.task.id, f.arm, f.start,
                                    f.end - f.start)
                     for f in self.flying.values()]
        incumbent = Schedule(tuple(
            DurativeAction(t.id, arm, planned, self.arms[arm].duration,
                           self.policy.gated(self.arms[arm]))
            for arm, q in self.queues.items() for t, planned in q))
        plan = replan(pending, in_flight, arms, self.windows(self.now),
                      self.now, self.policy, self.config.planner.priority,
                      incumbent)
        self.log('replan', detail='%s; makespan %.6f' % (reason, plan.makespan))
        self.install(plan, reason)
        for arm in sorted(self.arms):
            self.dispatch(arm)

    def start_ticking(self):
        if self.ticking:
            return
        self.ticking = True
        k = int(math.floor(self.now / TICK + 1e-9)) + 1
        self.push(k * TICK, ACCEL_TICK, k)

    def accel(self, t):
        trace = self.trace
        if t < trace.first or t > trace.last:
            return 0.0
        i = int(numpy.searchsorted(trace.t, t, side='right')) - 1
        return float(self.lateral[i])

    def secured(self, t):
        if self.informed and any(w.start <= t < w.end for w in self.known):
            return self.trays
        return ()

    def on_tick(self, k):
        t = self.now
        a_mag = self.accel(t)
        held = dict((s.part, s.where) for s in self.parts.values()
                    if s.location == HELD)
        states, incidents = apply_accel(self.parts.values(), a_mag, TICK,
                                        self.config.disturbance, self.rng, t,
                                        self.secured(t))
        self.parts = dict((s.part, s) for s in states)
        self.result.ticks += 1
        if self.keep_ticks:
            self.log(ACCEL_TICK, detail='%.6f' % a_mag)
        for incident in incidents:
            self.result.incidents.append(incident)
            if incident.kind != DROP:
                continue
            flight = self.flying[held[incident.part]]
            flight.dropped = True
            self.result.carries.append(Carry(
                flight.task.id, flight.arm, incident.part, flight.grasp, t,
                True))
            self.log('drop', flight.arm, flight.task.id, '%.6f' % a_mag)
        if self.flying or any(s.location == ON_TRAY
                              for s in self.parts.values()):
            self.push((k + 1) * TICK, ACCEL_TICK, k + 1)
        else:
            self.ticking = False

    def on_complete(self, _):
        if self.flying or any(self.queues.values()) or self.pool:
            return
        self.log(ORDER_COMPLETE)
        self.finished = True


def simulate(config, keep_ticks=False):
    """ Run ``config.strategy`` on ``config.seed``.

    :param keep_ticks: also record every physics tick in the timeline
    :returns: :py:class:`RunResult`
    """
    return Simulation(config, keep_ticks).run()


def audit_starts(result, policy=DEFAULT_POLICY):
    """ Gated starts that a window known at dispatch should have blocked. """
    return [s for s in result.starts
            if s.til_enable and
            policy.blocking(s.time, s.duration, sorted(s.windows))]


def hazard_exposures(result, events=None):
    """ Carries that overlapped the hazard interval of a road event. """
    if events is None:
        events = result.events
    announced = dict((d.message.event_id, not d.lost)
                     for d in result.deliveries)
    res = []
    for c in result.carries:
        for e in events:
            if e.hazard.overlaps(c.grasp, c.release):
                res.append(Exposure(c.task, c.arm, e.id,
                                    announced.get(e.id, False)))
    return res
