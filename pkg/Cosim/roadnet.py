"""
Road events along the route, the hazard signage announcing them, and
the lossy, delayed channel that carries the announcements to the cell.

The channel is a constant latency plus uniform jitter with Bernoulli
loss. Lost announcements are not retransmitted.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

from Cosim.config import EVENT_KINDS, SIGN_LEAD
from Cosim.core import Interval, time_point
from Cosim.exceptions import RoadError

logger = logging.getLogger(__name__)

AXIS = {'emergency_brake': 'x', 'lane_change': 'y'}


@dataclass(frozen=True)
class RoadEvent:
    id: str
    kind: str
    onset: float
    duration: float
    peak_accel: float
    sign_lead: float = SIGN_LEAD

    def __post_init__(self):
        if self.kind not in EVENT_KINDS:
            raise RoadError('event %s: unknown kind %r' % (self.id, self.kind))
        time_point(self.onset)
        if not self.duration > 0:
            raise RoadError('event %s: duration must be positive' % self.id)
        if self.sign_lead < 0:
            raise RoadError('event %s: sign_lead must be non-negative'
                            % self.id)
        if self.onset - self.sign_lead < 0:
            raise RoadError('event %s: sign would be shown before the start'
                            % self.id)
        if self.kind == 'emergency_brake' and self.peak_accel > 0:
            raise RoadError('event %s: braking decelerates along -x'
                            % self.id)

    @property
    def axis(self):
        return AXIS[self.kind]

    @property
    def hazard(self):
        return Interval(self.onset, self.onset + self.duration)


@dataclass(frozen=True)
class CitsMessage:
    event_id: str
    sent_at: float
    window: Interval
    kind: str

    def __post_init__(self):
        if self.sent_at > self.window.start:
            raise RoadError('message for %s sent after hazard start'
                            % self.event_id)


@dataclass(frozen=True)
class ChannelModel:
    """ ``delay_sampler(rng)``, when given, replaces the uniform jitter
    draw and must return a non-negative extra delay. """
    base_latency: float = 0.05
    jitter_max: float = 0.01
    loss_prob: float = 0.0
    delay_sampler: Optional[Callable] = field(default=None, compare=False)

    def __post_init__(self):
        if self.base_latency < 0:
            raise RoadError('base_latency must be non-negative')
        if self.jitter_max < 0:
            raise RoadError('jitter_max must be non-negative')
        if not 0 <= self.loss_prob <= 1:
            raise RoadError('loss_prob out of [0,1]')


@dataclass(frozen=True)
class Delivery:
    message: CitsMessage
    arrived_at: Optional[float]

    @property
    def lost(self):
        return self.arrived_at is None

    def known_by(self, now):
        return not self.lost and self.arrived_at <= now


@dataclass(frozen=True)
class RoadParams:
    """ Generation parameters for random road events. """
    mix: tuple = (('emergency_brake', 0.5), ('lane_change', 0.5))
    peak_range: tuple = (('emergency_brake', (4.0, 8.0)),
                         ('lane_change', (2.0, 4.0)))
    duration_range: tuple = (2.0, 5.0)
    sign_lead: float = SIGN_LEAD


def generate_events(rate, horizon, params, rng, reserved=()):
    """ Poisson road events at ``rate`` per hour over ``[0, horizon]``.

    Every arrival consumes the same number of draws whether it is kept or
    not, so event lists for different horizons share their prefix.
    Generated ids skip those in ``reserved``.
    """
    if rate < 0:
        raise RoadError('rate must be non-negative')
    if rate == 0:
        return []
    kinds = [k for k, _ in params.mix]
    weights = [w for _, w in params.mix]
    total = sum(weights)
    if total <= 0:
        raise RoadError('event mix has no weight')
    probs = [w / total for w in weights]
    peaks = dict(params.peak_range)
    lo_dur, hi_dur = params.duration_range
    taken = set(reserved)
    serial = 0
    events = []
    t = 0.0
    while True:
        t += rng.exponential(3600.0 / rate)
        if t > horizon:
            break
        kind = kinds[int(rng.choice(len(kinds), p=probs))]
        lo, hi = peaks[kind]
        peak = rng.uniform(lo, hi)
        duration = rng.uniform(lo_dur, hi_dur)
        sign = 1.0 if rng.random() < 0.5 else -1.0
        if t < params.sign_lead or t + duration > horizon:
            continue
        if kind == 'emergency_brake':
            peak = -peak
        else:
            peak *= sign
        while 'ev%03d' % serial in taken:
            serial += 1
        event_id = 'ev%03d' % serial
        taken.add(event_id)
        events.append(RoadEvent(event_id, kind, float(t),
                                float(duration), float(peak),
                                params.sign_lead))
    logger.debug('generated %d road events over %g s', len(events), horizon)
    return events


def signage(events):
    return [CitsMessage(e.id, e.onset - e.sign_lead, e.hazard, e.kind)
            for e in events]


def transmit(msg, ch, rng):
    """ Send one message. Both variates are drawn for every message. """
    u = rng.random()
    if ch.delay_sampler is None:
        extra = rng.uniform(0.0, ch.jitter_max)
    else:
        extra = float(ch.delay_sampler(rng))
        if extra < 0:
            raise RoadError('delay sampler returned a negative delay')
    if u < ch.loss_prob:
        return Delivery(msg, None)
    return Delivery(msg, msg.sent_at + ch.base_latency + extra)


def broadcast(messages, ch, rng):
    return [transmit(m, ch, rng) for m in messages]
