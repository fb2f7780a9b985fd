"""
Scenario files: one JSON document selecting the strategy, the trace
source, road events, channel, disturbance thresholds, the planner, the
order and the arm roster. Every key except ``order`` has a default
(see :py:class:`defaults`); a file naming only the strategy and the
order is valid.

Relative paths are resolved against the directory of the scenario file
and stored absolute, so a resolved configuration can be written out and
read back from anywhere.
"""

import json
import logging
import math
import os
from dataclasses import dataclass, field, replace

from Cosim.config import (A_DROP, A_SLIP, ARM_KINDS, EVENT_KINDS, K_POSE,
                          MARGIN, POSE_TOLERANCE, SAMPLE_PERIOD, SIGN_LEAD,
                          STRATEGIES, TIL_MODES, TIME_CAP)
from Cosim.disturbance import DisturbanceParams
from Cosim.exceptions import ConfigError, CosimError
from Cosim.planner import Arm, Policy
from Cosim.roadnet import ChannelModel, RoadEvent, RoadParams
from Cosim.scoring import Order, OrderPart, Shipment

logger = logging.getLogger(__name__)


class defaults:
    strategy = 'static'
    seed = 0
    trace_source = 'synth'
    horizon = 600.0
    noise_rms = 0.0
    period = SAMPLE_PERIOD
    rate_per_hour = 0.0
    mix = {'emergency_brake': 0.5, 'lane_change': 0.5}
    peak_range = {'emergency_brake': [4.0, 8.0], 'lane_change': [2.0, 4.0]}
    duration_range = [2.0, 5.0]
    sign_lead = SIGN_LEAD
    base_latency = 0.05
    jitter_max = 0.01
    loss_prob = 0.0
    a_slip = A_SLIP
    a_drop = A_DROP
    k_pose = K_POSE
    threshold_jitter = 0.0
    margin = MARGIN
    til_mode = 'at_start'
    til_arm_kinds = list(ARM_KINDS)
    priority = 'order'
    max_retries = 1
    time_cap = TIME_CAP
    pose_tolerance = POSE_TOLERANCE
    arms = [
        {'id': 'ind0', 'kind': 'industrial', 'pick': 4.0, 'transfer': 7.0,
         'place': 4.0},
        {'id': 'mod1', 'kind': 'modular', 'pick': 5.0, 'transfer': 10.0,
         'place': 5.0},
        {'id': 'mod2', 'kind': 'modular', 'pick': 5.0, 'transfer': 10.0,
         'place': 5.0},
    ]


SECTIONS = {
    '': ('strategy', 'seed', 'trace', 'road', 'channel', 'disturbance',
         'planner', 'executor', 'order', 'arms'),
    'trace': ('source', 'path', 'horizon', 'noise_rms', 'period'),
    'road': ('events', 'rate_per_hour', 'mix', 'peak_range',
             'duration_range', 'sign_lead'),
    'channel': ('base_latency', 'jitter_max', 'loss_prob'),
    'disturbance': ('a_slip', 'a_drop', 'k_pose', 'threshold_jitter'),
    'planner': ('margin', 'til_mode', 'til_arm_kinds', 'priority'),
    'executor': ('max_retries', 'time_cap'),
    'order': ('pose_tolerance', 'shipments'),
}
ARM_KEYS = ('id', 'kind', 'pick', 'transfer', 'place', 'reach')


@dataclass(frozen=True)
class TraceSource:
    """ ``file`` replays ``path``; ``synth`` builds vibration plus event
    pulses over ``[0, horizon]``. """
    source: str = defaults.trace_source
    path: str = None
    horizon: float = defaults.horizon
    noise_rms: float = defaults.noise_rms
    period: float = defaults.period


@dataclass(frozen=True)
class RoadSpec:
    events: tuple = ()
    rate_per_hour: float = defaults.rate_per_hour
    params: RoadParams = RoadParams()


@dataclass(frozen=True)
class PlannerSpec:
    margin: float = defaults.margin
    til_mode: str = defaults.til_mode
    til_arm_kinds: tuple = tuple(defaults.til_arm_kinds)
    priority: str = defaults.priority

    def policy(self):
        return Policy(self.til_mode, self.til_arm_kinds)


@dataclass(frozen=True)
class ExecutorSpec:
    max_retries: int = defaults.max_retries
    time_cap: float = defaults.time_cap


@dataclass(frozen=True)
class ScenarioConfig:
    order: Order
    strategy: str = defaults.strategy
    seed: int = defaults.seed
    trace: TraceSource = TraceSource()
    road: RoadSpec = RoadSpec()
    channel: ChannelModel = ChannelModel()
    disturbance: DisturbanceParams = DisturbanceParams()
    planner: PlannerSpec = PlannerSpec()
    executor: ExecutorSpec = ExecutorSpec()
    arms: tuple = field(default=())
    name: str = field(default='', compare=False)

    def with_run(self, strategy=None, seed=None):
        """ Copy with the per-run selections replaced. """
        changes = {}
        if strategy is not None:
            if strategy not in STRATEGIES:
                raise ConfigError('strategy', 'unknown strategy %r (expected '
                                  'one of %s)' % (strategy,
                                                  ', '.join(STRATEGIES)))
            changes['strategy'] = strategy
        if seed is not None:
            changes['seed'] = _seed(seed, 'seed')
        return replace(self, **changes)

    @property
    def horizon(self):
        return self.trace.horizon


class _Section:
    """ Typed access to one JSON object, naming keys by their dotted
    path in errors. """
    def __init__(self, data, prefix=''):
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError(prefix, 'expected an object')
        self.data = data
        self.prefix = prefix
        allowed = SECTIONS.get(prefix)
        if allowed is not None:
            for key in data:
                if key not in allowed:
                    raise ConfigError(self.key(key), 'unknown key')

    def key(self, name):
        return '%s.%s' % (self.prefix, name) if self.prefix else name

    def sub(self, name):
        return _Section(self.data.get(name), self.key(name))

    def get(self, name, default):
        return self.data.get(name, default)

    def number(self, name, default, positive=False, minimum=None,
               maximum=None, msg=None):
        value = self.data.get(name, default)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(self.key(name), 'expected a number, got %r'
                              % (value,))
        value = float(value)
        if not math.isfinite(value):
            raise ConfigError(self.key(name), 'must be finite')
        if positive and not value > 0:
            raise ConfigError(self.key(name), msg or 'must be positive')
        if minimum is not None and value < minimum:
            raise ConfigError(self.key(name), msg or 'must be at least %g'
                              % minimum)
        if maximum is not None and value > maximum:
            raise ConfigError(self.key(name), msg or 'must be at most %g'
                              % maximum)
        return value

    def choice(self, name, default, options):
        value = self.data.get(name, default)
        if value not in options:
            raise ConfigError(self.key(name), 'unknown %s %r (expected one of '
                              '%s)' % (name, value, ', '.join(options)))
        return value


def _seed(value, key):
    if isinstance(value, bool) or not isinstance(value, int) or \
       not 0 <= value < 2 ** 64:
        raise ConfigError(key, 'seed must be an unsigned 64-bit integer')
    return value


def _pair(value, key):
    if not isinstance(value, (list, tuple)) or len(value) != 2 or \
       not all(isinstance(x, (int, float)) for x in value) or \
       not 0 <= value[0] <= value[1]:
        raise ConfigError(key, 'expected [low, high] with 0 <= low <= high')
    return (float(value[0]), float(value[1]))


def _trace(section, base_dir):
    source = section.choice('source', defaults.trace_source, ('file', 'synth'))
    path = section.get('path', None)
    if source == 'file':
        if not path:
            raise ConfigError(section.key('path'), 'file trace needs a path')
        path = os.path.abspath(os.path.join(base_dir, path))
        if not os.path.isfile(path):
            raise ConfigError(section.key('path'), 'no such file %s' % path)
    elif path is not None:
        raise ConfigError(section.key('path'), 'only file traces take a path')
    return TraceSource(
        source, path,
        section.number('horizon', defaults.horizon, positive=True),
        section.number('noise_rms', defaults.noise_rms, minimum=0),
        section.number('period', defaults.period, positive=True))


def _road(section, horizon, synth):
    sign_lead = section.number('sign_lead', defaults.sign_lead, minimum=0)
    mix = section.get('mix', defaults.mix)
    peak_range = section.get('peak_range', defaults.peak_range)
    for name, value in (('mix', mix), ('peak_range', peak_range)):
        if not isinstance(value, dict) or set(value) - set(EVENT_KINDS):
            raise ConfigError(section.key(name), 'expected an object keyed '
                              'by event kind')
    if not all(isinstance(w, (int, float)) for w in mix.values()):
        raise ConfigError(section.key('mix'), 'expected numeric weights')
    weights = tuple((k, float(mix[k])) for k in sorted(mix))
    if any(w < 0 for _, w in weights) or not sum(w for _, w in weights) > 0:
        raise ConfigError(section.key('mix'), 'weights must be non-negative '
                          'and not all zero')
    peaks = tuple((k, _pair(peak_range[k], section.key('peak_range.' + k)))
                  for k in sorted(peak_range))
    kinds = set(k for k, _ in peaks)
    for k, w in weights:
        if w > 0 and k not in kinds:
            raise ConfigError(section.key('peak_range'), 'no range for %s' % k)
    durations = _pair(section.get('duration_range', defaults.duration_range),
                      section.key('duration_range'))
    if not durations[0] > 0:
        raise ConfigError(section.key('duration_range'),
                          'durations must be positive')
    params = RoadParams(weights, peaks, durations, sign_lead)
    raw = section.get('events', [])
    if not isinstance(raw, list):
        raise ConfigError(section.key('events'), 'expected a list')
    events = []
    for i, e in enumerate(raw):
        key = section.key('events[%d]' % i)
        if not isinstance(e, dict):
            raise ConfigError(key, 'expected an object')
        unknown = set(e) - set(('id', 'kind', 'onset', 'duration',
                                'peak_accel', 'sign_lead'))
        if unknown:
            raise ConfigError(key, 'unknown key %s' % sorted(unknown)[0])
        try:
            event = RoadEvent(str(e.get('id', 'road%02d' % i)), e.get('kind'),
                              float(e['onset']), float(e['duration']),
                              float(e['peak_accel']),
                              float(e.get('sign_lead', sign_lead)))
        except KeyError as err:
            raise ConfigError(key, 'missing %s' % err.args[0])
        except (TypeError, ValueError):
            raise ConfigError(key, 'expected numbers')
        except CosimError as err:
            raise ConfigError(key, str(err))
        if synth and event.onset + event.duration > horizon:
            raise ConfigError(key, 'extends past trace horizon %g' % horizon)
        events.append(event)
    ids = [e.id for e in events]
    if len(set(ids)) != len(ids):
        raise ConfigError(section.key('events'), 'repeated event id')
    rate = section.number('rate_per_hour', defaults.rate_per_hour, minimum=0)
    return RoadSpec(tuple(events), rate, params)


def _channel(section):
    return ChannelModel(
        section.number('base_latency', defaults.base_latency, minimum=0),
        section.number('jitter_max', defaults.jitter_max, minimum=0),
        section.number('loss_prob', defaults.loss_prob, minimum=0, maximum=1,
                       msg='loss_prob out of [0,1]'))


def _disturbance(section):
    a_slip = section.number('a_slip', defaults.a_slip, positive=True)
    a_drop = section.number('a_drop', defaults.a_drop, positive=True)
    if not a_slip < a_drop:
        raise ConfigError(section.key('a_drop'), 'must exceed a_slip')
    return DisturbanceParams(
        a_slip, a_drop,
        section.number('k_pose', defaults.k_pose, minimum=0),
        section.number('threshold_jitter', defaults.threshold_jitter,
                       minimum=0))


def _planner(section):
    kinds = section.get('til_arm_kinds', defaults.til_arm_kinds)
    if not isinstance(kinds, list) or any(k not in ARM_KINDS for k in kinds):
        raise ConfigError(section.key('til_arm_kinds'), 'expected a list of '
                          'arm kinds (%s)' % ', '.join(ARM_KINDS))
    return PlannerSpec(
        section.number('margin', defaults.margin, minimum=0),
        section.choice('til_mode', defaults.til_mode, TIL_MODES),
        tuple(kinds),
        section.choice('priority', defaults.priority, ('order', 'lpt')))


def _executor(section):
    retries = section.get('max_retries', defaults.max_retries)
    if isinstance(retries, bool) or not isinstance(retries, int) or \
       retries < 0:
        raise ConfigError(section.key('max_retries'),
                          'expected a non-negative integer')
    return ExecutorSpec(retries, section.number('time_cap', defaults.time_cap,
                                                positive=True))


def _order(section):
    shipments = section.get('shipments', None)
    if not isinstance(shipments, list) or not shipments:
        raise ConfigError(section.key('shipments'), 'expected a non-empty '
                          'list of shipments')
    res = []
    n = 0
    for i, s in enumerate(shipments):
        key = section.key('shipments[%d]' % i)
        if not isinstance(s, dict) or 'tray' not in s or \
           not isinstance(s.get('parts'), list) or not s['parts']:
            raise ConfigError(key, 'expected {"tray": ..., "parts": [...]}')
        parts = []
        for j, p in enumerate(s['parts']):
            pkey = '%s.parts[%d]' % (key, j)
            if not isinstance(p, dict):
                raise ConfigError(pkey, 'expected an object')
            for name in ('type', 'slot', 'bin'):
                if not isinstance(p.get(name), str):
                    raise ConfigError('%s.%s' % (pkey, name),
                                      'expected a string')
            n += 1
            pose = p.get('pose', [0.0, 0.0, 0.0])
            if not isinstance(pose, list) or len(pose) != 3:
                raise ConfigError(pkey + '.pose', 'expected [x, y, yaw]')
            parts.append(OrderPart(str(p.get('part', 'p%02d' % n)), p['type'],
                                   p['slot'], p['bin'],
                                   tuple(float(x) for x in pose)))
        res.append(Shipment(str(s['tray']), tuple(parts)))
    try:
        return Order(tuple(res), section.number(
            'pose_tolerance', defaults.pose_tolerance, minimum=0))
    except CosimError as err:
        raise ConfigError(section.prefix, str(err))


def _arms(raw):
    if not isinstance(raw, list) or not raw:
        raise ConfigError('arms', 'expected a non-empty list of arms')
    arms = []
    for i, a in enumerate(raw):
        section = _Section(a, 'arms[%d]' % i)
        for key in section.data:
            if key not in ARM_KEYS:
                raise ConfigError(section.key(key), 'unknown key')
        reach = section.get('reach', None)
        if reach is not None:
            if not isinstance(reach, list):
                raise ConfigError(section.key('reach'), 'expected a list')
            reach = frozenset(reach)
        try:
            arms.append(Arm(str(section.get('id', 'arm%d' % i)),
                            section.choice('kind', None, ARM_KINDS),
                            section.number('pick', None, positive=True),
                            section.number('transfer', None, positive=True),
                            section.number('place', None, positive=True),
                            reach))
        except CosimError as err:
            if isinstance(err, ConfigError):
                raise
            raise ConfigError(section.prefix, str(err))
    ids = [a.id for a in arms]
    if len(set(ids)) != len(ids):
        raise ConfigError('arms', 'repeated arm id')
    return tuple(arms)


def parse_config(data, base_dir='.', name=''):
    """ Build a :py:class:`ScenarioConfig` from decoded JSON. """
    top = _Section(data)
    if 'order' not in top.data:
        raise ConfigError('order', 'missing')
    strategy = top.choice('strategy', defaults.strategy, STRATEGIES)
    trace = _trace(top.sub('trace'), base_dir)
    return ScenarioConfig(
        order=_order(top.sub('order')),
        strategy=strategy,
        seed=_seed(top.get('seed', defaults.seed), 'seed'),
        trace=trace,
        road=_road(top.sub('road'), trace.horizon, trace.source == 'synth'),
        channel=_channel(top.sub('channel')),
        disturbance=_disturbance(top.sub('disturbance')),
        planner=_planner(top.sub('planner')),
        executor=_executor(top.sub('executor')),
        arms=_arms(top.get('arms', defaults.arms)),
        name=name)


def load_config(path):
    """ Read and validate a scenario file. A summary goes to the info log
    and the full resolved configuration, absolute paths included, to the
    debug log. """
    try:
        with open(path, encoding='utf-8') as f:
            data = json.load(f)
    except OSError as err:
        raise ConfigError('', err.strerror or str(err), path)
    except ValueError as err:
        raise ConfigError('', 'invalid JSON: %s' % err, path)
    try:
        config = parse_config(data, os.path.dirname(os.path.abspath(path)),
                              os.path.splitext(os.path.basename(path))[0])
    except ConfigError as err:
        raise ConfigError(err.key, err.msg, path)
    logger.info('scenario %s: %s seed %d, %d arms, %d road events, %s trace',
                config.name, config.strategy, config.seed, len(config.arms),
                len(config.road.events), config.trace.source)
    logger.debug('resolved %s: %s', path,
                 json.dumps(to_dict(config), sort_keys=True))
    return config


def to_dict(config):
    """ The fully resolved configuration as JSON-ready data. Parsing the
    result gives back an equal configuration. """
    road = config.road
    return {
        'strategy': config.strategy,
        'seed': config.seed,
        'trace': dict((k, v) for k, v in (
            ('source', config.trace.source), ('path', config.trace.path),
            ('horizon', config.trace.horizon),
            ('noise_rms', config.trace.noise_rms),
            ('period', config.trace.period)) if v is not None),
        'road': {
            'events': [{'id': e.id, 'kind': e.kind, 'onset': e.onset,
                        'duration': e.duration, 'peak_accel': e.peak_accel,
                        'sign_lead': e.sign_lead} for e in road.events],
            'rate_per_hour': road.rate_per_hour,
            'mix': dict(road.params.mix),
            'peak_range': dict((k, list(v))
                               for k, v in road.params.peak_range),
            'duration_range': list(road.params.duration_range),
            'sign_lead': road.params.sign_lead,
        },
        'channel': {'base_latency': config.channel.base_latency,
                    'jitter_max': config.channel.jitter_max,
                    'loss_prob': config.channel.loss_prob},
        'disturbance': {'a_slip': config.disturbance.a_slip,
                        'a_drop': config.disturbance.a_drop,
                        'k_pose': config.disturbance.k_pose,
                        'threshold_jitter':
                        config.disturbance.threshold_jitter},
        'planner': {'margin': config.planner.margin,
                    'til_mode': config.planner.til_mode,
                    'til_arm_kinds': list(config.planner.til_arm_kinds),
                    'priority': config.planner.priority},
        'executor': {'max_retries': config.executor.max_retries,
                     'time_cap': config.executor.time_cap},
        'order': {
            'pose_tolerance': config.order.pose_tolerance,
            'shipments': [{'tray': s.tray, 'parts': [
                {'part': p.part, 'type': p.type, 'slot': p.slot,
                 'bin': p.bin, 'pose': list(p.pose)} for p in s.parts]}
                for s in config.order.shipments],
        },
        'arms': [dict([('id', a.id), ('kind', a.kind), ('pick', a.pick),
                       ('transfer', a.transfer), ('place', a.place)] +
                      ([('reach', sorted(a.reach))] if a.reach is not None
                       else []))
                 for a in config.arms],
    }


def dump_config(config, path):
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(to_dict(config), f, indent=2, sort_keys=True)
        f.write('\n')
