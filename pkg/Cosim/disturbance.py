"""
Threshold model mapping lateral trailer acceleration to grasp slip,
part drops and pose drift of parts resting on trays.

For a held part, ``a > a_drop`` drops it and ``a_slip < a <= a_drop``
grows its pose error by ``k_pose * (a - a_slip) * dt``. Parts on an
unsecured tray drift by the same law whenever ``a > a_slip``. Parts in
bins or in staging are walled in and never move.
"""

from dataclasses import dataclass, replace

from Cosim.config import A_DROP, A_SLIP, K_POSE
from Cosim.exceptions import CosimError
from Cosim.motion import peak_magnitude

IN_BIN = 'bin'
HELD = 'held'
ON_TRAY = 'tray'
STAGED = 'staged'

SAFE = 'safe'
SLIP = 'slip'
DROP = 'drop'


@dataclass(frozen=True)
class DisturbanceParams:
    a_slip: float = A_SLIP
    a_drop: float = A_DROP
    k_pose: float = K_POSE
    threshold_jitter: float = 0.0

    def __post_init__(self):
        if not 0 < self.a_slip < self.a_drop:
            raise CosimError('thresholds must satisfy 0 < a_slip < a_drop')
        if self.k_pose < 0:
            raise CosimError('k_pose must be non-negative')
        if self.threshold_jitter < 0:
            raise CosimError('threshold_jitter must be non-negative')


@dataclass(frozen=True)
class PartState:
    """ ``where`` is the arm for held parts and the slot for tray parts. """
    part: str
    part_type: str = None
    location: str = IN_BIN
    where: str = None
    tray: str = None
    pose_error: float = 0.0
    slipping: bool = False

    def __post_init__(self):
        if self.pose_error < 0:
            raise CosimError('pose error of %s is negative' % self.part)
        if self.location not in (IN_BIN, HELD, ON_TRAY, STAGED):
            raise CosimError('unknown location %r' % self.location)


@dataclass(frozen=True)
class Incident:
    t: float
    part: str
    kind: str
    a_mag: float


def _thresholds(params, rng):
    if params.threshold_jitter > 0:
        slip = params.a_slip + rng.normal(0.0, params.threshold_jitter)
        drop = params.a_drop + rng.normal(0.0, params.threshold_jitter)
        return slip, max(slip, drop)
    return params.a_slip, params.a_drop


def apply_accel(states, a_mag, dt, params, rng=None, t=0.0, secured=()):
    """ Advance every part by ``dt`` seconds at lateral magnitude
    ``a_mag``.

    :param states: iterable of :py:class:`PartState`
    :param secured: trays whose fixtures are engaged
    :returns: ``(states, incidents)``; unchanged parts are returned as
      the same objects
    """
    if not dt > 0:
        raise CosimError('dt must be positive')
    states = list(states)
    slip_at, drop_at = _thresholds(params, rng)
    if a_mag <= slip_at and not any(s.slipping for s in states):
        return states, []
    res = []
    incidents = []
    for s in states:
        exposed = s.location == HELD or \
            (s.location == ON_TRAY and s.tray not in secured)
        if not exposed:
            res.append(s if not s.slipping else replace(s, slipping=False))
        elif s.location == HELD and a_mag > drop_at:
            res.append(replace(s, location=STAGED, where=None, tray=None,
                               slipping=False))
            incidents.append(Incident(t, s.part, DROP, a_mag))
        elif a_mag > slip_at:
            if not s.slipping:
                incidents.append(Incident(t, s.part, SLIP, a_mag))
            res.append(replace(
                s, pose_error=s.pose_error + params.k_pose * (a_mag - slip_at) * dt,
                slipping=True))
        elif s.slipping:
            res.append(replace(s, slipping=False))
        else:
            res.append(s)
    return res, incidents


def classify(peak, params):
    """ Ties go to the milder class. """
    if peak > params.a_drop:
        return DROP
    elif peak > params.a_slip:
        return SLIP
    return SAFE


def window_exposure(trace, action_interval, params):
    return classify(peak_magnitude(trace, action_interval), params)


@dataclass(frozen=True)
class CellState:
    """ Snapshot of every part in the cell. """
    parts: tuple = ()

    def on_tray(self):
        """ Slot to part state, for parts resting on a tray. """
        return dict((s.where, s) for s in self.parts if s.location == ON_TRAY)

    def located(self, location):
        return [s for s in self.parts if s.location == location]
