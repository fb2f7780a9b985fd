"""
Kit-building KPIs: per-shipment presence, pose and all-parts bonus
points, the task goal score (achieved / maximum points) and the total
process time.

Each part scores one presence point when a part of the right type sits
in its slot and one pose point when, in addition, its pose error is
within tolerance. A shipment whose parts all score both points earns a
bonus equal to its part count, so a perfect shipment of ``n`` parts is
worth ``3 n``.
"""

import logging
from dataclasses import dataclass
from typing import Optional

from Cosim.config import POSE_TOLERANCE
from Cosim.exceptions import ScoringError
from Cosim.planner import Task
from Cosim.util import mean

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class OrderPart:
    part: str
    type: str
    slot: str
    bin: str
    pose: tuple = (0.0, 0.0, 0.0)


@dataclass(frozen=True)
class Shipment:
    tray: str
    parts: tuple

    def __post_init__(self):
        slots = [p.slot for p in self.parts]
        if len(set(slots)) != len(slots):
            raise ScoringError('shipment on %s repeats a slot' % self.tray)

    @property
    def max_points(self):
        return 3 * len(self.parts)


@dataclass(frozen=True)
class Order:
    shipments: tuple
    pose_tolerance: float = POSE_TOLERANCE

    def __post_init__(self):
        slots = [p.slot for s in self.shipments for p in s.parts]
        if len(set(slots)) != len(slots):
            raise ScoringError('order repeats a tray slot')
        if self.pose_tolerance < 0:
            raise ScoringError('pose tolerance must be non-negative')

    def parts(self):
        return [p for s in self.shipments for p in s.parts]

    def max_points(self):
        return sum(s.max_points for s in self.shipments)

    def tasks(self):
        """ One pick-and-place task per part, in listing order. """
        res = []
        for s in self.shipments:
            for p in s.parts:
                res.append(Task('t%02d' % (len(res) + 1), p.part, p.bin,
                                p.slot, s.tray))
        return res


@dataclass(frozen=True)
class ShipmentScore:
    tray: str
    presence: int
    pose: int
    bonus: int
    max_points: int

    @property
    def total(self):
        return self.presence + self.pose + self.bonus


@dataclass(frozen=True)
class ScoreReport:
    shipments: tuple
    tpt: float
    complete: bool = True

    @property
    def total(self):
        return sum(s.total for s in self.shipments)

    @property
    def max_points(self):
        return sum(s.max_points for s in self.shipments)

    @property
    def tgs(self):
        return self.total / self.max_points if self.max_points else 1.0

    def rows(self):
        """ ``(tray, presence, pose, bonus, points, max_points)`` per
        shipment. """
        return [(s.tray, s.presence, s.pose, s.bonus, s.total, s.max_points)
                for s in self.shipments]


def score(result, order):
    """ Score the final cell state of a run.

    :param result: anything with ``cell`` (final cell state), ``tpt``
      and ``complete``
    """
    occupants = result.cell.on_tray()
    shipments = []
    for s in order.shipments:
        presence = pose = 0
        for p in s.parts:
            occupant = occupants.get(p.slot)
            if occupant is None or occupant.part_type != p.type:
                continue
            presence += 1
            if occupant.pose_error <= order.pose_tolerance:
                pose += 1
        n = len(s.parts)
        bonus = n if presence == n and pose == n else 0
        shipments.append(ShipmentScore(s.tray, presence, pose, bonus,
                                       s.max_points))
    return ScoreReport(tuple(shipments), result.tpt, result.complete)


@dataclass(frozen=True)
class ComparisonRow:
    label: str
    points: float
    tgs: float
    tpt: float
    ratio: Optional[float]


def compare(reports, ratios=True, baseline='static'):
    """ Tabulate labelled reports, sorted by label.

    :param reports: list of ``(label, ScoreReport)``
    :param ratios: add ``tpt / tpt[baseline]``; needs a ``baseline``
      report
    """
    if not reports:
        raise ScoringError('nothing to compare')
    base = None
    if ratios:
        matches = [r for label, r in reports if label == baseline]
        if not matches:
            raise ScoringError("missing '%s' report for TPT ratios"
                               % baseline)
        base = matches[0].tpt
        if base <= 0:
            raise ScoringError("'%s' report has no process time" % baseline)
    rows = [ComparisonRow(label, r.total, r.tgs, r.tpt,
                          r.tpt / base if ratios else None)
            for label, r in reports]
    return sorted(rows, key=lambda r: r.label)


def aggregate(labelled, ratios=True, baseline='static'):
    """ Per-label means of a seed sweep.

    :param labelled: list of ``(label, ScoreReport)`` with repeated labels
    """
    groups = {}
    for label, r in labelled:
        groups.setdefault(label, []).append(r)
    means = dict((label, (mean(r.total for r in rs), mean(r.tgs for r in rs),
                          mean(r.tpt for r in rs)))
                 for label, rs in groups.items())
    base = None
    if ratios:
        if baseline not in means:
            raise ScoringError("missing '%s' runs for TPT ratios" % baseline)
        base = means[baseline][2]
    return [ComparisonRow(label, points, tgs, tpt,
                          tpt / base if ratios else None)
            for label, (points, tgs, tpt) in sorted(means.items())]
