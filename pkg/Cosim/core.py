"""
Primitive types shared by every module: time points, intervals,
acceleration vectors and the named random streams.

Time is a real number of seconds since simulation start. Accelerations
are SI m/s^2 with x along the direction of travel, y lateral (left
positive) and z vertical.
"""

import hashlib
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy

from Cosim.exceptions import CosimError


def time_point(value):
    value = float(value)
    if not math.isfinite(value) or value < 0:
        raise CosimError('time point must be finite and non-negative: %r'
                         % value)
    return value


@dataclass(frozen=True, order=True)
class Interval:
    """ Closed interval ``[start, end]`` on the time axis. Gating treats
    it as half-open: a start at ``end`` is allowed. """
    start: float
    end: float

    def __post_init__(self):
        if not (math.isfinite(self.start) and math.isfinite(self.end)):
            raise CosimError('interval bounds must be finite')
        if self.start > self.end:
            raise CosimError('interval start %g after end %g'
                             % (self.start, self.end))

    @property
    def length(self):
        return self.end - self.start

    def contains(self, t):
        return self.start <= t < self.end

    def overlaps(self, start, end):
        """ Whether ``[start, end)`` shares time with this interval. """
        return start < self.end and end > self.start


class Vec3(NamedTuple):
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def lateral(self):
        return math.hypot(self.x, self.y)


def merge_intervals(intervals):
    """ Merge overlapping or touching intervals, sorted by start. """
    merged = []
    for iv in sorted(intervals):
        if merged and iv.start <= merged[-1].end:
            last = merged[-1]
            merged[-1] = Interval(last.start, max(last.end, iv.end))
        else:
            merged.append(iv)
    return merged


def _label_key(label):
    digest = hashlib.sha256(label.encode('utf-8')).digest()
    return int.from_bytes(digest[:8], 'little')


def make_rng(seed, stream_label):
    """ Deterministic generator for one subsystem.

    Every label gets its own :py:class:`numpy.random.SeedSequence` child
    keyed by a hash of the label, so consuming one stream never moves
    another.

    :param seed: unsigned 64-bit run seed
    :param stream_label: subsystem name, e.g. ``channel``
    """
    seed = int(seed)
    if seed < 0 or seed >= 2 ** 64:
        raise CosimError('seed must be an unsigned 64-bit integer: %d' % seed)
    sequence = numpy.random.SeedSequence(entropy=seed,
                                         spawn_key=(_label_key(stream_label),))
    return numpy.random.Generator(numpy.random.PCG64(sequence))


class Streams:
    """ The per-run set of named streams, created lazily. """
    def __init__(self, seed):
        self.seed = seed
        self._streams = {}

    def __getitem__(self, label):
        if label not in self._streams:
            self._streams[label] = make_rng(self.seed, label)
        return self._streams[label]
