"""
Trailer acceleration as a function of time.

A trace is either recorded (CSV ``t,ax,ay,az``) or synthesized from road
events: zero-mean Gaussian vibration plus one trapezoidal pulse per
event. Queries use zero-order hold, i.e. the value of the latest sample
at or before the query time, the way a physics plugin applies the last
force it received on every tick.
"""

import logging

import numpy
import pandas

from Cosim.config import RAMP, SAMPLE_PERIOD
from Cosim.core import Vec3
from Cosim.exceptions import OutsideTraceError, TraceError

logger = logging.getLogger(__name__)

HEADER = ['t', 'ax', 'ay', 'az']
AXES = {'x': 0, 'y': 1, 'z': 2}


class AccelTrace:
    """ Immutable ordered sequence of samples.

    :param t: sample times, strictly increasing
    :param a: ``(n, 3)`` array of accelerations
    :param period: nominal sample period (``None`` for a single sample)
    """
    def __init__(self, t, a, period=None):
        t = numpy.array(t, dtype=float)
        a = numpy.array(a, dtype=float).reshape(len(t), 3)
        if len(t) == 0:
            raise TraceError('empty trace')
        if not (numpy.all(numpy.isfinite(t)) and numpy.all(numpy.isfinite(a))):
            raise TraceError('trace contains non-finite values')
        bad = numpy.nonzero(numpy.diff(t) <= 0)[0]
        if len(bad):
            raise TraceError('non-monotonic at row %d' % (bad[0] + 2),
                             row=int(bad[0]) + 2)
        if period is None and len(t) > 1:
            period = float(numpy.median(numpy.diff(t)))
        t.flags.writeable = False
        a.flags.writeable = False
        self.t = t
        self.a = a
        self.period = period
        self._lateral = None

    def __len__(self):
        return len(self.t)

    def __eq__(self, other):
        return isinstance(other, AccelTrace) and \
            numpy.array_equal(self.t, other.t) and \
            numpy.array_equal(self.a, other.a)

    @property
    def first(self):
        return float(self.t[0])

    @property
    def last(self):
        return float(self.t[-1])

    def lateral(self):
        """ Per-sample ``sqrt(ax^2 + ay^2)``; gravity is not a hazard. """
        if self._lateral is None:
            lateral = numpy.hypot(self.a[:, 0], self.a[:, 1])
            lateral.flags.writeable = False
            self._lateral = lateral
        return self._lateral

    def index_at(self, t):
        if t < self.t[0] or t > self.t[-1]:
            raise OutsideTraceError('%g beyond trace [%g, %g]'
                                    % (t, self.first, self.last))
        return int(numpy.searchsorted(self.t, t, side='right')) - 1


def load_trace(path):
    """ Read a CSV trace. The ``t,ax,ay,az`` header is optional; rows are
    numbered from 1 over data rows in errors. """
    try:
        frame = pandas.read_csv(path, header=None, dtype=str,
                                skipinitialspace=True)
    except pandas.errors.EmptyDataError:
        raise TraceError('empty trace')
    except pandas.errors.ParserError as err:
        raise TraceError('expected 4 fields: %s' % err)
    frame = frame.dropna(how='all').reset_index(drop=True)
    if len(frame) and \
       [str(x).strip() for x in frame.iloc[0]] == HEADER:
        frame = frame.iloc[1:].reset_index(drop=True)
    if frame.empty:
        raise TraceError('empty trace')
    if frame.shape[1] != 4:
        raise TraceError('expected 4 fields at row 1, got %d'
                         % frame.shape[1], row=1)
    short = numpy.nonzero(frame.isna().any(axis=1).to_numpy())[0]
    if len(short):
        row = int(short[0]) + 1
        raise TraceError('expected 4 fields at row %d' % row, row=row)
    frame = frame.apply(lambda col: col.str.strip())
    numeric = frame.apply(pandas.to_numeric, errors='coerce')
    bad = numpy.nonzero(numeric.isna().any(axis=1).to_numpy())[0]
    if len(bad):
        row = int(bad[0]) + 1
        raise TraceError('non-numeric field at row %d' % row, row=row)
    values = frame.astype(float).to_numpy()
    bad = numpy.nonzero(~numpy.isfinite(values).all(axis=1))[0]
    if len(bad):
        row = int(bad[0]) + 1
        raise TraceError('non-finite field at row %d' % row, row=row)
    logger.debug('loaded %d samples from %s', len(values), path)
    return AccelTrace(values[:, 0], values[:, 1:])


def save_trace(trace, path):
    """ Write a trace so that :py:func:`load_trace` reads it back exactly. """
    frame = pandas.DataFrame(numpy.column_stack([trace.t, trace.a + 0.0]),
                             columns=HEADER)
    frame.to_csv(path, index=False)


def _grid(horizon, period):
    n = int(round(horizon / period)) + 1
    return numpy.arange(n) * period


def zero_trace(horizon, period=SAMPLE_PERIOD):
    t = _grid(horizon, period)
    return AccelTrace(t, numpy.zeros((len(t), 3)), period)


def pulse(t, onset, duration, peak, ramp=RAMP):
    """ Trapezoid: linear ramp up over ``ramp`` seconds, hold, linear ramp
    down ending at ``onset + duration``. Events shorter than two ramps
    degrade to a triangle below the peak. """
    rise = (t - onset) / ramp
    fall = (onset + duration - t) / ramp
    return numpy.clip(numpy.minimum(rise, fall), 0.0, 1.0) * peak


def synth_trace(events, horizon, noise_rms, rng, period=SAMPLE_PERIOD):
    """ Synthesize vibration plus event pulses over ``[0, horizon]``.

    :param events: road events (``onset``, ``duration``, ``peak_accel``,
      ``axis``)
    :param horizon: trace length in seconds
    :param noise_rms: standard deviation of the per-axis vibration
    :param rng: :py:class:`numpy.random.Generator` (``motion`` stream)
    """
    if horizon <= 0:
        raise TraceError('horizon must be positive')
    if noise_rms < 0:
        raise TraceError('noise_rms must be non-negative')
    t = _grid(horizon, period)
    a = numpy.zeros((len(t), 3))
    if noise_rms > 0:
        a += rng.normal(0.0, noise_rms, size=a.shape)
    for event in events:
        if event.onset < 0 or event.onset + event.duration > horizon:
            raise TraceError('event %s extends past horizon %g'
                             % (event.id, horizon))
        a[:, AXES[event.axis]] += pulse(t, event.onset, event.duration,
                                        event.peak_accel)
    return AccelTrace(t, a, period)


def accel_at(trace, t):
    return Vec3(*map(float, trace.a[trace.index_at(t)]))


def peak_magnitude(trace, window):
    """ Largest lateral magnitude seen during ``window``, including the
    sample held at its start. """
    if window.end < trace.first or window.start > trace.last:
        raise TraceError('empty window coverage [%g, %g]'
                         % (window.start, window.end))
    lo = max(0, int(numpy.searchsorted(trace.t, window.start,
                                       side='right')) - 1)
    hi = int(numpy.searchsorted(trace.t, window.end, side='right'))
    return float(trace.lateral()[lo:hi].max())
