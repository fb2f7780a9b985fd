"""
CSV and SVG outputs of runs and sweeps.

Floats are written with a fixed number of decimals (see
:py:func:`Cosim.util.fmt`), rows in a deterministic order, so reruns
with the same seed produce identical files.
"""

import csv
import json
import os

from Cosim.executor import hazard_exposures
from Cosim.planner import schedule_rows
from Cosim.util import fmt

TIMELINE = ['time', 'seq', 'kind', 'arm', 'task', 'detail']
SCHEDULES = ['plan_time', 'reason', 'task', 'arm', 'start', 'duration']
EVENTS = ['event_id', 'kind', 'onset', 'duration', 'peak', 'sent_at',
          'arrival']
INCIDENTS = ['t', 'part', 'incident', 'a_mag']
SCORE = ['label', 'points', 'tgs', 'tpt', 'ratio']
SHIPMENTS = ['tray', 'presence', 'pose', 'bonus', 'points', 'max_points']
EXPOSURES = ['task', 'arm', 'event_id', 'announced']
RUN_FILES = ['timeline.csv', 'schedules.csv', 'events.csv', 'incidents.csv',
             'score.csv', 'shipments.csv', 'exposures.csv']


def write_csv(path, header, rows):
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(x) if isinstance(x, float) else x
                             for x in row])


def timeline_rows(result):
    return [(e.time, e.seq, e.kind, e.arm, e.task, e.detail)
            for e in result.timeline]


def schedule_history(result):
    res = []
    for plan in result.plans:
        for row in schedule_rows(plan.schedule):
            res.append((plan.time, plan.reason) + row)
    return res


def event_rows(result):
    sent = dict((d.message.event_id, d) for d in result.deliveries)
    res = []
    for e in result.events:
        d = sent[e.id]
        res.append((e.id, e.kind, e.onset, e.duration, e.peak_accel,
                    d.message.sent_at, 'LOST' if d.lost else d.arrived_at))
    return res


def incident_rows(result):
    return [(i.t, i.part, i.kind, i.a_mag) for i in result.incidents]


def score_rows(rows):
    """ :param rows: :py:class:`Cosim.scoring.ComparisonRow` list """
    return [(r.label, float(r.points), r.tgs, r.tpt, r.ratio) for r in rows]


def write_run(out_dir, result, report, rows):
    """ All per-run files of ``run``. """
    os.makedirs(out_dir, exist_ok=True)
    def join(name):
        return os.path.join(out_dir, name)

    write_csv(join('timeline.csv'), TIMELINE, timeline_rows(result))
    write_csv(join('schedules.csv'), SCHEDULES, schedule_history(result))
    write_csv(join('events.csv'), EVENTS, event_rows(result))
    write_csv(join('incidents.csv'), INCIDENTS, incident_rows(result))
    write_csv(join('score.csv'), SCORE, score_rows(rows))
    write_csv(join('shipments.csv'), SHIPMENTS, report.rows())
    write_csv(join('exposures.csv'), EXPOSURES,
              [(x.task, x.arm, x.event, int(x.announced))
               for x in hazard_exposures(result)])
    return RUN_FILES


def write_manifest(path, command, config_path, seeds, strategies, files):
    data = {
        'command': command,
        'config': os.path.abspath(config_path),
        'seeds': list(seeds),
        'strategies': list(strategies),
        'files': sorted(files),
    }
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write('\n')


def _bar_group(out, gid, title, rows, values, decimals, top):
    """ One titled group of horizontal bars; returns the next free y. """
    width, bar, gap, left = 480, 24, 8, 110
    scale = max(list(values) + [1e-9])
    out.append('<g id="%s">' % gid)
    out.append('<text x="%d" y="%d" font-family="sans-serif" '
               'font-size="13">%s</text>' % (left, top - 12, title))
    for i, (r, value) in enumerate(zip(rows, values)):
        y = top + i * (bar + gap)
        w = (width - left - 70) * value / scale
        out.append('<text x="%d" y="%d" font-family="sans-serif" '
                   'font-size="12" text-anchor="end">%s</text>'
                   % (left - 6, y + bar - 8, r.label))
        out.append('<rect x="%d" y="%d" width="%s" height="%d" '
                   'fill="#4a7ab5"/>' % (left, y, fmt(w, 2), bar))
        out.append('<text x="%s" y="%d" font-family="sans-serif" '
                   'font-size="12">%s</text>'
                   % (fmt(left + w + 4, 2), y + bar - 8,
                      fmt(value, decimals)))
    out.append('</g>')
    return top + len(rows) * (bar + gap) + 40


def bar_chart(rows):
    """ SVG chart of the aggregate rows: mean points and, when ratios were
    computed, mean TPT relative to ``static``. """
    groups = [('points', 'mean points', [float(r.points) for r in rows], 2)]
    if rows and all(r.ratio is not None for r in rows):
        groups.append(('ratio', 'TPT / TPT static',
                       [r.ratio for r in rows], 4))
    out = []
    y = 30
    for gid, title, values, decimals in groups:
        y = _bar_group(out, gid, title, rows, values, decimals, y)
    return '\n'.join(
        ['<svg xmlns="http://www.w3.org/2000/svg" width="480" height="%d">'
         % (y - 24)] + out + ['</svg>']) + '\n'


def write_chart(path, rows):
    with open(path, 'w', encoding='utf-8') as f:
        f.write(bar_chart(rows))
