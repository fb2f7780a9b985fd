import csv
import json
import os

import pytest

from Cosim.core import Interval
from Cosim.cosimLib import EXIT_CONFIG, EXIT_OK, EXIT_USAGE, Cosim
from Cosim.motion import load_trace, peak_magnitude
from Cosim.report import RUN_FILES

from conftest import TRACES, scenario


def cosim(*args):
    return Cosim(custom_args=list(args)).main()


def rows(path):
    with open(path, newline='') as f:
        return list(csv.DictReader(f))


def test_run_writes_every_file(tmp_path):
    out = str(tmp_path / 'run')
    assert cosim('run', '-c', scenario('reference.json'), '-o', out,
                 '--strategy', 'static', '-q') == EXIT_OK
    for name in RUN_FILES + ['config.json', 'manifest.json']:
        assert os.path.isfile(os.path.join(out, name))
    score, = rows(os.path.join(out, 'score.csv'))
    assert score == {'label': 'static', 'points': '36.000000',
                     'tgs': '1.000000', 'tpt': '80.000000',
                     'ratio': '1.000000'}
    with open(os.path.join(out, 'manifest.json')) as f:
        manifest = json.load(f)
    assert manifest['command'] == 'run'
    assert manifest['seeds'] == [1]
    assert manifest['files'] == sorted(RUN_FILES + ['config.json'])


def test_run_without_static_leaves_ratio_empty(tmp_path):
    out = str(tmp_path / 'run')
    assert cosim('run', '-c', scenario('reference.json'), '-o', out,
                 '-q') == EXIT_OK
    score, = rows(os.path.join(out, 'score.csv'))
    assert score['label'] == 'replan_til'
    assert score['ratio'] == ''
    events = rows(os.path.join(out, 'events.csv'))
    assert [e['event_id'] for e in events] == ['brake1']
    assert events[0]['sent_at'] == '12.000000'


def test_reruns_are_byte_identical(tmp_path):
    outs = [str(tmp_path / name) for name in ('a', 'b')]
    for out in outs:
        assert cosim('run', '-c', scenario('reference.json'), '-o', out,
                     '--strategy', 'wait', '--seed', '4', '-q') == EXIT_OK
    for name in RUN_FILES + ['config.json', 'manifest.json']:
        with open(os.path.join(outs[0], name), 'rb') as a, \
                open(os.path.join(outs[1], name), 'rb') as b:
            assert a.read() == b.read(), name


def test_resolved_config_reruns(tmp_path):
    first = str(tmp_path / 'first')
    cosim('run', '-c', scenario('bus-ride.json'), '-o', first, '-q')
    second = str(tmp_path / 'second')
    assert cosim('run', '-c', os.path.join(first, 'config.json'), '-o',
                 second, '-q') == EXIT_OK
    for name in RUN_FILES:
        with open(os.path.join(first, name), 'rb') as a, \
                open(os.path.join(second, name), 'rb') as b:
            assert a.read() == b.read(), name


def test_missing_config_names_the_path(tmp_path, capsys):
    path = str(tmp_path / 'nowhere.json')
    assert cosim('run', '-c', path, '-o', str(tmp_path / 'out')) == \
        EXIT_CONFIG
    assert path in capsys.readouterr().err


def test_bad_config_value(write, capsys):
    path = write('bad.json', json.dumps({
        'channel': {'loss_prob': 1.5},
        'order': {'shipments': [{'tray': 'agv1', 'parts': [
            {'type': 'gear', 'slot': 'agv1_1', 'bin': 'bin1'}]}]}}))
    assert cosim('run', '-c', path, '-o', path + '.out') == EXIT_CONFIG
    assert 'loss_prob out of [0,1]' in capsys.readouterr().err


@pytest.mark.parametrize('args', [
    [],
    ['fly', '-c', 'x.json', '-o', 'out'],
    ['run', '-o', 'out'],
    ['run', '-c', 'x.json', '-o', 'out', '--seeds', '1-3'],
    ['compare', '-c', 'x.json', '-o', 'out', '-j', '0'],
])
def test_usage_errors(args):
    with pytest.raises(SystemExit) as err:
        cosim(*args)
    assert err.value.code == EXIT_USAGE


def test_compare(tmp_path):
    out = str(tmp_path / 'cmp')
    assert cosim('compare', '-c', scenario('minimal.json'), '-o', out,
                 '--seeds', '1-2', '--strategies', 'wait,static',
                 '-q') == EXIT_OK
    table = rows(os.path.join(out, 'compare.csv'))
    assert [r['label'] for r in table] == \
        ['static', 'wait', 'static/1', 'static/2', 'wait/1', 'wait/2']
    # no road events: every strategy runs the static plan
    assert set(r['ratio'] for r in table) == {'1.000000'}
    assert set(r['points'] for r in table) == {'18.000000'}
    with open(os.path.join(out, 'compare.svg')) as f:
        chart = f.read()
    assert '<g id="points">' in chart and 'mean points' in chart
    assert '<g id="ratio">' in chart and 'TPT / TPT static' in chart
    assert chart.count('<rect') == 4


def test_compare_static_only(tmp_path):
    out = str(tmp_path / 'cmp')
    assert cosim('compare', '-c', scenario('reference.json'), '-o', out,
                 '--strategies', 'static', '-q') == EXIT_OK
    table = rows(os.path.join(out, 'compare.csv'))
    assert [(r['label'], r['ratio']) for r in table] == \
        [('static', '1.000000'), ('static/1', '1.000000')]


def test_compare_without_static(tmp_path):
    out = str(tmp_path / 'cmp')
    assert cosim('compare', '-c', scenario('minimal.json'), '-o', out,
                 '--strategies', 'wait', '-q') == EXIT_OK
    assert all(r['ratio'] == '' for r in
               rows(os.path.join(out, 'compare.csv')))
    with open(os.path.join(out, 'compare.svg')) as f:
        chart = f.read()
    assert '<g id="points">' in chart
    assert 'id="ratio"' not in chart


def test_compare_unknown_strategy(tmp_path):
    assert cosim('compare', '-c', scenario('minimal.json'), '-o',
                 str(tmp_path / 'cmp'), '--strategies', 'static,flying',
                 '-q') == EXIT_CONFIG


def test_gen_trace_reproduces_the_brake(tmp_path):
    out = str(tmp_path / 'trace.csv')
    assert cosim('gen-trace', '-c', scenario('reference.json'), '-o', out,
                 '--seed', '1', '-q') == EXIT_OK
    trace = load_trace(out)
    assert trace.last == pytest.approx(300.0)
    assert peak_magnitude(trace, Interval(42.0, 45.0)) == \
        pytest.approx(6.5, abs=0.3)


def test_gen_trace_horizon_too_short(tmp_path, capsys):
    assert cosim('gen-trace', '-c', scenario('reference.json'), '-o',
                 str(tmp_path / 'trace.csv'), '--horizon', '40') == EXIT_CONFIG
    assert 'brake1' in capsys.readouterr().err


def test_gen_trace_at_rest(tmp_path):
    out = str(tmp_path / 'quiet.csv')
    assert cosim('gen-trace', '-c', scenario('minimal.json'), '-o', out,
                 '--horizon', '10', '--noise', '0', '-q') == EXIT_OK
    trace = load_trace(out)
    assert not trace.a.any()


def test_gen_trace_rejects_zero_horizon(tmp_path):
    with pytest.raises(SystemExit) as err:
        cosim('gen-trace', '-c', scenario('reference.json'), '-o',
              str(tmp_path / 'trace.csv'), '--horizon', '0')
    assert err.value.code == EXIT_USAGE


def test_shipped_brake_trace_is_reproducible(tmp_path):
    out = str(tmp_path / 'brake.csv')
    assert cosim('gen-trace', '-c', scenario('emergency-brake.json'), '-o',
                 out, '-q') == EXIT_OK
    assert load_trace(out) == load_trace(os.path.join(TRACES,
                                                      'emergency-brake.csv'))
