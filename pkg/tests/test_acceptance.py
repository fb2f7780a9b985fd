""" Seed sweeps over the reference scenario. Deselect with ``-m 'not
slow'``. """

from dataclasses import replace

import pytest

from Cosim.config import STRATEGIES
from Cosim.executor import audit_starts, hazard_exposures, simulate
from Cosim.scoring import aggregate, score
from Cosim.util import mean

pytestmark = pytest.mark.slow

SEEDS = range(1, 51)


@pytest.fixture(scope='module')
def sweep(reference):
    res = {}
    for strategy in STRATEGIES:
        for seed in SEEDS:
            result = simulate(reference.with_run(strategy, seed))
            res[strategy, seed] = result, score(result, reference.order)
    return res


def tpt(sweep, strategy):
    return [sweep[strategy, seed][1].tpt for seed in SEEDS]


def test_static_baseline(sweep):
    for seed in SEEDS:
        report = sweep['static', seed][1]
        assert report.total == 36
        assert report.tgs == 1.0


def test_on_wheels_degrades(sweep):
    result, report = sweep['on_wheels', 1]
    assert report.tgs < 1.0
    assert result.incidents


def test_wait_restores_accuracy(sweep):
    for seed in SEEDS:
        report = sweep['wait', seed][1]
        assert report.tgs == 1.0
        assert report.tpt > sweep['static', seed][1].tpt


def test_replan_beats_wait(sweep):
    for seed in SEEDS:
        assert sweep['replan_til', seed][1].tgs == 1.0
    assert mean(tpt(sweep, 'replan_til')) < mean(tpt(sweep, 'wait'))


def test_process_time_ordering(sweep):
    for static, replan, wait in zip(tpt(sweep, 'static'),
                                    tpt(sweep, 'replan_til'),
                                    tpt(sweep, 'wait')):
        assert static <= replan <= wait


def test_overhead_near_ten_percent(sweep):
    rows = aggregate([(s, sweep[s, seed][1]) for s, seed in sweep])
    ratio = dict((r.label, r.ratio) for r in rows)['replan_til']
    assert 1.0 < ratio <= 1.20
    assert ratio == pytest.approx(1.10, abs=0.05)


def test_no_start_inside_a_known_window(sweep, reference):
    policy = reference.planner.policy()
    for result, _ in sweep.values():
        assert audit_starts(result, policy) == []


def test_announced_hazards_never_reach_a_carry(sweep):
    for strategy in ('wait', 'replan_til'):
        for seed in SEEDS:
            assert hazard_exposures(sweep[strategy, seed][0]) == []


def test_lossy_channel_only_exposes_lost_messages(reference):
    config = replace(
        reference,
        road=replace(reference.road, rate_per_hour=40.0),
        trace=replace(reference.trace, horizon=600.0),
        channel=replace(reference.channel, loss_prob=0.3))
    policy = config.planner.policy()
    exposed = 0
    for strategy in ('wait', 'replan_til'):
        for seed in SEEDS:
            result = simulate(config.with_run(strategy, seed))
            assert audit_starts(result, policy) == []
            exposures = hazard_exposures(result)
            assert all(not x.announced for x in exposures)
            exposed += len(exposures)
    assert exposed > 0
