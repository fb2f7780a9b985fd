import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from optparse import OptionParser

from Cosim.config import STRATEGIES
from Cosim.core import Streams
from Cosim.exceptions import ConfigError, CosimError
from Cosim.executor import road_and_trace, simulate
from Cosim.motion import save_trace
from Cosim.report import write_chart, write_csv, write_manifest, write_run, \
    score_rows, SCORE
from Cosim.scenario import dump_config, load_config
from Cosim.scoring import aggregate, compare, score
from Cosim.util import parse_list, parse_seeds

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

COMMANDS = ('run', 'compare', 'gen-trace')


def run_one(config, strategy, seed):
    """ Simulate and score one (strategy, seed) pair. Top-level so that
    worker processes can unpickle it. """
    result = simulate(config.with_run(strategy, seed))
    return strategy, seed, score(result, config.order)


class Cosim:
    def __init__(self, custom_args=None, usage=None):
        if usage:
            self.usage = usage
        else:
            self.usage = "usage: %prog run|compare|gen-trace " \
                "--config scenario.json --out path [options]"
        self.custom_args = custom_args
        self.build_option_parser()

    def build_option_parser(self):
        class CosimOptionParser(OptionParser):
            def error(self, err):
                print(self.get_usage(), file=sys.stderr)
                print("error:", err, file=sys.stderr)
                sys.exit(EXIT_USAGE)

        parser = CosimOptionParser(usage=self.usage)
        parser.add_option(
            "-c",
            "--config",
            dest="config",
            help="scenario file (JSON)",
        )
        parser.add_option(
            "-o",
            "--out",
            dest="out",
            help="output directory (run, compare) or trace file (gen-trace)",
        )
        parser.add_option(
            "--seed",
            type="int",
            dest="seed",
            help="seed for run and gen-trace (default: from the scenario)",
        )
        parser.add_option(
            "--seeds",
            dest="seeds",
            help="seeds for compare, e.g. 1,2,5 or 1-50",
        )
        parser.add_option(
            "--strategy",
            dest="strategy",
            help="strategy for run (%s)" % ", ".join(STRATEGIES),
        )
        parser.add_option(
            "--strategies",
            dest="strategies",
            help="comma-separated strategies for compare (default: all)",
        )
        parser.add_option(
            "-j",
            "--jobs",
            type="int",
            dest="jobs",
            default=1,
            help="worker processes for compare (default: 1)",
        )
        parser.add_option(
            "--horizon",
            type="float",
            dest="horizon",
            help="trace length in seconds for gen-trace",
        )
        parser.add_option(
            "--noise",
            type="float",
            dest="noise",
            help="vibration noise (m/s^2 rms) for gen-trace",
        )
        parser.add_option(
            "--no-ratios",
            action="store_false",
            dest="ratios",
            default=True,
            help="leave the TPT ratio column empty",
        )
        parser.add_option(
            "--ticks",
            action="store_true",
            dest="ticks",
            help="record every physics tick in timeline.csv",
        )
        parser.add_option(
            "-v",
            "--verbose",
            action="store_const",
            const=logging.DEBUG,
            dest="level",
            default=logging.INFO,
            help="debug output",
        )
        parser.add_option(
            "-q",
            "--quiet",
            action="store_const",
            const=logging.WARNING,
            dest="level",
            help="warnings and errors only",
        )
        self.parser = parser

    def parse_args(self):
        self.options, self.args = self.parser.parse_args(self.custom_args)
        if len(self.args) != 1 or self.args[0] not in COMMANDS:
            self.parser.error("expected exactly one command of %s"
                              % ", ".join(COMMANDS))
        self.command = self.args[0]
        if not self.options.config:
            self.parser.error("missing --config")
        if not self.options.out:
            self.parser.error("missing --out")
        if self.options.jobs < 1:
            self.parser.error("--jobs must be at least 1")
        if self.command != 'compare' and (self.options.seeds or
                                          self.options.strategies):
            self.parser.error("--seeds and --strategies are for compare")
        if self.command != 'run' and self.options.strategy:
            self.parser.error("--strategy is for run")

    def setup_logging(self):
        logging.basicConfig(stream=sys.stderr, level=self.options.level,
                            format="%(levelname)s %(name)s: %(message)s",
                            force=True)

    def main(self):
        self.parse_args()
        self.setup_logging()
        try:
            return getattr(self, "cmd_" + self.command.replace("-", "_"))()
        except ConfigError as err:
            print("error:", err, file=sys.stderr)
            return EXIT_CONFIG
        except (CosimError, OSError) as err:
            print("error:", err, file=sys.stderr)
            return EXIT_RUNTIME

    def cmd_run(self):
        config = load_config(self.options.config).with_run(
            self.options.strategy, self.options.seed)
        result = simulate(config, keep_ticks=self.options.ticks)
        report = score(result, config.order)
        ratios = self.options.ratios and config.strategy == 'static'
        rows = compare([(config.strategy, report)], ratios=ratios)
        out = self.options.out
        files = write_run(out, result, report, rows)
        dump_config(config, os.path.join(out, 'config.json'))
        write_manifest(os.path.join(out, 'manifest.json'), 'run',
                       self.options.config, [config.seed], [config.strategy],
                       files + ['config.json'])
        if not result.complete:
            print("%s: time cap reached, scoring achieved state"
                  % config.strategy)
        print("%s seed %d: %d/%d points, TGS %.3f, TPT %.3f s"
              % (config.strategy, config.seed, report.total,
                 report.max_points, report.tgs, report.tpt))
        return EXIT_OK

    def strategies(self):
        if not self.options.strategies:
            return list(STRATEGIES)
        res = parse_list(self.options.strategies)
        for s in res:
            if s not in STRATEGIES:
                raise ConfigError('strategy', 'unknown strategy %r (expected '
                                  'one of %s)' % (s, ', '.join(STRATEGIES)))
        return sorted(set(res), key=res.index)

    def cmd_compare(self):
        config = load_config(self.options.config)
        try:
            seeds = parse_seeds(self.options.seeds) if self.options.seeds \
                else [config.seed]
        except ValueError as err:
            self.parser.error(str(err))
        strategies = self.strategies()
        ratios = self.options.ratios
        if ratios and 'static' not in strategies:
            logger.warning('no static runs; TPT ratios left empty')
            ratios = False
        jobs = [(s, seed) for s in strategies for seed in seeds]
        args = ([config] * len(jobs), [s for s, _ in jobs],
                [seed for _, seed in jobs])
        if self.options.jobs > 1:
            with ProcessPoolExecutor(self.options.jobs) as pool:
                done = list(pool.map(run_one, *args))
        else:
            done = list(map(run_one, *args))
        rows = aggregate([(s, r) for s, _, r in done], ratios=ratios)
        per_run = []
        for seed in seeds:
            reports = [(s, r) for s, sd, r in done if sd == seed]
            for row in compare(reports, ratios=ratios):
                per_run.append((row.label, seed, row))
        per_run.sort(key=lambda x: (x[0], x[1]))
        runs = [replace(row, label='%s/%d' % (label, seed))
                for label, seed, row in per_run]
        out = self.options.out
        os.makedirs(out, exist_ok=True)
        write_csv(os.path.join(out, 'compare.csv'), SCORE,
                  score_rows(rows) + score_rows(runs))
        write_chart(os.path.join(out, 'compare.svg'), rows)
        write_manifest(os.path.join(out, 'manifest.json'), 'compare',
                       self.options.config, seeds, strategies,
                       ['compare.csv', 'compare.svg'])
        for row in rows:
            print("%-10s %6.2f points  TGS %.3f  TPT %8.3f s%s"
                  % (row.label, row.points, row.tgs, row.tpt,
                     "  ratio %.4f" % row.ratio if row.ratio is not None
                     else ""))
        return EXIT_OK

    def cmd_gen_trace(self):
        config = load_config(self.options.config)
        trace = config.trace
        synth = replace(
            trace, source='synth', path=None,
            horizon=trace.horizon if self.options.horizon is None
            else self.options.horizon,
            noise_rms=trace.noise_rms if self.options.noise is None
            else self.options.noise)
        if synth.horizon <= 0 or synth.noise_rms < 0:
            self.parser.error("--horizon must be positive and --noise "
                              "non-negative")
        for e in config.road.events:
            if e.onset + e.duration > synth.horizon:
                raise ConfigError('trace.horizon', 'event %s ends at %g, '
                                  'past the horizon %g'
                                  % (e.id, e.onset + e.duration,
                                     synth.horizon))
        config = replace(config, trace=synth).with_run('on_wheels',
                                                      self.options.seed)
        events, accel = road_and_trace(config, Streams(config.seed))
        out_dir = os.path.dirname(self.options.out)
        if out_dir:
            os.makedirs(out_dir, exist_ok=True)
        save_trace(accel, self.options.out)
        print("wrote %d samples with %d road events"
              % (len(accel), len(events)))
        return EXIT_OK
