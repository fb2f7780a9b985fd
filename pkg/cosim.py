#!/usr/bin/env python3


#     ===== Co-simulation usage instructions =====
#
# ./cosim.py run --config Programs/Scenarios/reference.json --out out/run
#
# simulates one strategy on one seed and writes the timeline, schedules,
# road events, incidents and score to out/run.
#
# ./cosim.py compare --config Programs/Scenarios/reference.json \
#     --seeds 1-50 --out out/compare -j 4
#
# runs every strategy on every seed and tabulates the scores.
#
# (run with --help for more options)
import sys

from Cosim.cosimLib import Cosim


def main(cosim):
    return cosim.main()


def main_cli():
    return main(Cosim())


if __name__ == "__main__":
    sys.exit(main(Cosim()))
