#!/usr/bin/env python3
#*****************************************************************************
#  Name: BlindMIMO
#  Description: blind (near-pilotless) demodulation of massive-MIMO OFDM
#  uplink signals by alternating minimization, with pilot-based baselines.
#  Copyright (C) 2026 the BlindMIMO authors
#
#  This program is free software: you can redistribute it and/or modify
#  it under the terms of the GNU Affero General Public License as
#  published by the Free Software Foundation, either version 3 of the
#  License, or (at your option) any later version.
#
#  This program is distributed in the hope that it will be useful,
#  but WITHOUT ANY WARRANTY; without even the implied warranty of
#  MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
#  GNU Affero General Public License for more details.
#
#  You should have received a copy of the GNU Affero General Public License
#  along with this program.  If not, see <http://www.gnu.org/licenses/>.
#*****************************************************************************

from __future__ import print_function
import os
import sys
import argparse
import logging
from dataclasses import replace

from helpers import ConfigError, setup_logging
from harness import ExperimentConfig, emit_results, load_config, run_experiment, validate_config
from checks import check_results


EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_CHECK = 3

COMMANDS = {
    "ber": "ber-sweep",
    "tap-error": "tap-error",
    "temporal": "temporal",
    "utilization": "utilization",
}


#----------------------------------------------------
# Arg parser
#----------------------------------------------------
def build_parser():
    parser = argparse.ArgumentParser(prog="blindmimo.py", usage="%(prog)s <command> [--config <config.json>] [options]", \
                                    description=("Blind massive-MIMO OFDM uplink demodulation: Monte Carlo experiments against pilot-based baselines"))
    subparsers = parser.add_subparsers(dest="command", metavar="<command>")
    subparsers.required = True

    helps = {
        "ber": "BER versus SNR of the blind receiver and the baselines (paired trials)",
        "tap-error": "Dominant-tap selection error of the initial-point estimators",
        "temporal": "Iterations needed with warm starts on temporally correlated symbols",
        "utilization": "Data-subcarrier fraction of the blind receiver and of a BER-matched baseline",
    }
    for name in COMMANDS:
        sub = subparsers.add_parser(name, help=helps[name], description=helps[name])
        parserMain = sub.add_argument_group("[Main options]")
        parserRun = sub.add_argument_group("[Run options]")

        parserMain.add_argument('--config', dest="config", action="store", help="Experiment configuration (format: xxx.json) [default: built-in set-up]")
        parserMain.add_argument('--out', dest="out", action="store", help="Output file [default: '<command>.<format>']")
        parserMain.add_argument('--format', dest="format", action="store", choices=["csv", "json"], default="csv", help="Output format [default: csv]")
        parserMain.add_argument('--check', action="store_true", help="Run the acceptance checks on the results (exit code 3 on violation)")

        parserRun.add_argument('--seed', dest="seed", action="store", type=int, help="Master seed (overrides the configuration)")
        parserRun.add_argument('--threads', dest="threads", action="store", type=int, help="Number of worker processes (overrides the configuration)")
        parserRun.add_argument('--trials', dest="trials", action="store", type=int, help="Trials per point (overrides the configuration)")
        parserRun.add_argument('--snr', dest="snr", action="store", help="Comma-separated SNR grid in dB (overrides the configuration)")
        parserRun.add_argument('--nr', dest="nr", action="store", help="Comma-separated receive antenna counts to sweep (ber only, overrides the configuration)")
        parserRun.add_argument('--iterations', dest="iterations", action="store", type=int, help="AM iterations of the blind receiver [default: 10, 20 with correlation or several users, 40 with both]")
        parserRun.add_argument('--large', action="store_true", help="Allow N >= 4096 runs (long)")
        parserRun.add_argument('--log', dest="log", action="store", help="Also write the log to this file")
        parserRun.add_argument('-v', '--verbose', action="store_true", help="Debug logging")
    return parser


#----------------------------------------------------
# Configuration from the command line
#----------------------------------------------------
def config_from_args(args):
    '''
    To build the configuration of a run:
    - it takes as input the parsed arguments
    - it outputs the validated ExperimentConfig (file values, then command-line overrides)
    '''
    cfg = load_config(args.config) if args.config is not None else ExperimentConfig()
    cfg = replace(cfg, experiment=COMMANDS[args.command])
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.threads is not None:
        cfg = replace(cfg, threads=args.threads)
    if args.trials is not None:
        cfg = replace(cfg, trials=args.trials)
    if args.snr is not None:
        try:
            cfg = replace(cfg, snr_db=[float(s) for s in args.snr.split(",") if s.strip()])
        except ValueError as e:
            raise ConfigError("--snr", "expected comma-separated numbers ({})".format(e)) from e
    if args.nr is not None:
        try:
            cfg = replace(cfg, nr_values=[int(s) for s in args.nr.split(",") if s.strip()])
        except ValueError as e:
            raise ConfigError("--nr", "expected comma-separated integers ({})".format(e)) from e
    if args.iterations is not None:
        cfg = replace(cfg, blind=replace(cfg.blind, iterations=args.iterations))
    if args.large:
        cfg = replace(cfg, large=True)
    return validate_config(cfg)


#----------------------------------------------------
# main function
#----------------------------------------------------
def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)

    logger = setup_logging(logging.DEBUG if args.verbose else logging.INFO, args.log)

    try:
        cfg = config_from_args(args)
    except ConfigError as e:
        print("Configuration error: {}".format(e), file=sys.stderr)
        return EXIT_CONFIG

    out = args.out or "{}.{}".format(args.command, args.format)
    out_dir = os.path.dirname(os.path.abspath(out))
    if not os.path.isdir(out_dir):
        print("Configuration error: the directory of the output file {} doesn't exist".format(out), file=sys.stderr)
        return EXIT_CONFIG

    try:
        table = run_experiment(cfg)
        emit_results(table, out, args.format)
    except ConfigError as e:
        print("Configuration error: {}".format(e), file=sys.stderr)
        return EXIT_CONFIG
    except Exception as e:
        logger.error("%s: %s", type(e).__name__, e)
        print("\nException-", file=sys.stderr)
        print(e, file=sys.stderr)
        return EXIT_ERROR

    print("\nThe results of '{}' ({} rows) are saved in {}".format(args.command, len(table.rows), os.path.abspath(out)))

    if args.check:
        problems = check_results(table, cfg)
        if problems:
            print("{} acceptance check(s) failed:".format(len(problems)))
            for p in problems:
                print("  - " + p)
            return EXIT_CHECK
        print("All acceptance checks passed")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
