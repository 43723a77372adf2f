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
import re
import json
import argparse

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), ".."))
from channel import PowerDelayProfile


#----------------------------------------------------
# read_table function
#----------------------------------------------------
def read_table(path, db=False):
    '''
    To read a power-delay table:
    - it takes as input a text file with one "<delay_samples> <power>" pair per line ('#' starts a comment)
      and whether the powers are in dB
    - it outputs the list of {"delay_samples", "power_linear"} entries, normalized and sorted by delay
    '''
    delays = []
    powers = []
    with open(path) as f:
        for number, line in enumerate(f, start=1):
            line = line.split("#")[0].strip()
            if not line:
                continue
            fields = re.split(r"[\s,;]+", line)
            if len(fields) != 2:
                raise ValueError("{}:{}: expected '<delay> <power>', got '{}'".format(path, number, line))
            delay = float(fields[0])
            if not delay.is_integer():
                raise ValueError("{}:{}: fractional delay {}".format(path, number, delay))
            power = float(fields[1])
            delays.append(int(delay))
            powers.append(10.0 ** (power / 10.0) if db else power)

    #Sort and normalize through PowerDelayProfile
    order = sorted(range(len(delays)), key=lambda i: delays[i])
    pdp = PowerDelayProfile(os.path.basename(path), tuple(delays[i] for i in order), tuple(powers[i] for i in order))
    return [{"delay_samples": d, "power_linear": p} for d, p in pdp.taps]


#----------------------------------------------------
# Main
#----------------------------------------------------
if __name__ == "__main__":
    parser = argparse.ArgumentParser(prog="pdp2json.py", usage="%(prog)s -in <pdp_table> -out <pdp.json> [--db]", \
                                    formatter_class=argparse.RawTextHelpFormatter, \
                                    description=("Transform a two-column table (delay in samples, power) to a PDP JSON file usable as 'pdp' in an experiment configuration"))

    parser.add_argument("-in", dest="input", action="store", help="Text file with one '<delay_samples> <power>' pair per line", required=True)
    parser.add_argument("-out", dest="output", action="store", help="Output PDP file (format: 'xxx.json')", required=True)
    parser.add_argument("--db", action="store_true", help="Powers of the input table are in dB")

    args = parser.parse_args()

    if re.match('^.*.json$', args.output) is None:
        parser.error("The suffix of the output PDP file should be: '.json'")
    if not os.path.exists(args.input):
        parser.error("The path of the input table doesn't exist")

    try:
        entries = read_table(args.input, args.db)
        with open(args.output, "w") as out:
            json.dump(entries, out, indent=2)
            out.write("\n")
    except Exception as e:
        print("\nException-")
        print(e)
        sys.exit(1)

    print("\nThe PDP ({} taps) is saved in {}".format(len(entries), os.path.abspath(args.output)))
