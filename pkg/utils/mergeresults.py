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
import csv
import argparse

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), ".."))
from harness import CSV_COLUMNS


#----------------------------------------------------
# merge_results function
#----------------------------------------------------
def merge_results(paths, merged):
    '''
    To merge CSV result files:
    - it takes as input the CSV files (all with the standard header) and the output path
    - it outputs the number of rows written; rows keep the order of the files, exact duplicates are kept once
    '''
    seen = set()
    rows = []
    for path in paths:
        with open(path, newline="") as f:
            reader = csv.reader(f)
            header = next(reader, None)
            if header != CSV_COLUMNS:
                raise ValueError("{}: header {} differs from {}".format(path, header, CSV_COLUMNS))
            for row in reader:
                key = tuple(row)
                if key in seen:
                    continue
                seen.add(key)
                rows.append(row)

    with open(merged, "w", newline="") as out:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        w.writerows(rows)
    return len(rows)


#----------------------------------------------------
# Main
#----------------------------------------------------
if __name__ == "__main__":
    parser = argparse.ArgumentParser(prog="mergeresults.py", usage="%(prog)s -in <results1.csv> <results2.csv> [...] -out <merged.csv>", \
                                    formatter_class=argparse.RawTextHelpFormatter, \
                                    description=("Merge CSV result files (e.g. runs with different seeds) together"))

    parser.add_argument("-in", dest="inputs", action="store", nargs="+", help="CSV result files (format: 'xxx.csv')", required=True)
    parser.add_argument("-out", dest="merged", action="store", help="Name of the output merged CSV file", required=True)

    args = parser.parse_args()

    for path in args.inputs:
        if re.match('^.*.csv$', path) is None:
            parser.error("The suffix of the input file " + path + " should be: '.csv'")
        if not os.path.exists(path):
            parser.error("The path of the input file " + path + " doesn't exist")

    try:
        count = merge_results(args.inputs, args.merged)
    except Exception as e:
        print("\nException-")
        print(e)
        sys.exit(1)

    print("\n{} rows merged into {}".format(count, os.path.abspath(args.merged)))
