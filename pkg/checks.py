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
'''Acceptance checks on a ResultTable. Every check returns a list of violation messages.'''

import logging
import math
import numpy as np


logger = logging.getLogger("blindmimo.checks")

SIGMAS = 3.0


def _tolerance(*stderrs):
    return SIGMAS * float(np.hypot(*[0.0 if math.isnan(s) else s for s in stderrs])) if stderrs else 0.0


def _by_snr(rows):
    return {r.snr_db: r for r in rows}


#----------------------------------------------------
# Per-experiment checks
#----------------------------------------------------
def check_ber(table, cfg):
    '''
    Blind BER at most each baseline BER + 3 SE at every SNR (and every antenna count of the
    sweep); zero BER for every receiver on noiseless points
    '''
    problems = []
    for suffix in [":nr{}".format(n_r) for n_r in cfg.nr_values] or [""]:
        blind = _by_snr(table.select("blind" + suffix, "ber"))
        for receiver in cfg.receivers:
            rows = _by_snr(table.select(receiver + suffix, "ber"))
            for snr, row in rows.items():
                if math.isinf(snr) and row.value != 0:
                    problems.append("{}: BER {:.3g} on the noiseless point".format(receiver + suffix, row.value))
                if receiver == "blind" or snr not in blind:
                    continue
                b = blind[snr]
                if b.value > row.value + _tolerance(b.stderr, row.stderr):
                    problems.append("blind{} BER {:.4g} above {} BER {:.4g} at {} dB".format(
                        suffix, b.value, receiver, row.value, snr))
    return problems


def check_tap_error(table, cfg):
    '''Circularity at most variance + 3 SE; every error curve non-increasing in SNR up to 3 SE'''
    problems = ["circularity worse than variance at {} dB".format(s) for s in table.metadata.get("ordering_violations", [])]
    for est in cfg.estimators:
        rows = sorted(table.select(est, "tap_error"), key=lambda r: r.snr_db)
        for low, high in zip(rows, rows[1:]):
            if high.value > low.value + _tolerance(low.stderr, high.stderr):
                problems.append("{} tap error rises from {:.4g} at {} dB to {:.4g} at {} dB".format(
                    est, low.value, low.snr_db, high.value, high.snr_db))
    return problems


def check_temporal(table, cfg):
    '''Warm-start counts below the cold-start count of the same speed; every count found'''
    problems = ["no iteration count reaches the baseline for {}".format(t) for t in table.metadata.get("search_failures", [])]
    rows = table.select(metric="iterations")
    for speed in cfg.temporal.speeds_kmh:
        tag = ":{:g}kmh:".format(speed)
        cold = [r for r in rows if r.receiver.startswith("blind-cold") and tag in r.receiver]
        warm = [r for r in rows if r.receiver.startswith("blind-warm") and tag in r.receiver]
        if not cold or math.isnan(cold[0].value):
            continue
        for r in warm:
            if not math.isnan(r.value) and r.value >= cold[0].value:
                problems.append("{} needs {:g} iterations, cold start needs {:g}".format(r.receiver, r.value, cold[0].value))
    return problems


def check_utilization(table, cfg):
    '''Blind fraction exactly (N - N_u * pilots) / N; the baseline search must succeed'''
    problems = []
    expected = (cfg.n - cfg.n_users * cfg.blind.pilot_count) / cfg.n
    for row in table.select("blind", "utilization"):
        if row.value != expected:
            problems.append("blind utilization {} differs from {}".format(row.value, expected))
    if table.metadata.get("search_failed"):
        problems.append("baseline pilot search failed")
    return problems


CHECKS = {
    "ber-sweep": check_ber,
    "tap-error": check_tap_error,
    "temporal": check_temporal,
    "utilization": check_utilization,
}


def check_results(table, cfg):
    '''
    To run the acceptance checks of an experiment:
    - it takes as input the ResultTable and the validated ExperimentConfig
    - it outputs the list of violations (empty when all checks pass), each logged as a warning
    '''
    problems = CHECKS[cfg.experiment](table, cfg)
    for p in problems:
        logger.warning("check failed: %s", p)
    if not problems:
        logger.info("all %s checks passed", cfg.experiment)
    return problems
