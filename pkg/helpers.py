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

import logging
import zlib
import numpy as np


__version__ = "1.0.0"

LOG_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"


#----------------------------------------------------
# Exceptions
#----------------------------------------------------
class BlindMimoError(Exception):
    '''Root of the exceptions raised by the BlindMIMO modules'''


class InvalidArgumentError(BlindMimoError, ValueError):
    '''An argument is out of its domain (bad delay, pilot collision, dimension mismatch...)'''


class SingularSystemError(BlindMimoError, np.linalg.LinAlgError):
    '''A linear system that must be solved has no unique solution'''


class IllConditionedMixingError(BlindMimoError):
    '''
    The multi-user coefficient matrix is too ill-conditioned to be inverted.
    The condition number is kept in the "condition" attribute.
    '''

    #Constructor
    def __init__(self, condition, limit):
        self.condition = condition
        self.limit = limit
        super().__init__("coefficient matrix condition number {:.3g} exceeds {:.3g}".format(condition, limit))


class ConfigError(BlindMimoError):
    '''
    Invalid experiment configuration.
    The dotted path of the offending field is kept in the "field" attribute.
    '''

    #Constructor
    def __init__(self, field, message):
        self.field = field
        super().__init__("{}: {}".format(field, message) if field else message)


#----------------------------------------------------
# setup_logging function
#----------------------------------------------------
def setup_logging(level=logging.INFO, log_file=None, name="blindmimo"):
    '''
    To configure the "blindmimo" logger hierarchy:
    - it takes as input the logging level and an optional log file
    - it outputs the configured logger (stderr handler, plus a file handler if asked)
    '''
    logger = logging.getLogger(name)
    logger.setLevel(level)
    fmt = logging.Formatter(LOG_FORMAT)

    #Reconfiguring must not stack handlers
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()

    ch = logging.StreamHandler()
    ch.setLevel(level)
    ch.setFormatter(fmt)
    logger.addHandler(ch)

    if log_file is not None:
        fh = logging.FileHandler(log_file)
        fh.setLevel(level)
        fh.setFormatter(fmt)
        logger.addHandler(fh)

    logger.propagate = False
    return logger


#----------------------------------------------------
# Seeding protocol
#----------------------------------------------------
def trial_seed(master_seed, experiment_id, snr_index, trial_index):
    '''
    To derive the seed of one Monte Carlo trial:
    - it takes as input the master seed, the experiment identifier, the index of the SNR point and the index of the trial
    - it outputs a numpy SeedSequence, independent of the scheduling of the trials
    '''
    if master_seed < 0:
        raise InvalidArgumentError("master seed must be non-negative, got {}".format(master_seed))
    tag = zlib.crc32(str(experiment_id).encode("utf-8"))
    return np.random.SeedSequence([int(master_seed), tag, int(snr_index), int(trial_index)])


def trial_rng(master_seed, experiment_id, snr_index, trial_index):
    '''To get the random generator of one Monte Carlo trial (see "trial_seed")'''
    return np.random.default_rng(trial_seed(master_seed, experiment_id, snr_index, trial_index))


#----------------------------------------------------
# Small array helpers
#----------------------------------------------------
def diagonal_of(x):
    '''To get the diagonal of X as a complex vector, from a FreqSymbolGrid or any array-like'''
    return np.asarray(getattr(x, "symbols", x), dtype=complex)


def matrix_of(y):
    '''To get Y_f as a complex matrix, from a ReceivedMatrix or any array-like'''
    return np.asarray(getattr(y, "y", y), dtype=complex)


def standard_error(samples):
    '''Standard error of the mean of per-trial samples (NaN with fewer than two samples)'''
    samples = np.asarray(samples, dtype=float)
    if samples.size < 2:
        return float("nan")
    return float(np.std(samples, ddof=1) / np.sqrt(samples.size))
