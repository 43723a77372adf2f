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
'''
Conventional pilot-based receivers: LS estimates at the pilots, linear or
FFT interpolation across the band, MRC for one user and per-subcarrier
MMSE for several users.
'''

import logging
import numpy as np

from helpers import InvalidArgumentError, matrix_of
from numerics import build_dft_submatrix, regularized_ls, regularized_row_solve, maximal_ratio_combine
from waveform import PilotSpec


logger = logging.getLogger("blindmimo.baseline_rx")

BASELINE_PILOT_VALUE = (1 + 1j) / np.sqrt(2.0)


#----------------------------------------------------
# PilotGrid class
#----------------------------------------------------
class PilotGrid:
    '''
    Class defining the equi-spaced pilots of the baseline receivers characterized by:
    - the FFT size N
    - the total number of pilots P, at subcarriers i * (N // P), i < P
    - the number of users; user u owns the pilots i with i % N_u == u
    '''

    #Constructor
    def __init__(self, n, count, n_users=1, value=BASELINE_PILOT_VALUE):
        if count < 1 or count > n:
            raise InvalidArgumentError("pilot count {} outside [1, {}]".format(count, n))
        if count < n_users:
            raise InvalidArgumentError("{} pilots cannot be shared by {} users".format(count, n_users))
        if value == 0:
            raise InvalidArgumentError("pilot value must be non-zero")
        self._n = int(n)
        self._count = int(count)
        self._n_users = int(n_users)
        self._value = complex(value)
        spacing = n // count
        all_positions = np.arange(count) * spacing
        self._positions = [all_positions[u::n_users] for u in range(n_users)]

    #Accessors
    def _get_n(self):
        '''Method to be call when we want to access the attribute "n"'''
        return self._n
    def _get_count(self):
        '''Method to be call when we want to access the attribute "count"'''
        return self._count
    def _get_density(self):
        '''Method to be call when we want to access the attribute "density"'''
        return self._count / self._n
    def _get_n_users(self):
        '''Method to be call when we want to access the attribute "n_users"'''
        return self._n_users

    #Properties
    n = property(_get_n)
    count = property(_get_count)
    density = property(_get_density)
    n_users = property(_get_n_users)

    #Method "positions"
    def positions(self, user):
        '''Method to get the pilot subcarriers of a user'''
        return self._positions[user].copy()

    #Method "values"
    def values(self, user):
        '''Method to get the known pilot symbols of a user'''
        return np.full(len(self._positions[user]), self._value)

    #Method "spec"
    def spec(self, user):
        '''Method to get the pilots of a user as a PilotSpec'''
        return PilotSpec(tuple(self._positions[user]), tuple(self.values(user)))

    #Method "reserved"
    def reserved(self, user):
        '''Method to get the pilot subcarriers of all the other users'''
        others = [p for v in range(self._n_users) if v != user for p in self._positions[v]]
        return tuple(sorted(int(p) for p in others))

    #Method "all_positions"
    def all_positions(self):
        return np.sort(np.concatenate(self._positions))

    #Method "__repr__"
    def __repr__(self):
        return "PilotGrid: N ({}), pilots ({}), users ({}), density ({:.3f})".format(self.n, self.count, self.n_users, self.density)


#----------------------------------------------------
# Channel estimation
#----------------------------------------------------
def ls_pilot_estimates(y, grid, user):
    '''
    To estimate the channel at the pilots of a user:
    - it takes as input the received matrix, the PilotGrid and the user index
    - it outputs one row y_p / x(p) per pilot subcarrier p (P_u x N_r)
    '''
    values = grid.values(user)
    if np.any(values == 0):
        raise InvalidArgumentError("zero pilot value for user {}".format(user))
    mat = matrix_of(y)
    return mat[grid.positions(user)] / values[:, None]


def interpolate_linear(estimates, positions, n):
    '''
    To interpolate the channel linearly between pilots:
    - it takes as input the pilot estimates (P x N_r), their subcarriers and N
    - it outputs H_f (N x N_r); flat extrapolation beyond the first and last pilots
    '''
    estimates = np.atleast_2d(np.asarray(estimates, dtype=complex))
    positions = np.asarray(positions)
    if positions.size < 2:
        raise InvalidArgumentError("linear interpolation needs at least 2 pilots, got {}".format(positions.size))
    order = np.argsort(positions)
    positions, estimates = positions[order], estimates[order]
    grid = np.arange(n)
    out = np.empty((n, estimates.shape[1]), dtype=complex)
    for r in range(estimates.shape[1]):
        out[:, r] = np.interp(grid, positions, estimates[:, r].real) + 1j * np.interp(grid, positions, estimates[:, r].imag)
    return out


def interpolate_fft(estimates, positions, n, l_max):
    '''
    To interpolate the channel through the delay domain:
    - it takes as input the pilot estimates (P x N_r), their equi-spaced subcarriers, N and the
      number of kept taps l_max <= P
    - it outputs H_f (N x N_r) built from the first l_max delay taps
    When the pilots cover the band periodically (spacing * P = N) the taps come from an inverse
    DFT of length P; otherwise from a least-squares fit on the partial DFT basis.
    '''
    estimates = np.atleast_2d(np.asarray(estimates, dtype=complex))
    positions = np.asarray(positions, dtype=int)
    count = positions.size
    if count < 1:
        raise InvalidArgumentError("FFT interpolation needs pilots")
    if count > 1:
        steps = np.diff(positions)
        if np.any(steps != steps[0]) or steps[0] <= 0:
            raise InvalidArgumentError("FFT interpolation needs equi-spaced pilots, got steps {}".format(sorted(set(steps.tolist()))))
        spacing = int(steps[0])
    else:
        spacing = n
    if l_max < 1 or l_max > count:
        raise InvalidArgumentError("l_max = {} outside [1, {}]".format(l_max, count))

    full = build_dft_submatrix(n, range(l_max)).columns
    if spacing * count == n:
        #Delay response of length P, then undo the offset of the first pilot
        g = np.fft.ifft(estimates, axis=0)[:l_max]
        taps = g * np.exp(2j * np.pi * (positions[0] * np.arange(l_max) % n) / n)[:, None]
    else:
        taps = regularized_ls(full[positions], estimates, 0.0)
    return full @ taps


#----------------------------------------------------
# Combining and equalization
#----------------------------------------------------
def mrc_combine(y, h_f):
    '''
    To combine the antennas with a full frequency channel:
    - it takes as input the received matrix and H_f (N x N_r)
    - it outputs the MRC symbols (0 on subcarriers with a zero channel row)
    '''
    h_f = np.asarray(h_f, dtype=complex)
    if h_f.shape != matrix_of(y).shape:
        raise InvalidArgumentError("channel shape {} does not match received shape {}".format(h_f.shape, matrix_of(y).shape))
    x, _ = maximal_ratio_combine(y, h_f)
    return x


def mmse_equalize_multi(y, h_fs, sigma2):
    '''
    To equalize several users jointly on each subcarrier:
    - it takes as input the received matrix, one H_f (N x N_r) per user and the noise variance
    - it outputs one symbol vector per user

    With B_n the N_u x N_r stacked user rows of subcarrier n (y_n^T = x_n^T B_n + w_n^T):
        x_mmse = (conj(B_n) B_n^T + sigma2 I)^-1 conj(B_n) y_n
    and each user's output is divided by its effective gain diag((G + sigma2 I)^-1 G),
    G = conj(B_n) B_n^T, so that the estimates are unbiased.
    '''
    b = np.stack([np.asarray(h, dtype=complex) for h in h_fs], axis=1)
    if b.shape[0] != matrix_of(y).shape[0] or b.shape[2] != matrix_of(y).shape[1]:
        raise InvalidArgumentError("channel shape {} does not match received shape {}".format(b.shape, matrix_of(y).shape))
    x = regularized_row_solve(b, y, sigma2)
    if sigma2 > 0:
        gram = np.einsum("nur,nvr->nuv", b.conj(), b)
        eye = np.eye(b.shape[1])[None, :, :]
        gain = np.diagonal(np.linalg.solve(gram + sigma2 * eye, gram), axis1=1, axis2=2)
        x = np.where(np.abs(gain) > 0, x / np.where(np.abs(gain) > 0, gain, 1.0), 0.0)
    return [x[:, u] for u in range(b.shape[1])]
