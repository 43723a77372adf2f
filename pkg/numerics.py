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
from dataclasses import dataclass
import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError

from helpers import InvalidArgumentError, SingularSystemError, diagonal_of, matrix_of
from channel import TimeChannel


logger = logging.getLogger("blindmimo.numerics")


#----------------------------------------------------
# Types
#----------------------------------------------------
@dataclass(frozen=True, eq=False)
class DftSubmatrix:
    '''Columns f_i of the N x N DFT matrix at the tap delays: f_i[m] = w^(m delays[i]), w = exp(-j 2 pi / N)'''
    n: int
    delays: tuple
    columns: np.ndarray

    @property
    def n_taps(self):
        return len(self.delays)

    def index_of(self, delay):
        try:
            return self.delays.index(int(delay))
        except ValueError:
            raise InvalidArgumentError("delay {} is not on the delay grid {}".format(delay, self.delays)) from None


@dataclass(frozen=True, eq=False)
class SvdBasis:
    '''Dominant left singular vectors (columns of left_vectors) and singular values of Y_f'''
    left_vectors: np.ndarray
    singular_values: np.ndarray

    def vector(self, i):
        return self.left_vectors[:, i]


#----------------------------------------------------
# build_dft_submatrix function
#----------------------------------------------------
def build_dft_submatrix(n, delays):
    '''
    To build F_L:
    - it takes as input the FFT size N and the integer tap delays (distinct, in [0, N-1])
    - it outputs the DftSubmatrix whose column i is (w^(m delays[i]))_m
    '''
    if int(n) != n or n < 1:
        raise InvalidArgumentError("FFT size must be a positive integer, got {}".format(n))
    n = int(n)
    checked = []
    for d in delays:
        if float(d) != int(d):
            raise InvalidArgumentError("fractional delay {} (delays are integers in sampling units)".format(d))
        d = int(d)
        if d < 0 or d >= n:
            raise InvalidArgumentError("delay {} outside [0, {}]".format(d, n - 1))
        if d in checked:
            raise InvalidArgumentError("duplicate delay {}".format(d))
        checked.append(d)
    if not checked:
        raise InvalidArgumentError("at least one delay is needed")

    #Reduce m.d modulo N first so that the phases stay exact for large N
    m = np.arange(n)[:, None]
    phase = (m * np.asarray(checked)[None, :]) % n
    columns = np.exp(-2j * np.pi * phase / n)
    return DftSubmatrix(n=n, delays=tuple(checked), columns=columns)


#----------------------------------------------------
# top_left_singular_vectors function
#----------------------------------------------------
def top_left_singular_vectors(y, k):
    '''
    To get the k dominant left singular vectors of Y_f:
    - it takes as input a ReceivedMatrix (or a matrix) and k in [1, min(N, N_r)]
    - it outputs the SvdBasis; each vector carries an arbitrary global phase
    '''
    mat = matrix_of(y)
    if k < 1 or k > min(mat.shape):
        raise InvalidArgumentError("k = {} outside [1, {}]".format(k, min(mat.shape)))
    #Economy SVD: N x N_r with N_r small, cheap even at N = 4096
    u, s, _ = np.linalg.svd(mat, full_matrices=False)
    return SvdBasis(left_vectors=u[:, :k], singular_values=s[:k])


#----------------------------------------------------
# Regularized least squares
#----------------------------------------------------
def regularized_ls(design, y, mu):
    '''
    To solve min ||Y - A H||_F^2 + mu ||H||_F^2 through the Cholesky factor of A^H A + mu I:
    - it takes as input the design matrix A, the right-hand side Y and mu >= 0
    - it outputs H; raises SingularSystemError when the Gram matrix is not positive definite
    '''
    if mu < 0:
        raise InvalidArgumentError("regularization must be non-negative, got {}".format(mu))
    gram = design.conj().T @ design + mu * np.eye(design.shape[1])
    rhs = design.conj().T @ y
    try:
        factor = cho_factor(gram, lower=False, check_finite=True)
    except (LinAlgError, ValueError) as e:
        raise SingularSystemError("regularized least-squares system is singular (mu = {}): {}".format(mu, e)) from e
    return cho_solve(factor, rhs)


def regularized_ls_channel(x_hat, f, y, mu):
    '''
    To estimate the channel given the symbols:
    - it takes as input X_hat (grid or diagonal), the DftSubmatrix, the received matrix and mu >= 0
    - it outputs the TimeChannel (F^H X^H X F + mu I)^-1 F^H X^H Y_f; X is diagonal so the
      Gram matrix costs O(L^2 N)
    '''
    x = diagonal_of(x_hat)
    mat = matrix_of(y)
    if x.size != f.n or mat.shape[0] != f.n:
        raise InvalidArgumentError("dimension mismatch: X has {}, F has {}, Y has {} subcarriers".format(x.size, f.n, mat.shape[0]))
    h = regularized_ls(x[:, None] * f.columns, mat, mu)
    return TimeChannel(h, f.delays)


def regularized_row_solve(b, y, reg):
    '''
    To solve, on every subcarrier n, min ||y_n - B_n^T x||^2 + reg ||x||^2:
    - it takes as input B (N x U x N_r stacked user rows), Y (N x N_r) and reg >= 0
    - it outputs X (N x U); U = 1 with reg = 0 is exactly MRC
    '''
    b = np.asarray(b, dtype=complex)
    y = matrix_of(y)
    gram = np.einsum("nur,nvr->nuv", b.conj(), b)
    if reg > 0:
        gram = gram + reg * np.eye(b.shape[1])[None, :, :]
    rhs = np.einsum("nur,nr->nu", b.conj(), y)
    try:
        return np.linalg.solve(gram, rhs[:, :, None])[:, :, 0]
    except np.linalg.LinAlgError as e:
        raise SingularSystemError("per-subcarrier system is singular (reg = {}): {}".format(reg, e)) from e


def maximal_ratio_combine(y, b):
    '''
    To combine the antennas of each subcarrier:
    - it takes as input Y (N x N_r) and the effective channel B (N x N_r)
    - it outputs x(n) = sum_r y(n,r) b*(n,r) / sum_r |b(n,r)|^2 and the indices of
      the subcarriers whose channel row is zero (their symbol is set to 0)
    '''
    y = matrix_of(y)
    den = np.sum(np.abs(b) ** 2, axis=1)
    num = np.sum(y * b.conj(), axis=1)
    zero_rows = np.flatnonzero(den == 0)
    safe = np.where(den == 0, 1.0, den)
    x = np.where(den == 0, 0.0, num / safe)
    if zero_rows.size:
        logger.warning("%d subcarrier(s) with a zero channel row, symbol set to 0", zero_rows.size)
    return x, zero_rows
