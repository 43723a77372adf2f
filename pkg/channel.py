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
Multipath Rayleigh channels: power-delay profiles, receive-side exponential
correlation, Bessel temporal evolution and frequency-domain application
with AWGN. Delays are integers in sampling units.
'''

import json
import logging
import os
from dataclasses import dataclass, field
import numpy as np
from scipy.linalg import sqrtm
from scipy.special import j0

from helpers import InvalidArgumentError, diagonal_of


logger = logging.getLogger("blindmimo.channel")

SPEED_OF_LIGHT = 299792458.0

#Carrier such that J0 gives 0.967/0.870 at 5 km/h and 0.870/0.532 at 10 km/h for 5/10 ms
DEFAULT_CARRIER_HZ = 2.515e9
DEFAULT_SYMBOL_SPACING_S = 0.005


#----------------------------------------------------
# Power-delay profiles
#----------------------------------------------------
@dataclass(frozen=True)
class PowerDelayProfile:
    '''Average tap powers at integer delays; powers are normalized to sum 1 on construction.'''
    name: str
    delays: tuple
    powers: tuple

    def __post_init__(self):
        delays = tuple(int(d) for d in self.delays)
        powers = np.asarray(self.powers, dtype=float)
        if len(delays) == 0 or len(delays) != powers.size:
            raise InvalidArgumentError("PDP '{}': {} delays for {} powers".format(self.name, len(delays), powers.size))
        if any(b <= a for a, b in zip(delays, delays[1:])):
            raise InvalidArgumentError("PDP '{}': delays must be distinct and ascending, got {}".format(self.name, delays))
        if delays[0] < 0:
            raise InvalidArgumentError("PDP '{}': negative delay {}".format(self.name, delays[0]))
        if np.any(powers < 0) or powers.sum() <= 0:
            raise InvalidArgumentError("PDP '{}': powers must be non-negative with a positive sum".format(self.name))
        object.__setattr__(self, "delays", delays)
        object.__setattr__(self, "powers", tuple(float(p) for p in powers / powers.sum()))

    @property
    def n_taps(self):
        return len(self.delays)

    @property
    def dominant_tap(self):
        '''Delay of the strongest tap (smallest delay on ties)'''
        return self.delays[int(np.argmax(self.powers))]

    @property
    def taps(self):
        return list(zip(self.delays, self.powers))


def _tdla30_4096():
    #12 taps of an exponential profile with a 30 ns delay spread at the 4096-FFT, 30 kHz sampling rate
    ts = 1.0 / (4096 * 30e3)
    delays = np.arange(12)
    return PowerDelayProfile("tdla30-4096", tuple(delays), tuple(np.exp(-delays * ts / 30e-9)))


PED4_POWERS = (1.0, 0.5, 0.25, 0.125)

BUILTIN_PDPS = {
    "ped4": lambda: PowerDelayProfile("ped4", (0, 1, 2, 3), PED4_POWERS),
    "flat4": lambda: PowerDelayProfile("flat4", (0, 1, 2, 3), (1.0, 1.0, 1.0, 1.0)),
    "single": lambda: PowerDelayProfile("single", (0,), (1.0,)),
    "tdla30-4096": _tdla30_4096,
}


def resolve_pdp(name):
    '''
    To get a PowerDelayProfile by name or path:
    - it takes as input a built-in name ("ped4", "ped4-d<K>", "flat4", "single", "tdla30-4096")
      or the path of a JSON file [{"delay_samples": d, "power_linear": p}, ...]
    - it outputs the normalized PowerDelayProfile
    '''
    if isinstance(name, PowerDelayProfile):
        return name
    if name in BUILTIN_PDPS:
        return BUILTIN_PDPS[name]()
    if name.startswith("ped4-d") and name[len("ped4-d"):].isdigit():
        k = int(name[len("ped4-d"):])
        if k > 3:
            raise InvalidArgumentError("PDP '{}': dominant tap must be in 0..3".format(name))
        return PowerDelayProfile(name, (0, 1, 2, 3), tuple(np.roll(PED4_POWERS, k)))
    if os.path.exists(name):
        return load_pdp(name)
    raise InvalidArgumentError("unknown PDP '{}' (not a built-in name nor an existing file)".format(name))


def load_pdp(path):
    '''To read a PDP JSON file'''
    with open(path) as f:
        entries = json.load(f)
    try:
        entries = sorted(entries, key=lambda e: e["delay_samples"])
        delays = []
        for e in entries:
            d = float(e["delay_samples"])
            if not d.is_integer():
                raise InvalidArgumentError("PDP file {}: fractional delay {}".format(path, d))
            delays.append(int(d))
        powers = [float(e["power_linear"]) for e in entries]
    except (KeyError, TypeError) as e:
        raise InvalidArgumentError("PDP file {}: entries need 'delay_samples' and 'power_linear' ({})".format(path, e)) from e
    name = os.path.splitext(os.path.basename(path))[0]
    return PowerDelayProfile(name, tuple(delays), tuple(powers))


#----------------------------------------------------
# Spatial correlation
#----------------------------------------------------
@dataclass(frozen=True, eq=False)
class SpatialCorrelation:
    n_r: int
    coefficient: float
    matrix: np.ndarray
    sqrt_factor: np.ndarray


def exponential_corr(n_r, r):
    '''
    To build the exponential correlation of a uniform linear array:
    - it takes as input the number of antennas and the coefficient r in [0, 1)
    - it outputs the SpatialCorrelation with entries r^|i-j| and its Hermitian square root
    '''
    if not 0.0 <= r < 1.0:
        raise InvalidArgumentError("correlation coefficient must be in [0, 1), got {}".format(r))
    if n_r < 1:
        raise InvalidArgumentError("need at least one receive antenna, got {}".format(n_r))
    idx = np.arange(n_r)
    matrix = float(r) ** np.abs(idx[:, None] - idx[None, :])
    if r == 0.0:
        root = np.eye(n_r)
    else:
        root = np.real(sqrtm(matrix))
        root = 0.5 * (root + root.T)
    return SpatialCorrelation(n_r=int(n_r), coefficient=float(r), matrix=matrix, sqrt_factor=root)


#----------------------------------------------------
# Channel and received-matrix types
#----------------------------------------------------
@dataclass(frozen=True, eq=False)
class TimeChannel:
    '''L x N_r tap coefficients H_t; row i belongs to delays[i].'''
    h: np.ndarray
    delays: tuple
    pdp: PowerDelayProfile = field(default=None)

    def __post_init__(self):
        h = np.atleast_2d(np.asarray(self.h, dtype=complex))
        if h.shape[0] != len(self.delays):
            raise InvalidArgumentError("{} channel rows for {} delays".format(h.shape[0], len(self.delays)))
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "delays", tuple(int(d) for d in self.delays))

    @property
    def n_r(self):
        return self.h.shape[1]

    @property
    def strongest_tap(self):
        '''Delay of the row with the largest energy in this realization'''
        return self.delays[int(np.argmax(np.sum(np.abs(self.h) ** 2, axis=1)))]

    def scaled(self, c):
        return TimeChannel(self.h * c, self.delays, self.pdp)

    def on_grid(self, delays):
        '''To embed the rows into a larger delay grid (missing taps are zero rows)'''
        index = {d: i for i, d in enumerate(delays)}
        out = np.zeros((len(delays), self.n_r), dtype=complex)
        for row, d in enumerate(self.delays):
            if d not in index:
                raise InvalidArgumentError("channel delay {} is not on the delay grid {}".format(d, tuple(delays)))
            out[index[d]] = self.h[row]
        return out

    def frequency_response(self, f):
        '''To get H_f = F_L H_t (N x N_r) on the delay grid of the DftSubmatrix f'''
        return f.columns @ self.on_grid(f.delays)


@dataclass(frozen=True, eq=False)
class ReceivedMatrix:
    '''N x N_r frequency-domain received matrix Y_f and its per-sample noise variance.'''
    y: np.ndarray
    noise_variance: float = 0.0

    def __post_init__(self):
        y = np.asarray(self.y, dtype=complex)
        if y.ndim != 2:
            raise InvalidArgumentError("received matrix must be 2-D, got shape {}".format(y.shape))
        if not np.all(np.isfinite(y)):
            raise InvalidArgumentError("received matrix has non-finite entries")
        object.__setattr__(self, "y", y)

    @property
    def n(self):
        return self.y.shape[0]

    @property
    def n_r(self):
        return self.y.shape[1]

    def rotated(self, theta):
        return ReceivedMatrix(self.y * np.exp(1j * theta), self.noise_variance)


#----------------------------------------------------
# Channel generators
#----------------------------------------------------
def _gaussian(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def sample_time_channel(pdp, corr, rng):
    '''
    To draw a Rayleigh channel:
    - it takes as input the PowerDelayProfile, the SpatialCorrelation and the random stream
    - it outputs the TimeChannel H = diag(sqrt(rho)) Q R^(1/2), Q i.i.d. CN(0, 1)
    '''
    q = _gaussian(rng, (pdp.n_taps, corr.n_r))
    h = np.sqrt(np.asarray(pdp.powers))[:, None] * (q @ corr.sqrt_factor)
    return TimeChannel(h, pdp.delays, pdp)


def doppler_frequency(speed_kmh, carrier_hz=DEFAULT_CARRIER_HZ):
    '''Maximum Doppler shift (Hz) of a user moving at speed_kmh'''
    return speed_kmh / 3.6 / SPEED_OF_LIGHT * carrier_hz


def temporal_coefficient(f_d, k, t_sym):
    '''Correlation J0(2 pi f_d k t_sym) between channels k symbol periods apart'''
    if f_d < 0 or k < 0 or t_sym <= 0:
        raise InvalidArgumentError("need f_d >= 0, k >= 0 and t_sym > 0 (got {}, {}, {})".format(f_d, k, t_sym))
    return float(j0(2.0 * np.pi * f_d * k * t_sym))


def evolve_channel(h0, eta, corr, pdp, rng):
    '''
    To evolve a channel in time:
    - it takes as input H_0, the temporal coefficient eta, the correlation, the PDP and the random stream
    - it outputs H_k = eta H_0 + sqrt(1 - eta^2) G_k R^(1/2), G_k drawn like "sample_time_channel"
    '''
    if abs(eta) > 1.0:
        raise InvalidArgumentError("temporal coefficient must satisfy |eta| <= 1, got {}".format(eta))
    pdp = pdp if pdp is not None else h0.pdp
    g = sample_time_channel(pdp, corr, rng)
    if g.delays != h0.delays:
        raise InvalidArgumentError("PDP delays {} do not match the channel delays {}".format(g.delays, h0.delays))
    h = eta * h0.h + np.sqrt(1.0 - eta * eta) * g.h
    return TimeChannel(h, h0.delays, pdp)


def noise_variance(snr_db):
    '''Noise variance giving snr_db for one unit-power user (0 for snr_db = +inf)'''
    if np.isposinf(snr_db):
        return 0.0
    return float(10.0 ** (-snr_db / 10.0))


def apply_channel(x, channels, f, snr_db, rng):
    '''
    To build the received matrix:
    - it takes as input the grid of each user, the TimeChannel of each user, the DftSubmatrix,
      the per-user SNR in dB (+inf for no noise) and the random stream of the noise
    - it outputs the ReceivedMatrix Y_f = sum_u X_f(u) F_L H_t(u) + W_f
    '''
    grids = list(x) if isinstance(x, (list, tuple)) else [x]
    chans = list(channels) if isinstance(channels, (list, tuple)) else [channels]
    if len(grids) != len(chans):
        raise InvalidArgumentError("{} user grids for {} channels".format(len(grids), len(chans)))
    n_r = chans[0].n_r
    y = np.zeros((f.n, n_r), dtype=complex)
    for grid, chan in zip(grids, chans):
        symbols = diagonal_of(grid)
        if symbols.size != f.n:
            raise InvalidArgumentError("grid has {} subcarriers, DFT submatrix has {}".format(symbols.size, f.n))
        if chan.n_r != n_r:
            raise InvalidArgumentError("channels disagree on the number of antennas ({} vs {})".format(chan.n_r, n_r))
        y += symbols[:, None] * chan.frequency_response(f)

    sigma2 = noise_variance(snr_db)
    if sigma2 > 0.0:
        y = y + np.sqrt(sigma2) * _gaussian(rng, y.shape)
    return ReceivedMatrix(y, sigma2)
