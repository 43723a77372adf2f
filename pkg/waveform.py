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
Square QAM constellations and frequency-domain OFDM symbols.

Gray map (part of the result format, BER is bit-exact given the seeds):
a label of log2(M) bits is split in two halves, the MSB half selects the
in-phase level and the LSB half the quadrature level. On each axis the Gray
code g of level index i is i ^ (i >> 1), and level index i has amplitude
(sqrt(M) - 1) - 2i before scaling. Label 0 is therefore the (+,+) corner,
and QPSK bits 00 map to (1+j)/sqrt(2).
'''

import functools
import logging
from dataclasses import dataclass, field
import numpy as np

from helpers import InvalidArgumentError, diagonal_of


logger = logging.getLogger("blindmimo.waveform")

SUPPORTED_ORDERS = (4, 16, 64, 256)


#----------------------------------------------------
# QamConstellation class
#----------------------------------------------------
class QamConstellation:
    '''
    Class defining a square Gray-coded QAM constellation characterized by:
    - its order M
    - its M points, scaled to unit average energy
    - its bit map (row "label" holds the bits of point "label")
    '''

    #Constructor
    def __init__(self, order):
        if order not in SUPPORTED_ORDERS:
            raise InvalidArgumentError("unsupported QAM order {} (supported: {})".format(order, SUPPORTED_ORDERS))
        self._order = int(order)
        self._bits_per_symbol = int(np.log2(order))
        self._side = int(round(np.sqrt(order)))
        self._scale = np.sqrt(2.0 * (order - 1) / 3.0)

        #Level index of each Gray code on one axis
        levels = np.arange(self._side)
        self._level_of_gray = np.empty(self._side, dtype=int)
        self._level_of_gray[levels ^ (levels >> 1)] = levels
        self._gray_of_level = levels ^ (levels >> 1)

        half = self._bits_per_symbol // 2
        labels = np.arange(order)
        i_level = self._level_of_gray[labels >> half]
        q_level = self._level_of_gray[labels & (self._side - 1)]
        self._points = (self._amplitude(i_level) + 1j * self._amplitude(q_level)) / self._scale

        shifts = np.arange(self._bits_per_symbol - 1, -1, -1)
        self._bit_map = ((labels[:, None] >> shifts) & 1).astype(np.uint8)

    #Accessors
    def _get_order(self):
        '''Method to be call when we want to access the attribute "order"'''
        return self._order
    def _get_points(self):
        '''Method to be call when we want to access the attribute "points"'''
        return self._points.copy()
    def _get_bit_map(self):
        '''Method to be call when we want to access the attribute "bit_map"'''
        return self._bit_map.copy()
    def _get_bits_per_symbol(self):
        '''Method to be call when we want to access the attribute "bits_per_symbol"'''
        return self._bits_per_symbol
    def _get_corner(self):
        '''Method to be call when we want to access the attribute "corner" (maximum-energy point, label 0)'''
        return complex(self._points[0])

    #Properties
    order = property(_get_order)
    points = property(_get_points)
    bit_map = property(_get_bit_map)
    bits_per_symbol = property(_get_bits_per_symbol)
    corner = property(_get_corner)

    #Method "_amplitude"
    def _amplitude(self, level):
        return (self._side - 1) - 2.0 * np.asarray(level)

    #Method "_slice"
    def _slice(self, u):
        '''Nearest level index on one axis; a tie goes to the smaller amplitude (larger index)'''
        u = np.nan_to_num(np.asarray(u, dtype=float), nan=0.0, posinf=1e6, neginf=-1e6)
        t = ((self._side - 1) - u * self._scale) / 2.0
        return np.clip(np.floor(t + 0.5), 0, self._side - 1).astype(int)

    #Method "labels_of"
    def labels_of(self, symbols):
        '''Method to get the label of the nearest point of each symbol'''
        z = np.asarray(symbols, dtype=complex)
        i_gray = self._gray_of_level[self._slice(z.real)]
        q_gray = self._gray_of_level[self._slice(z.imag)]
        return (i_gray << (self._bits_per_symbol // 2)) | q_gray

    #Method "modulate"
    def modulate(self, bits):
        '''Method to map a bit sequence to constellation points'''
        bits = np.asarray(bits, dtype=int).ravel()
        if bits.size % self._bits_per_symbol != 0:
            raise InvalidArgumentError("{} bits cannot be split into {}-bit symbols".format(bits.size, self._bits_per_symbol))
        if np.any((bits != 0) & (bits != 1)):
            raise InvalidArgumentError("bits must be 0 or 1")
        weights = 1 << np.arange(self._bits_per_symbol - 1, -1, -1)
        labels = bits.reshape(-1, self._bits_per_symbol) @ weights
        return self._points[labels]

    #Method "demodulate"
    def demodulate(self, symbols):
        '''Method to get the hard-decision bits of the symbols'''
        return self._bit_map[self.labels_of(symbols)].ravel()

    #Method "nearest"
    def nearest(self, symbols):
        '''Method to get the nearest constellation point of each symbol'''
        return self._points[self.labels_of(symbols)]

    #Method "__repr__"
    def __repr__(self):
        return "QamConstellation: order ({}), bits per symbol ({})".format(self.order, self.bits_per_symbol)


@functools.lru_cache(maxsize=None)
def constellation(m):
    '''To get the (shared) QamConstellation of order m'''
    return QamConstellation(m)


#----------------------------------------------------
# Pilots and frequency-domain grids
#----------------------------------------------------
@dataclass(frozen=True)
class PilotSpec:
    '''Known symbols on given subcarriers. Positions are kept sorted, values follow them.'''
    positions: tuple
    values: tuple

    def __post_init__(self):
        positions = tuple(int(p) for p in self.positions)
        values = tuple(complex(v) for v in self.values)
        if len(positions) != len(values):
            raise InvalidArgumentError("{} pilot positions but {} pilot values".format(len(positions), len(values)))
        if len(set(positions)) != len(positions):
            dup = sorted(p for p in set(positions) if positions.count(p) > 1)
            raise InvalidArgumentError("pilot collision at subcarrier(s) {}".format(dup))
        order = np.argsort(positions, kind="stable")
        object.__setattr__(self, "positions", tuple(positions[i] for i in order))
        object.__setattr__(self, "values", tuple(values[i] for i in order))

    @property
    def count(self):
        return len(self.positions)

    @classmethod
    def empty(cls):
        return cls((), ())


@dataclass(frozen=True, eq=False)
class FreqSymbolGrid:
    '''
    Diagonal of X_f for one user: N symbols with the pilot annotations.
    "labels" holds the constellation label drawn for every subcarrier;
    "reserved" subcarriers (pilots of other users) are silent.
    '''
    n: int
    m: int
    symbols: np.ndarray
    labels: np.ndarray
    pilots: PilotSpec
    reserved: tuple = field(default=())

    @property
    def data_mask(self):
        mask = np.ones(self.n, dtype=bool)
        mask[list(self.pilots.positions)] = False
        mask[list(self.reserved)] = False
        return mask

    @property
    def bits(self):
        '''Payload bits carried by the data subcarriers'''
        return labels_to_bits(self.labels[self.data_mask], self.m)


def labels_to_bits(labels, m):
    '''To unpack constellation labels into their bits (MSB first)'''
    return constellation(m).bit_map[np.asarray(labels, dtype=int)].ravel()


def _check_positions(positions, n, what):
    for p in positions:
        if p < 0 or p >= n:
            raise InvalidArgumentError("{} subcarrier {} outside [0, {}]".format(what, p, n - 1))


#----------------------------------------------------
# Modulation functions
#----------------------------------------------------
def qam_modulate(bits, m):
    '''
    To modulate a bit sequence:
    - it takes as input the bits (length multiple of log2(m)) and the order m
    - it outputs the Gray-mapped unit-average-energy symbols
    '''
    return constellation(m).modulate(bits)


def qam_demodulate(symbols, m):
    '''
    To demodulate symbols by nearest-point hard decision:
    - it takes as input complex symbols and the order m
    - it outputs the bits; a tie goes to the smaller real part, then the smaller imaginary part
    '''
    return constellation(m).demodulate(symbols)


def nearest_constellation_point(z, m):
    '''To map z (scalar or array) to its nearest constellation point, with the tie rule of "qam_demodulate"'''
    points = constellation(m).nearest(np.atleast_1d(z))
    if np.ndim(z) == 0:
        return complex(points[0])
    return points.reshape(np.shape(z))


def map_and_pin(x, m, pilots, reserved=()):
    '''To map X to the constellation, pin the pilots to their known values and silence the reserved subcarriers'''
    out = nearest_constellation_point(diagonal_of(x), m)
    out[list(pilots.positions)] = pilots.values
    out[list(reserved)] = 0.0
    return out


#----------------------------------------------------
# build_tx_symbol function
#----------------------------------------------------
def build_tx_symbol(rng, n, m, pilots, reserved=()):
    '''
    To build one OFDM symbol of a user:
    - it takes as input the random stream, N, the order m, the PilotSpec and the subcarriers reserved to other users
    - it outputs the FreqSymbolGrid (uniform random data on the data subcarriers, pilot values on the pilots)
    '''
    _check_positions(pilots.positions, n, "pilot")
    _check_positions(reserved, n, "reserved")
    clash = set(pilots.positions) & set(reserved)
    if clash:
        raise InvalidArgumentError("pilot collision with reserved subcarrier(s) {}".format(sorted(clash)))

    labels = rng.integers(0, m, size=n)
    symbols = constellation(m).points[labels]
    grid = FreqSymbolGrid(n=n, m=m, symbols=symbols, labels=labels, pilots=PilotSpec.empty())
    return with_pilots(grid, pilots, reserved)


def with_pilots(grid, pilots, reserved=()):
    '''To get a copy of a grid with another pilot layout (data labels unchanged)'''
    _check_positions(pilots.positions, grid.n, "pilot")
    _check_positions(reserved, grid.n, "reserved")
    symbols = constellation(grid.m).points[grid.labels]
    symbols[list(pilots.positions)] = pilots.values
    symbols[list(reserved)] = 0.0
    return FreqSymbolGrid(n=grid.n, m=grid.m, symbols=symbols, labels=grid.labels.copy(),
                          pilots=pilots, reserved=tuple(sorted(int(r) for r in reserved)))


def default_pilots(n, m, n_users=1, count=1):
    '''
    To place the rotational pilots of every user:
    - it takes as input N, the order m, the number of users and the number of pilots per user
    - it outputs one PilotSpec per user, spread over the band and interleaved between users
      (a single user with a single pilot gets the center subcarrier N/2), valued at the constellation corner
    '''
    if n_users < 1 or count < 1:
        raise InvalidArgumentError("need at least one user and one pilot per user")
    if n_users * count > n:
        raise InvalidArgumentError("{} pilots do not fit in {} subcarriers".format(n_users * count, n))
    corner = constellation(m).corner
    specs = []
    for u in range(n_users):
        positions = [((2 * (i * n_users + u) + 1) * n) // (2 * count * n_users) for i in range(count)]
        specs.append(PilotSpec(tuple(positions), tuple([corner] * count)))
    return specs


def reserved_for(specs, user):
    '''Pilot positions of all the other users'''
    return tuple(sorted(p for v, spec in enumerate(specs) if v != user for p in spec.positions))
