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
Blind receiver: Y_f ~ X_f F_L H_t is factored by alternating a regularized
least-squares channel solve and a per-subcarrier symbol solve, started from
an SVD-based initial point. The factorization is determined up to a complex
scale, x_hat = lambda * x_true and H_hat = H_t / lambda; lambda is resolved
with one known (rotational) pilot per user, refined on the data subcarriers,
and removed as X_hat / lambda.
'''

import logging
from collections import namedtuple
from dataclasses import dataclass, field
import numpy as np
from scipy.spatial import ConvexHull, QhullError
from sklearn.cluster import KMeans

from helpers import (ConfigError, IllConditionedMixingError, InvalidArgumentError,
                     diagonal_of, matrix_of)
from channel import TimeChannel
from numerics import (build_dft_submatrix, top_left_singular_vectors, regularized_ls,
                      regularized_ls_channel, regularized_row_solve, maximal_ratio_combine)
from waveform import constellation, default_pilots, labels_to_bits, map_and_pin, reserved_for


logger = logging.getLogger("blindmimo.blind_rx")

INIT_METHODS = ("variance", "circularity", "given-tap", "warm-start")
DEROTATIONS = ("in-loop", "cluster", "lambda-only")
FALLBACKS = ("given-tap", "raise")
CONDITION_LIMIT = 1e6


#----------------------------------------------------
# Types
#----------------------------------------------------
@dataclass(frozen=True)
class BlindConfig:
    iterations: int = 10
    mu: float = 0.1
    derotate_at: int = 4
    qam_order: int = 64
    delays: tuple = (0, 1, 2, 3)
    init: str = "variance"
    derotation: str = "in-loop"
    n_users: int = 1
    pilot_count: int = 1
    pilots: tuple = None
    given_taps: tuple = None
    bins: int = 4
    fallback: str = "given-tap"
    refine_scale: bool = True

    def __post_init__(self):
        if self.iterations < 2:
            raise ConfigError("blind.iterations", "must be at least 2, got {}".format(self.iterations))
        if not 1 <= self.derotate_at < self.iterations:
            raise ConfigError("blind.derotate_at", "must satisfy 1 <= derotate_at < iterations ({}), got {}".format(self.iterations, self.derotate_at))
        if not 0.0 < self.mu < 1.0:
            raise ConfigError("blind.mu", "must be in (0, 1), got {}".format(self.mu))
        if self.init not in INIT_METHODS:
            raise ConfigError("blind.init", "must be one of {}, got '{}'".format(INIT_METHODS, self.init))
        if self.derotation not in DEROTATIONS:
            raise ConfigError("blind.derotation", "must be one of {}, got '{}'".format(DEROTATIONS, self.derotation))
        if self.fallback not in FALLBACKS:
            raise ConfigError("blind.fallback", "must be one of {}, got '{}'".format(FALLBACKS, self.fallback))
        if self.bins < 2:
            raise ConfigError("blind.bins", "must be at least 2, got {}".format(self.bins))
        if self.n_users < 1 or self.pilot_count < 1:
            raise ConfigError("blind.pilot_count", "need at least one user and one pilot per user")
        if self.pilots is not None and len(self.pilots) != self.n_users:
            raise ConfigError("blind.pilots", "{} pilot specs for {} users".format(len(self.pilots), self.n_users))
        if self.given_taps is not None and len(self.given_taps) != self.n_users:
            raise ConfigError("blind.given_taps", "{} taps for {} users".format(len(self.given_taps), self.n_users))
        object.__setattr__(self, "delays", tuple(int(d) for d in self.delays))

    def pilot_specs(self, n):
        if self.pilots is not None:
            return list(self.pilots)
        return default_pilots(n, self.qam_order, self.n_users, self.pilot_count)


InitialPoint = namedtuple("InitialPoint", ["x0", "tap", "index", "scores"])
AmStep = namedtuple("AmStep", ["h_hat", "x_next", "zero_rows"])
ClusterDecision = namedtuple("ClusterDecision", ["symbols", "labels", "angle", "lambda_hat"])


@dataclass(frozen=True, eq=False)
class CoefficientMatrix:
    '''Mixing coefficients a[j, u] of user u in the j-th dominant left singular vector'''
    a: np.ndarray
    condition: float


@dataclass(eq=False)
class UserDecode:
    symbols: np.ndarray
    labels: np.ndarray
    lambda_hat: complex
    h_hat: TimeChannel
    dominant_tap: int
    iterations_used: int
    m: int

    @property
    def hard_bits(self):
        return labels_to_bits(self.labels, self.m)


@dataclass(eq=False)
class DecodeResult:
    '''
    Per-user decodes plus diagnostics: residual ||Y - X F H||_F and regularized
    objective after each iteration, subcarriers with a zero combining row, and
    the hard labels each user would get if decoding stopped after each iteration.
    '''
    users: list
    residuals: list = field(default_factory=list)
    objective: list = field(default_factory=list)
    zero_rows: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    fallback_used: bool = False

    @property
    def symbols(self):
        return self.users[0].symbols

    @property
    def hard_bits(self):
        return self.users[0].hard_bits

    @property
    def lambda_hat(self):
        return self.users[0].lambda_hat

    @property
    def h_hat(self):
        return self.users[0].h_hat


#----------------------------------------------------
# Initial points
#----------------------------------------------------
def _pick(scores, delays, best):
    '''Index of the best score (best = max or min), the smallest delay winning ties'''
    scores = np.asarray(scores, dtype=float)
    target = best(scores)
    candidates = np.flatnonzero(scores == target)
    return int(min(candidates, key=lambda i: delays[i]))


def angle_histogram_score(x, bins=4, power=4):
    '''
    Variance of the counts of the angle histogram of x, folded on the quarter turn of
    the QAM symmetry and weighted by |x|**power (power=0 gives plain counts).
    The folded angle 4*angle(x) is measured from its weighted circular mean and bin 0 is
    centred on it, so the score does not depend on the global phase of x. Weights are
    scaled to a mean of one, so counts stay in samples.
    '''
    x = np.asarray(x, dtype=complex)
    weights = np.abs(x) ** power
    total = np.sum(weights)
    if not total > 0:
        return 0.0
    weights = weights * (x.size / total)
    psi = 4.0 * np.angle(x)
    mean = np.angle(np.sum(weights * np.exp(1j * psi)))
    width = 2.0 * np.pi / bins
    folded = np.mod(psi - mean + width / 2.0, 2.0 * np.pi)
    counts, _ = np.histogram(folded, bins=bins, range=(0.0, 2.0 * np.pi), weights=weights)
    return float(np.var(counts))


def initial_point_variance(u1, f, bins=4):
    '''
    To get the initial point by the angle-histogram criterion:
    - it takes as input the dominant left singular vector u1, the DftSubmatrix and the number of bins
      over the quarter turn
    - it outputs the InitialPoint: x0 = u1 * conj(f_i) of the tap whose angles have the
      most uneven histogram, the tap delay, its index and every tap's score
    '''
    u1 = np.asarray(u1, dtype=complex)
    if not np.linalg.norm(u1) > 0:
        raise InvalidArgumentError("initial point needs a non-zero vector")
    candidates = u1[:, None] * f.columns.conj()
    scores = [angle_histogram_score(candidates[:, i], bins) for i in range(f.n_taps)]
    index = _pick(scores, f.delays, np.max)
    return InitialPoint(candidates[:, index], f.delays[index], index, scores)


def circularity(points):
    '''4 pi area / perimeter^2 of the convex hull of complex points (0 for a degenerate hull)'''
    xy = np.column_stack([np.real(points), np.imag(points)])
    try:
        hull = ConvexHull(xy)
    except (QhullError, ValueError):
        return 0.0
    #In 2-D, "volume" is the enclosed area and "area" the perimeter
    if hull.area <= 0:
        return 0.0
    return float(4.0 * np.pi * hull.volume / hull.area ** 2)


def initial_point_circularity(z, f):
    '''
    To get the initial point by the circularity criterion:
    - it takes as input a vector z (u1, or an unmixed Z(u)) and the DftSubmatrix
    - it outputs the InitialPoint of the least circular candidate z * conj(f_i)
    '''
    z = np.asarray(z, dtype=complex)
    if not np.linalg.norm(z) > 0:
        raise InvalidArgumentError("initial point needs a non-zero vector")
    candidates = z[:, None] * f.columns.conj()
    scores = [circularity(candidates[:, i]) for i in range(f.n_taps)]
    index = _pick(scores, f.delays, np.min)
    return InitialPoint(candidates[:, index], f.delays[index], index, scores)


def initial_point_given(z, f, tap):
    '''To build the initial point on a known dominant tap'''
    index = f.index_of(tap)
    return InitialPoint(np.asarray(z, dtype=complex) * f.columns[:, index].conj(), f.delays[index], index, None)


#----------------------------------------------------
# Alternating-minimization steps
#----------------------------------------------------
def am_step_single(y, x_hat, f, mu):
    '''
    To run one alternating step for one user:
    - it takes as input the received matrix, X_hat, the DftSubmatrix and mu
    - it outputs the AmStep: H_hat by regularized LS, then x_next by MRC on B = F_L H_hat,
      and the subcarriers where B has a zero row (x_next = 0 there)
    '''
    h_hat = regularized_ls_channel(x_hat, f, y, mu)
    x_next, zero_rows = maximal_ratio_combine(y, f.columns @ h_hat.h)
    return AmStep(h_hat, x_next, zero_rows)


def am_step_multi(y, x_hat, f, mu):
    '''
    To run one alternating step for N_u users:
    - it takes as input the received matrix, one X_hat per user, the DftSubmatrix and mu
    - it outputs the AmStep with one H_hat and one x_next per user; the channels come from
      one regularized LS over [X_1 F_L, ..., X_U F_L], the symbols from a regularized
      N_u x N_r solve on every subcarrier
    '''
    xs = [diagonal_of(x) for x in x_hat]
    mat = matrix_of(y)
    n_users, n_taps = len(xs), f.n_taps
    if n_users * n_taps > mat.shape[1]:
        raise InvalidArgumentError("N_u * L = {} exceeds N_r = {}".format(n_users * n_taps, mat.shape[1]))
    design = np.hstack([x[:, None] * f.columns for x in xs])
    stacked = regularized_ls(design, mat, mu)
    h_hats = [TimeChannel(stacked[u * n_taps:(u + 1) * n_taps], f.delays) for u in range(n_users)]

    b = np.stack([f.columns @ h.h for h in h_hats], axis=1)
    x_next = regularized_row_solve(b, mat, mu)
    zero_rows = np.flatnonzero(np.all(np.abs(b) == 0, axis=(1, 2)))
    return AmStep(h_hats, [x_next[:, u] for u in range(n_users)], zero_rows)


#----------------------------------------------------
# Scale estimation and de-rotation
#----------------------------------------------------
def estimate_lambda(x_hat, pilots):
    '''
    To estimate the complex scale of X_hat:
    - it takes as input X_hat and the PilotSpec
    - it outputs lambda_hat = mean(x_hat(p_i) / P_i), so that x_hat ~ lambda_hat * x_true
    '''
    if pilots.count < 1:
        raise InvalidArgumentError("scale estimation needs at least one pilot")
    values = np.asarray(pilots.values, dtype=complex)
    if np.any(values == 0):
        raise InvalidArgumentError("zero pilot value at subcarrier(s) {}".format([p for p, v in zip(pilots.positions, values) if v == 0]))
    x = diagonal_of(x_hat)
    return complex(np.mean(x[list(pilots.positions)] / values))


def refine_lambda(x_hat, pilots, m, reserved=()):
    '''
    To refine the pilot estimate of lambda on the data subcarriers:
    - it takes as input X_hat, the PilotSpec, the order m and the subcarriers silenced for other users
    - it outputs lambda_hat: the magnitude comes from the energy of X_hat (the constellation has
      unit mean energy) and the phase from the fourth power of X_hat, the pilot estimate picking
      the quarter turn; one decision-directed least-squares fit on the nearest points follows
    '''
    x = diagonal_of(x_hat)
    coarse = estimate_lambda(x, pilots)
    mask = np.ones(x.size, dtype=bool)
    mask[list(pilots.positions)] = False
    mask[list(reserved)] = False
    data = x[mask]
    energy = np.mean(np.abs(data) ** 2) if data.size else 0.0
    if not energy > 0:
        return coarse

    qam = constellation(m)
    magnitude = np.sqrt(energy / np.mean(np.abs(qam.points) ** 2))
    base = (np.angle(np.sum(data ** 4)) - np.angle(np.mean(qam.points ** 4))) / 4.0
    turns = base + np.arange(4) * np.pi / 2.0
    phase = turns[np.argmin(np.abs(np.angle(np.exp(1j * (turns - np.angle(coarse))))))]
    lam = magnitude * np.exp(1j * phase)

    decisions = qam.nearest(data / lam)
    fit = np.vdot(decisions, data) / np.vdot(decisions, decisions)
    logger.debug("lambda: pilot %s, blind %s, decision-directed %s", coarse, lam, fit)
    return complex(fit)


def residual_rotation(centroids, m):
    '''
    To measure the residual rotation of a set of constellation-like points:
    - it takes as input the points (centroids) and the order m
    - it outputs atan(slope) of the least-squares line through the points whose nearest
      constellation point is on the top row (0 when fewer than two such points)
    '''
    centroids = np.asarray(centroids, dtype=complex)
    qam = constellation(m)
    nearest = qam.nearest(centroids)
    top = np.isclose(nearest.imag, np.max(qam.points.imag))
    row = centroids[top]
    if row.size < 2 or np.ptp(row.real) == 0:
        return 0.0
    slope, _ = np.polyfit(row.real, row.imag, 1)
    return float(np.arctan(slope))


def derotate_cluster(x_hat, pilots, m):
    '''
    To de-rotate X_hat by clustering:
    - it takes as input X_hat, the PilotSpec and the order m
    - it outputs the ClusterDecision: X_hat is scaled to unit power, Lloyd's k-means runs with
      the M points rotated by the pilot-estimated lambda as initial centroids, the centroids
      are divided by lambda, turned by minus the top-row line angle and mapped to the
      constellation; every sample takes the decision of its centroid
    '''
    x = diagonal_of(x_hat)
    if x.size < m:
        raise InvalidArgumentError("clustering needs N >= M ({} < {})".format(x.size, m))
    power = np.sqrt(np.mean(np.abs(x) ** 2))
    if power == 0:
        raise InvalidArgumentError("cannot cluster an all-zero X_hat")
    x = x / power
    lam = estimate_lambda(x, pilots)
    if lam == 0:
        lam = 1.0
    qam = constellation(m)

    init = lam * qam.points
    data = np.column_stack([x.real, x.imag])
    #Empty clusters are relocated by scikit-learn to the samples farthest from their centers
    km = KMeans(n_clusters=m, init=np.column_stack([init.real, init.imag]), n_init=1, algorithm="lloyd")
    km.fit(data)
    centroids = (km.cluster_centers_[:, 0] + 1j * km.cluster_centers_[:, 1]) / lam

    angle = residual_rotation(centroids, m)
    centroid_labels = qam.labels_of(centroids * np.exp(-1j * angle))
    labels = centroid_labels[km.labels_]
    logger.debug("cluster de-rotation: lambda %s, residual angle %.3f deg", lam, np.degrees(angle))
    return ClusterDecision(qam.points[labels], labels, angle, lam * power)


#----------------------------------------------------
# Decode loop
#----------------------------------------------------
def _scale(x, pilots, m, reserved, refine):
    return refine_lambda(x, pilots, m, reserved) if refine else estimate_lambda(x, pilots)


def _snapshot_labels(x, pilots, m, reserved, derotated, refine):
    '''Hard labels of X_hat if decoding stopped here'''
    qam = constellation(m)
    if derotated:
        return qam.labels_of(x)
    lam = _scale(x, pilots, m, reserved, refine)
    return qam.labels_of(x / lam if lam != 0 else x)


def _objective(y, xs, hs, f, mu):
    fit = matrix_of(y) - sum(x[:, None] * (f.columns @ h.h) for x, h in zip(xs, hs))
    residual = float(np.linalg.norm(fit))
    penalty = sum(float(np.linalg.norm(h.h)) ** 2 for h in hs)
    return residual, residual ** 2 + mu * penalty


def _alternate(y, f, xs, cfg, specs, k_star, multi, iterations):
    '''
    To iterate the AM steps from the initial points xs:
    at k == k_star every X_hat(u) is divided by its lambda_hat (pilot estimate, refined on the
    data subcarriers when cfg.refine_scale is set), and from k_star on every X_hat(u) is mapped
    to the constellation with pilots pinned and other users' pilots silenced
    '''
    m = cfg.qam_order
    n_users = len(xs)
    reserved = [reserved_for(specs, u) for u in range(n_users)]
    in_loop = cfg.derotation == "in-loop"
    lambdas = [None] * n_users
    result = DecodeResult(users=[])
    hs = None

    for k in range(1, iterations + 1):
        if multi:
            step = am_step_multi(y, xs, f, cfg.mu)
            hs, xs = step.h_hat, step.x_next
        else:
            step = am_step_single(y, xs[0], f, cfg.mu)
            hs, xs = [step.h_hat], [step.x_next]
        result.zero_rows.extend(int(z) for z in step.zero_rows)

        residual, objective = _objective(y, xs, hs, f, cfg.mu)
        result.residuals.append(residual)
        result.objective.append(objective)

        if in_loop and k == k_star:
            lambdas = [_scale(x, spec, m, res, cfg.refine_scale) for x, spec, res in zip(xs, specs, reserved)]
            logger.debug("iteration %d: lambda_hat %s", k, lambdas)
            xs = [x / lam if lam != 0 else x for x, lam in zip(xs, lambdas)]
        if in_loop and k >= k_star:
            xs = [map_and_pin(x, m, spec, res) for x, spec, res in zip(xs, specs, reserved)]

        derotated = in_loop and k >= k_star
        result.snapshots.append([_snapshot_labels(x, spec, m, res, derotated, cfg.refine_scale)
                                 for x, spec, res in zip(xs, specs, reserved)])
        logger.debug("iteration %d: residual %.6g, objective %.6g", k, residual, objective)

    return xs, hs, lambdas, result


def _finish(xs, hs, lambdas, result, cfg, specs, taps, iterations):
    '''To apply the final de-rotation of the configured kind and build the per-user decodes'''
    m = cfg.qam_order
    qam = constellation(m)
    for u, (x, h, spec) in enumerate(zip(xs, hs, specs)):
        res = reserved_for(specs, u)
        if cfg.derotation == "in-loop":
            lam = lambdas[u]
            symbols = x
        elif cfg.derotation == "lambda-only":
            lam = estimate_lambda(x, spec)
            symbols = map_and_pin(x / lam if lam != 0 else x, m, spec, res)
            h = h.scaled(lam)
        else:
            decision = derotate_cluster(x, spec, m)
            lam = decision.lambda_hat
            symbols = map_and_pin(decision.symbols, m, spec, res)
            h = h.scaled(lam)
        result.users.append(UserDecode(symbols=symbols, labels=qam.labels_of(symbols), lambda_hat=complex(lam),
                                       h_hat=h, dominant_tap=taps[u], iterations_used=iterations, m=m))
    return result


#----------------------------------------------------
# blind_decode_single function
#----------------------------------------------------
def blind_decode_single(y, cfg):
    '''
    To decode one user blindly:
    - it takes as input the received matrix and the BlindConfig
    - it outputs the DecodeResult: SVD -> initial point -> T AM steps with the
      de-rotation schedule of cfg.derotation
    '''
    if cfg.init == "warm-start":
        raise InvalidArgumentError("warm-start decoding needs a previous channel, use warm_start_decode")
    mat = matrix_of(y)
    f = build_dft_submatrix(mat.shape[0], cfg.delays)
    specs = cfg.pilot_specs(mat.shape[0])[:1]
    u1 = top_left_singular_vectors(mat, 1).vector(0)

    if cfg.init == "variance":
        start = initial_point_variance(u1, f, cfg.bins)
    elif cfg.init == "circularity":
        start = initial_point_circularity(u1, f)
    else:
        if cfg.given_taps is None:
            raise ConfigError("blind.given_taps", "given-tap initialization needs the dominant tap")
        start = initial_point_given(u1, f, cfg.given_taps[0])
    logger.debug("initial point on tap %d (scores %s)", start.tap, start.scores)

    xs, hs, lambdas, result = _alternate(y, f, [start.x0], cfg, specs, cfg.derotate_at, False, cfg.iterations)
    return _finish(xs, hs, lambdas, result, cfg, specs, [start.tap], cfg.iterations)


#----------------------------------------------------
# Multi-user decode
#----------------------------------------------------
def estimate_coefficient_matrix(svd, pilots):
    '''
    To estimate the mixing of the users in the dominant singular vectors:
    - it takes as input the SvdBasis (at least N_u vectors) and one PilotSpec per user
    - it outputs the CoefficientMatrix a[j, u] = u_j(p_u) / P_u on the first pilot of each user;
      raises IllConditionedMixingError when its condition number exceeds 1e6
    '''
    n_users = len(pilots)
    if svd.left_vectors.shape[1] < n_users:
        raise InvalidArgumentError("{} singular vectors for {} users".format(svd.left_vectors.shape[1], n_users))
    a = np.empty((n_users, n_users), dtype=complex)
    for u, spec in enumerate(pilots):
        if spec.count < 1:
            raise InvalidArgumentError("user {} has no pilot".format(u))
        value = spec.values[0]
        if value == 0:
            raise InvalidArgumentError("zero pilot value for user {}".format(u))
        a[:, u] = svd.left_vectors[spec.positions[0], :n_users] / value
    condition = float(np.linalg.cond(a))
    if not np.isfinite(condition) or condition > CONDITION_LIMIT:
        raise IllConditionedMixingError(condition, CONDITION_LIMIT)
    return CoefficientMatrix(a, condition)


def unmix(svd, a):
    '''To get one row Z(u) per user from the dominant singular vectors: U^T = A Z^T'''
    n_users = a.a.shape[0]
    return np.linalg.solve(a.a, svd.left_vectors[:, :n_users].T)


def multiuser_initial_points(svd, a, f, given_taps=None):
    '''
    To get the initial point of every user:
    - it takes as input the SvdBasis, the CoefficientMatrix, the DftSubmatrix and optionally the known dominant taps
    - it outputs one InitialPoint per user, by circularity on the unmixed Z(u)
    '''
    z = unmix(svd, a)
    points = []
    for u in range(z.shape[0]):
        if given_taps is not None:
            points.append(initial_point_given(z[u], f, given_taps[u]))
        else:
            points.append(initial_point_circularity(z[u], f))
    return points


def blind_decode_multi(y, cfg):
    '''
    To decode N_u users blindly:
    - it takes as input the received matrix and the BlindConfig (one pilot set per user, disjoint)
    - it outputs the DecodeResult: coefficient matrix -> initial points -> T AM steps, with the
      per-user lambda de-rotation at derotate_at and constellation mapping afterwards
    '''
    if cfg.derotation == "cluster":
        raise InvalidArgumentError("cluster de-rotation is single-user only")
    if cfg.init == "warm-start":
        raise InvalidArgumentError("warm-start decoding needs a previous channel, use warm_start_decode")
    mat = matrix_of(y)
    f = build_dft_submatrix(mat.shape[0], cfg.delays)
    specs = cfg.pilot_specs(mat.shape[0])
    taken = [p for spec in specs for p in spec.positions]
    if len(set(taken)) != len(taken):
        raise InvalidArgumentError("users share pilot subcarriers")
    svd = top_left_singular_vectors(mat, cfg.n_users)
    given = cfg.given_taps if cfg.init == "given-tap" else None
    if cfg.init == "given-tap" and given is None:
        raise ConfigError("blind.given_taps", "given-tap initialization needs the dominant taps")

    fallback_used = False
    try:
        a = estimate_coefficient_matrix(svd, specs)
        starts = multiuser_initial_points(svd, a, f, given)
    except IllConditionedMixingError as e:
        if cfg.fallback != "given-tap" or cfg.given_taps is None:
            raise
        logger.warning("%s; falling back to the singular vectors on the given taps", e)
        starts = [initial_point_given(svd.vector(u), f, cfg.given_taps[u]) for u in range(cfg.n_users)]
        fallback_used = True

    xs, hs, lambdas, result = _alternate(y, f, [s.x0 for s in starts], cfg, specs, cfg.derotate_at, True, cfg.iterations)
    result.fallback_used = fallback_used
    return _finish(xs, hs, lambdas, result, cfg, specs, [s.tap for s in starts], cfg.iterations)


#----------------------------------------------------
# warm_start_decode function
#----------------------------------------------------
def warm_start_decode(y, h_prev, cfg, iterations=None):
    '''
    To decode one user from the channel of the previous symbol:
    - it takes as input the received matrix, the previous TimeChannel, the BlindConfig and
      optionally the number of AM steps (cfg.iterations by default; one step is allowed)
    - it outputs the DecodeResult; the first X_hat is the MRC output on F_L h_prev and the
      de-rotation happens at iteration min(derotate_at, 2, iterations)
    '''
    iterations = cfg.iterations if iterations is None else int(iterations)
    if iterations < 1:
        raise ConfigError("blind.iterations", "a warm start needs at least 1 iteration, got {}".format(iterations))
    mat = matrix_of(y)
    f = build_dft_submatrix(mat.shape[0], cfg.delays)
    if h_prev.n_r != mat.shape[1]:
        raise InvalidArgumentError("previous channel has {} antennas, received matrix {}".format(h_prev.n_r, mat.shape[1]))
    specs = cfg.pilot_specs(mat.shape[0])[:1]
    x0, _ = maximal_ratio_combine(mat, h_prev.frequency_response(f))
    k_star = min(cfg.derotate_at, 2, iterations)
    xs, hs, lambdas, result = _alternate(y, f, [x0], cfg, specs, k_star, False, iterations)
    return _finish(xs, hs, lambdas, result, cfg, specs, [h_prev.strongest_tap], iterations)
