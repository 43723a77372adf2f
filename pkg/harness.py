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
Experiment orchestration: configuration, seeded paired Monte Carlo trials,
metrics and result emission.

Within a trial every receiver sees the same data labels, channels and noise;
only the pilot subcarriers differ between the blind layout (one rotational
pilot per user) and the baseline layout (equi-spaced pilots). BER is counted
on the subcarriers that are data in both layouts.
'''

import csv
import json
import logging
import math
from collections import namedtuple
from dataclasses import MISSING, asdict, dataclass, field, fields, replace
import numpy as np
from pathos.multiprocessing import ProcessingPool as Pool

from helpers import (ConfigError, IllConditionedMixingError, InvalidArgumentError, __version__,
                     standard_error, trial_seed)
from waveform import SUPPORTED_ORDERS, PilotSpec, build_tx_symbol, constellation, labels_to_bits, reserved_for, with_pilots
from channel import (DEFAULT_CARRIER_HZ, apply_channel, doppler_frequency, evolve_channel, exponential_corr,
                     resolve_pdp, sample_time_channel, temporal_coefficient)
from numerics import build_dft_submatrix, top_left_singular_vectors
from blind_rx import (BlindConfig, blind_decode_multi, blind_decode_single, estimate_coefficient_matrix,
                      initial_point_circularity, initial_point_variance, unmix, warm_start_decode)
from baseline_rx import PilotGrid, interpolate_fft, interpolate_linear, ls_pilot_estimates, mmse_equalize_multi, mrc_combine


logger = logging.getLogger("blindmimo.harness")

EXPERIMENTS = ("ber-sweep", "tap-error", "temporal", "utilization")
RECEIVERS = ("blind", "mrc-linear", "mrc-fft", "mmse-linear", "mmse-fft")
ESTIMATORS = ("variance", "circularity")
CSV_COLUMNS = ["experiment", "receiver", "snr_db", "metric", "value", "stderr", "trials", "seed"]
LARGE_N = 4096


#----------------------------------------------------
# Configuration
#----------------------------------------------------
@dataclass
class BlindSettings:
    iterations: int = None
    mu: float = 0.1
    derotate_at: int = 4
    init: str = "variance"
    derotation: str = "in-loop"
    pilot_count: int = 1
    bins: int = 4
    fallback: str = "given-tap"
    refine_scale: bool = True


@dataclass
class TemporalSettings:
    speeds_kmh: list = field(default_factory=lambda: [5.0, 10.0])
    symbol_times_s: list = field(default_factory=lambda: [0.0, 0.005, 0.01])
    carrier_hz: float = DEFAULT_CARRIER_HZ
    max_iterations: int = 30
    baseline: str = "mrc-fft"


@dataclass
class UtilizationSettings:
    pilot_counts: list = field(default_factory=lambda: [52, 64, 80, 96, 104, 128, 160, 208, 256, 320])
    snr_db: list = field(default_factory=list)


@dataclass
class ExperimentConfig:
    experiment: str = "ber-sweep"
    name: str = ""
    n: int = 1024
    n_r: int = 64
    delays: list = field(default_factory=lambda: [0, 1, 2, 3])
    qam_order: int = 64
    n_users: int = 1
    pdp: list = field(default_factory=lambda: ["ped4"])
    correlation: float = 0.0
    snr_db: list = field(default_factory=lambda: [0.0, 2.0, 4.0, 6.0, 8.0, 10.0])
    user_snr_offsets_db: list = field(default_factory=list)
    nr_values: list = field(default_factory=list)
    trials: int = 200
    receivers: list = field(default_factory=lambda: ["blind", "mrc-fft"])
    baseline_pilots: int = 104
    estimators: list = field(default_factory=lambda: ["variance", "circularity"])
    blind: BlindSettings = field(default_factory=BlindSettings)
    temporal: TemporalSettings = field(default_factory=TemporalSettings)
    utilization: UtilizationSettings = field(default_factory=UtilizationSettings)
    seed: int = 1
    threads: int = 1
    large: bool = False

    @property
    def label(self):
        return self.name or self.experiment


NESTED = {"blind": BlindSettings, "temporal": TemporalSettings, "utilization": UtilizationSettings}


def _expected_type(f):
    if f.default is not MISSING and f.default is not None:
        return type(f.default)
    if f.default_factory is not MISSING:
        return type(f.default_factory())
    return f.type if isinstance(f.type, type) else object


def _check_value(path, expected, value):
    if expected is bool:
        ok = isinstance(value, bool)
    elif expected is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif expected is float:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    else:
        ok = isinstance(value, expected)
    if not ok:
        raise ConfigError(path, "expected {}, got {!r}".format(expected.__name__, value))


def _from_dict(cls, data, prefix=""):
    '''To build a configuration dataclass from a JSON object, rejecting unknown keys'''
    if not isinstance(data, dict):
        raise ConfigError(prefix.rstrip(".") or "<root>", "expected a JSON object")
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, value in data.items():
        path = prefix + key
        if key not in known:
            raise ConfigError(path, "unknown key")
        if key in NESTED and cls is ExperimentConfig:
            kwargs[key] = _from_dict(NESTED[key], value, path + ".")
        elif value is None and known[key].default is None:
            kwargs[key] = None
        else:
            _check_value(path, _expected_type(known[key]), value)
            kwargs[key] = value
    return cls(**kwargs)


def _as_float(path, value):
    if isinstance(value, str) and value.lower() in ("inf", "+inf", "infinity"):
        return float("inf")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, "expected a number or \"inf\", got {!r}".format(value))
    return float(value)


def load_config(path):
    '''
    To read an experiment configuration:
    - it takes as input the path of a JSON file holding ExperimentConfig fields
    - it outputs the ExperimentConfig (not yet validated); unknown keys raise ConfigError
    '''
    try:
        with open(path) as f:
            data = json.load(f)
    except OSError as e:
        raise ConfigError("--config", "cannot read {}: {}".format(path, e)) from e
    except json.JSONDecodeError as e:
        raise ConfigError("--config", "{} is not valid JSON: {}".format(path, e)) from e
    return _from_dict(ExperimentConfig, data)


def user_pdps(cfg):
    names = cfg.pdp if len(cfg.pdp) > 1 else cfg.pdp * cfg.n_users
    return [resolve_pdp(name) for name in names]


def scenario_iterations(cfg):
    '''
    AM iterations of a run: blind.iterations when set, otherwise 10 for one user on
    uncorrelated antennas, 20 with antenna correlation or several users, 40 with both
    '''
    if cfg.blind.iterations is not None:
        return cfg.blind.iterations
    correlated, multi = cfg.correlation > 0, cfg.n_users > 1
    if correlated and multi:
        return 40
    if correlated or multi:
        return 20
    return 10


def blind_config(cfg, given_taps=None):
    '''To build the BlindConfig of a run (given_taps is only used by the given-tap initialization)'''
    b = cfg.blind
    return BlindConfig(iterations=scenario_iterations(cfg), mu=b.mu, derotate_at=b.derotate_at,
                       qam_order=cfg.qam_order, delays=tuple(cfg.delays), init=b.init, derotation=b.derotation,
                       n_users=cfg.n_users, pilot_count=b.pilot_count, bins=b.bins, fallback=b.fallback,
                       refine_scale=b.refine_scale, given_taps=tuple(given_taps) if given_taps is not None else None)


def validate_config(cfg):
    '''
    To check an ExperimentConfig:
    - it takes as input the configuration
    - it outputs the configuration with normalized numeric lists; raises ConfigError naming the field
    '''
    if cfg.experiment not in EXPERIMENTS:
        raise ConfigError("experiment", "must be one of {}, got '{}'".format(EXPERIMENTS, cfg.experiment))
    if cfg.trials < 1:
        raise ConfigError("trials", "must be at least 1, got {}".format(cfg.trials))
    if not cfg.snr_db:
        raise ConfigError("snr_db", "the SNR grid is empty")
    snr = [_as_float("snr_db[{}]".format(i), v) for i, v in enumerate(cfg.snr_db)]
    if cfg.n < 1 or cfg.n_r < 1 or cfg.n_users < 1:
        raise ConfigError("n", "n, n_r and n_users must be positive")
    if cfg.n >= LARGE_N and not cfg.large:
        raise ConfigError("n", "N = {} runs need the --large flag".format(cfg.n))
    if cfg.qam_order not in SUPPORTED_ORDERS:
        raise ConfigError("qam_order", "must be one of {}, got {}".format(SUPPORTED_ORDERS, cfg.qam_order))
    try:
        build_dft_submatrix(cfg.n, cfg.delays)
    except InvalidArgumentError as e:
        raise ConfigError("delays", str(e)) from e
    if not 0.0 <= cfg.correlation < 1.0:
        raise ConfigError("correlation", "must be in [0, 1), got {}".format(cfg.correlation))
    if len(cfg.pdp) not in (1, cfg.n_users):
        raise ConfigError("pdp", "give one PDP or one per user ({} users), got {}".format(cfg.n_users, len(cfg.pdp)))
    for i, name in enumerate(cfg.pdp):
        try:
            pdp = resolve_pdp(name)
        except (InvalidArgumentError, OSError, ValueError) as e:
            raise ConfigError("pdp[{}]".format(i), str(e)) from e
        missing = set(pdp.delays) - set(cfg.delays)
        if missing:
            raise ConfigError("pdp[{}]".format(i), "delays {} are not on the delay grid {}".format(sorted(missing), cfg.delays))
    if cfg.user_snr_offsets_db and len(cfg.user_snr_offsets_db) != cfg.n_users:
        raise ConfigError("user_snr_offsets_db", "needs one offset per user ({})".format(cfg.n_users))
    for i, r in enumerate(cfg.receivers):
        if r not in RECEIVERS:
            raise ConfigError("receivers[{}]".format(i), "must be one of {}, got '{}'".format(RECEIVERS, r))
    for i, e in enumerate(cfg.estimators):
        if e not in ESTIMATORS:
            raise ConfigError("estimators[{}]".format(i), "must be one of {}, got '{}'".format(ESTIMATORS, e))
    if cfg.n_users * len(cfg.delays) > cfg.n_r and cfg.n_users > 1:
        raise ConfigError("n_users", "n_users * L = {} exceeds n_r = {}".format(cfg.n_users * len(cfg.delays), cfg.n_r))
    if cfg.nr_values and cfg.experiment != "ber-sweep":
        raise ConfigError("nr_values", "the antenna sweep is a ber-sweep option")
    for i, n_r in enumerate(cfg.nr_values):
        if isinstance(n_r, bool) or not isinstance(n_r, int) or n_r < 1:
            raise ConfigError("nr_values[{}]".format(i), "expected a positive antenna count, got {!r}".format(n_r))
        if cfg.n_users > 1 and cfg.n_users * len(cfg.delays) > n_r:
            raise ConfigError("nr_values[{}]".format(i), "n_users * L = {} exceeds {}".format(cfg.n_users * len(cfg.delays), n_r))
    if not cfg.n_users <= cfg.baseline_pilots <= cfg.n:
        raise ConfigError("baseline_pilots", "must be in [{}, {}], got {}".format(cfg.n_users, cfg.n, cfg.baseline_pilots))
    if cfg.baseline_pilots // cfg.n_users < max(cfg.delays) + 1:
        raise ConfigError("baseline_pilots", "each user needs at least {} pilots for FFT interpolation".format(max(cfg.delays) + 1))
    if cfg.threads < 1:
        raise ConfigError("threads", "must be at least 1, got {}".format(cfg.threads))
    if cfg.seed < 0:
        raise ConfigError("seed", "must be non-negative, got {}".format(cfg.seed))
    blind_config(cfg)

    t = cfg.temporal
    if cfg.experiment == "temporal":
        if cfg.n_users != 1:
            raise ConfigError("n_users", "temporal runs are single-user")
        if not t.symbol_times_s or t.symbol_times_s[0] != 0:
            raise ConfigError("temporal.symbol_times_s", "must start with the cold-start symbol at 0")
        if any(s < 0 for s in t.speeds_kmh) or not t.speeds_kmh:
            raise ConfigError("temporal.speeds_kmh", "speeds must be non-negative and non-empty")
        if t.max_iterations <= cfg.blind.derotate_at:
            raise ConfigError("temporal.max_iterations", "must exceed blind.derotate_at ({})".format(cfg.blind.derotate_at))
        if t.baseline not in RECEIVERS or t.baseline == "blind":
            raise ConfigError("temporal.baseline", "must be a baseline receiver, got '{}'".format(t.baseline))
    if cfg.experiment == "utilization":
        if not cfg.utilization.pilot_counts:
            raise ConfigError("utilization.pilot_counts", "the search list is empty")
    return replace(cfg, snr_db=snr, utilization=replace(cfg.utilization, snr_db=[
        _as_float("utilization.snr_db[{}]".format(i), v) for i, v in enumerate(cfg.utilization.snr_db)]))


#----------------------------------------------------
# Results
#----------------------------------------------------
@dataclass
class ResultRow:
    experiment: str
    receiver: str
    snr_db: float
    metric: str
    value: float
    stderr: float
    trials: int
    seed: int


@dataclass
class ResultTable:
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def add(self, cfg, receiver, snr_db, metric, value, stderr, trials=None):
        self.rows.append(ResultRow(cfg.label, receiver, float(snr_db), metric, float(value), float(stderr),
                                   int(cfg.trials if trials is None else trials), int(cfg.seed)))

    def select(self, receiver=None, metric=None):
        return [r for r in self.rows if (receiver is None or r.receiver == receiver) and (metric is None or r.metric == metric)]


def _new_table(cfg):
    return ResultTable(metadata={"experiment": cfg.experiment, "label": cfg.label, "seed": cfg.seed,
                                 "version": __version__}, config=asdict(cfg))


def _fmt(value):
    return format(float(value), ".9g")


def _jsonable(obj):
    if isinstance(obj, float):
        if math.isnan(obj):
            return None
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return float(_fmt(obj))
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    return obj


def emit_results(table, path, fmt="csv"):
    '''
    To write a ResultTable:
    - it takes as input the table, the output path and the format ("csv" or "json")
    - it outputs the file: CSV columns experiment,receiver,snr_db,metric,value,stderr,trials,seed
      with floats at 9 significant digits, or JSON with metadata, config echo and rows (NaN as null)
    '''
    if fmt not in ("csv", "json"):
        raise InvalidArgumentError("unknown result format '{}'".format(fmt))
    try:
        with open(path, "w", newline="") as f:
            if fmt == "csv":
                w = csv.writer(f, lineterminator="\n")
                w.writerow(CSV_COLUMNS)
                for r in table.rows:
                    w.writerow([r.experiment, r.receiver, _fmt(r.snr_db), r.metric, _fmt(r.value),
                                _fmt(r.stderr), r.trials, r.seed])
            else:
                doc = {"metadata": table.metadata, "config": table.config,
                       "rows": [{c: getattr(r, c) for c in CSV_COLUMNS} for r in table.rows]}
                json.dump(_jsonable(doc), f, indent=2)
                f.write("\n")
    except OSError as e:
        raise OSError("cannot write results to {}: {}".format(path, e)) from e
    return path


#----------------------------------------------------
# Parallel map over trials
#----------------------------------------------------
def run_tasks(fn, tasks, threads=1):
    '''To run fn over the tasks, in a pathos process pool when threads > 1; results keep the task order'''
    tasks = list(tasks)
    if threads <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    p = Pool(nodes=threads)
    try:
        return p.map(fn, tasks)
    finally:
        p.close()
        p.join()
        p.clear()


#----------------------------------------------------
# Paired trial
#----------------------------------------------------
@dataclass(eq=False)
class TrialScene:
    '''
    Everything shared by the receivers of one trial. The blind and baseline received
    matrices are drawn from the same data, channels and noise samples and are equal on
    every subcarrier of data_mask(); they differ on the pilot subcarriers only, where
    each layout puts its own pilots (and silences the other users' pilots). Metrics are
    computed on data_mask() alone.
    '''
    f: object
    grids: list
    channels: list
    snr_db: float
    noise_seed: object
    blind_specs: list
    baseline: PilotGrid

    def received(self, specs, reserved):
        grids = [with_pilots(g, s, r) for g, s, r in zip(self.grids, specs, reserved)]
        return apply_channel(grids, self.channels, self.f, self.snr_db, np.random.default_rng(self.noise_seed))

    def received_blind(self):
        n_users = len(self.grids)
        return self.received(self.blind_specs, [reserved_for(self.blind_specs, u) for u in range(n_users)])

    def received_baseline(self):
        n_users = len(self.grids)
        return self.received([self.baseline.spec(u) for u in range(n_users)], [self.baseline.reserved(u) for u in range(n_users)])

    def data_mask(self):
        mask = np.ones(self.f.n, dtype=bool)
        for spec in self.blind_specs:
            mask[list(spec.positions)] = False
        mask[self.baseline.all_positions()] = False
        return mask

    def true_taps(self):
        return [c.strongest_tap for c in self.channels]


def build_scene(cfg, snr_db, seed):
    '''
    To draw one trial:
    - it takes as input the configuration, the SNR and the trial SeedSequence
    - it outputs the TrialScene (data labels, channels and a noise seed shared by every receiver)
    '''
    data_seed, noise_seed = seed.spawn(2)
    rng = np.random.default_rng(data_seed)
    f = build_dft_submatrix(cfg.n, cfg.delays)
    corr = exponential_corr(cfg.n_r, cfg.correlation)
    grids = [build_tx_symbol(rng, cfg.n, cfg.qam_order, PilotSpec.empty()) for _ in range(cfg.n_users)]
    offsets = cfg.user_snr_offsets_db or [0.0] * cfg.n_users
    channels = [sample_time_channel(pdp, corr, rng).scaled(10.0 ** (off / 20.0))
                for pdp, off in zip(user_pdps(cfg), offsets)]
    return TrialScene(f=f, grids=grids, channels=channels, snr_db=snr_db, noise_seed=noise_seed,
                      blind_specs=blind_config(cfg).pilot_specs(cfg.n),
                      baseline=PilotGrid(cfg.n, cfg.baseline_pilots, cfg.n_users))


def decode_blind(cfg, y, given_taps=None):
    bcfg = blind_config(cfg, given_taps)
    if cfg.n_users == 1:
        return blind_decode_single(y, bcfg)
    return blind_decode_multi(y, bcfg)


def decode_baseline(receiver, cfg, scene, y):
    '''To run a pilot-based receiver; it outputs (symbols per user, H_f estimate per user)'''
    grid = scene.baseline
    l_max = max(cfg.delays) + 1
    h_fs = []
    for u in range(cfg.n_users):
        est = ls_pilot_estimates(y, grid, u)
        if receiver.endswith("linear"):
            h_fs.append(interpolate_linear(est, grid.positions(u), cfg.n))
        else:
            h_fs.append(interpolate_fft(est, grid.positions(u), cfg.n, l_max))
    if receiver.startswith("mrc"):
        return [mrc_combine(y, h) for h in h_fs], h_fs
    return mmse_equalize_multi(y, h_fs, y.noise_variance), h_fs


TrialScore = namedtuple("TrialScore", ["ber", "mse", "curve"])


def _bit_errors(scene, labels, mask, m):
    errors = bits = 0
    for u, got in enumerate(labels):
        sent = labels_to_bits(scene.grids[u].labels[mask], m)
        errors += int(np.count_nonzero(sent != labels_to_bits(got[mask], m)))
        bits += sent.size
    return errors / bits


def score_trial(cfg, scene, receiver):
    '''
    To decode one trial with one receiver:
    - it outputs the TrialScore: BER on the common data subcarriers of all users, channel MSE
      averaged over users and, for the blind receiver, the BER after each AM iteration
    '''
    qam = constellation(cfg.qam_order)
    mask = scene.data_mask()
    curve = ()
    if receiver == "blind":
        y = scene.received_blind()
        result = decode_blind(cfg, y, scene.true_taps())
        labels = [u.labels for u in result.users]
        h_fs = [u.h_hat.frequency_response(scene.f) for u in result.users]
        curve = tuple(_bit_errors(scene, snap, mask, cfg.qam_order) for snap in result.snapshots)
    else:
        y = scene.received_baseline()
        symbols, h_fs = decode_baseline(receiver, cfg, scene, y)
        labels = [qam.labels_of(s) for s in symbols]

    mse = [float(np.mean(np.abs(h_fs[u] - scene.channels[u].frequency_response(scene.f)) ** 2))
           for u in range(cfg.n_users)]
    return TrialScore(_bit_errors(scene, labels, mask, cfg.qam_order), float(np.mean(mse)), curve)


def _ber_trial(task):
    cfg, snr_index, trial_index = task
    seed = trial_seed(cfg.seed, cfg.label, snr_index, trial_index)
    scene = build_scene(cfg, cfg.snr_db[snr_index], seed)
    return {r: score_trial(cfg, scene, r) for r in cfg.receivers}


def paired_ber(cfg):
    '''
    To get the per-trial samples of every SNR point:
    - it outputs one (samples, curves) pair per SNR point; samples maps each receiver to the
      trials x (BER, channel MSE) array, curves holds the trials x iterations blind BER array
      (None without the blind receiver)
    '''
    tasks = [(cfg, si, ti) for si in range(len(cfg.snr_db)) for ti in range(cfg.trials)]
    outs = run_tasks(_ber_trial, tasks, cfg.threads)
    points = []
    for si, snr in enumerate(cfg.snr_db):
        chunk = outs[si * cfg.trials:(si + 1) * cfg.trials]
        samples = {r: np.array([[o[r].ber, o[r].mse] for o in chunk]) for r in cfg.receivers}
        curves = np.array([o["blind"].curve for o in chunk]) if "blind" in cfg.receivers else None
        points.append((samples, curves))
        logger.info("%s: SNR %s dB done (%s)", cfg.label, snr, ", ".join(
            "{} BER {:.3g}".format(r, samples[r][:, 0].mean()) for r in cfg.receivers))
    return points


#----------------------------------------------------
# run_ber_sweep function
#----------------------------------------------------
def _ber_rows(table, cfg, suffix=""):
    for snr, (samples, curves) in zip(cfg.snr_db, paired_ber(cfg)):
        for r in cfg.receivers:
            table.add(cfg, r + suffix, snr, "ber", samples[r][:, 0].mean(), standard_error(samples[r][:, 0]))
            table.add(cfg, r + suffix, snr, "channel_mse", samples[r][:, 1].mean(), standard_error(samples[r][:, 1]))
        if curves is not None:
            for k in range(curves.shape[1]):
                table.add(cfg, "blind:it{}{}".format(k + 1, suffix), snr, "ber_iteration", curves[:, k].mean(),
                          standard_error(curves[:, k]))


def run_ber_sweep(cfg):
    '''
    To sweep the SNR grid:
    - it takes as input the validated ExperimentConfig
    - it outputs the ResultTable with, per SNR point and receiver, the mean BER and channel MSE,
      and the blind BER after each AM iteration (metric ber_iteration, receiver blind:it<k>);
      with nr_values, the sweep is repeated per antenna count and receivers are tagged :nr<N_r>
    '''
    table = _new_table(cfg)
    if not cfg.nr_values:
        _ber_rows(table, cfg)
        return table
    for n_r in cfg.nr_values:
        logger.info("%s: %d receive antennas", cfg.label, n_r)
        _ber_rows(table, replace(cfg, n_r=n_r), ":nr{}".format(n_r))
    return table


#----------------------------------------------------
# run_tap_error function
#----------------------------------------------------
def _tap_trial(task):
    cfg, snr_index, trial_index = task
    seed = trial_seed(cfg.seed, cfg.label, snr_index, trial_index)
    scene = build_scene(cfg, cfg.snr_db[snr_index], seed)
    y = scene.received_blind()
    truth = scene.true_taps()
    f = scene.f
    svd = top_left_singular_vectors(y, cfg.n_users)

    if cfg.n_users == 1:
        vectors = [svd.vector(0)]
    else:
        try:
            vectors = list(unmix(svd, estimate_coefficient_matrix(svd, scene.blind_specs)))
        except IllConditionedMixingError as e:
            logger.debug("trial %d: %s", trial_index, e)
            return {est: [1] * cfg.n_users for est in cfg.estimators}

    out = {}
    for est in cfg.estimators:
        if est == "variance":
            taps = [initial_point_variance(z, f, cfg.blind.bins).tap for z in vectors]
        else:
            taps = [initial_point_circularity(z, f).tap for z in vectors]
        out[est] = [int(t != d) for t, d in zip(taps, truth)]
    return out


def run_tap_error(cfg):
    '''
    To measure the dominant-tap selection errors:
    - it takes as input the validated ExperimentConfig
    - it outputs the ResultTable of the error rates per SNR and estimator (and per user with
      several users); SNR points where circularity does worse than variance are flagged in metadata
    '''
    table = _new_table(cfg)
    tasks = [(cfg, si, ti) for si in range(len(cfg.snr_db)) for ti in range(cfg.trials)]
    outs = run_tasks(_tap_trial, tasks, cfg.threads)
    violations = []
    for si, snr in enumerate(cfg.snr_db):
        chunk = outs[si * cfg.trials:(si + 1) * cfg.trials]
        means = {}
        for est in cfg.estimators:
            per_trial = np.array([o[est] for o in chunk], dtype=float)
            rate = per_trial.mean(axis=1)
            means[est] = (rate.mean(), standard_error(rate))
            table.add(cfg, est, snr, "tap_error", rate.mean(), standard_error(rate))
            if cfg.n_users > 1:
                for u in range(cfg.n_users):
                    table.add(cfg, "{}:user{}".format(est, u), snr, "tap_error", per_trial[:, u].mean(),
                              standard_error(per_trial[:, u]))
        if "variance" in means and "circularity" in means:
            (c, c_se), (v, v_se) = means["circularity"], means["variance"]
            if c > v + 3.0 * np.nan_to_num(np.hypot(c_se, v_se)):
                violations.append(snr)
                logger.warning("SNR %s dB: circularity error %.4g above variance error %.4g", snr, c, v)
        logger.info("%s: SNR %s dB done (%s)", cfg.label, snr, means)
    table.metadata["ordering_violations"] = violations
    return table


#----------------------------------------------------
# run_temporal function
#----------------------------------------------------
def _bit_error_rate(labels, sent_labels, mask, m):
    sent = labels_to_bits(sent_labels[mask], m)
    got = labels_to_bits(labels[mask], m)
    return np.count_nonzero(sent != got) / sent.size


def _temporal_trial(task):
    cfg, speed_index, snr_index, trial_index = task
    t = cfg.temporal
    times = t.symbol_times_s
    seed = trial_seed(cfg.seed, "{}/v{}".format(cfg.label, speed_index), snr_index, trial_index)
    data_seed, *noise_seeds = seed.spawn(1 + len(times))
    rng = np.random.default_rng(data_seed)
    snr = cfg.snr_db[snr_index]
    f_d = doppler_frequency(t.speeds_kmh[speed_index], t.carrier_hz)
    f = build_dft_submatrix(cfg.n, cfg.delays)
    corr = exponential_corr(cfg.n_r, cfg.correlation)
    pdp = user_pdps(cfg)[0]
    h0 = sample_time_channel(pdp, corr, rng)

    bcfg = replace(blind_config(cfg), iterations=t.max_iterations)
    blind_curves, baseline = [], []
    h_prev = None
    for k, when in enumerate(times):
        eta = temporal_coefficient(f_d, 1, when) if when > 0 else 1.0
        h_k = h0 if when == 0 else evolve_channel(h0, eta, corr, pdp, rng)
        grid = build_tx_symbol(rng, cfg.n, cfg.qam_order, PilotSpec.empty())
        scene = TrialScene(f=f, grids=[grid], channels=[h_k], snr_db=snr, noise_seed=noise_seeds[k],
                           blind_specs=bcfg.pilot_specs(cfg.n), baseline=PilotGrid(cfg.n, cfg.baseline_pilots, 1))
        mask = scene.data_mask()

        y = scene.received_blind()
        result = blind_decode_single(y, bcfg) if h_prev is None else warm_start_decode(y, h_prev, bcfg)
        if h_prev is None:
            h_prev = result.h_hat
        blind_curves.append([_bit_error_rate(s[0], grid.labels, mask, cfg.qam_order) for s in result.snapshots])

        symbols, _ = decode_baseline(t.baseline, cfg, scene, scene.received_baseline())
        labels = constellation(cfg.qam_order).labels_of(symbols[0])
        baseline.append(_bit_error_rate(labels, grid.labels, mask, cfg.qam_order))
    return blind_curves, baseline


def iterations_to_match(curves, baseline):
    '''
    Smallest iteration count k (1-based) such that the mean blind BER after k iterations is at
    most the baseline BER at every SNR point; None when no count qualifies.
    curves: SNR x iterations, baseline: SNR
    '''
    curves = np.asarray(curves, dtype=float)
    baseline = np.asarray(baseline, dtype=float)
    ok = np.all(curves <= baseline[:, None], axis=0)
    hits = np.flatnonzero(ok)
    return int(hits[0]) + 1 if hits.size else None


def run_temporal(cfg):
    '''
    To count the iterations needed on temporally correlated symbols:
    - it takes as input the validated ExperimentConfig (single user)
    - it outputs the ResultTable with, per speed and symbol time, the temporal coefficient and the
      minimum number of iterations (cold start at t = 0, warm start from the t = 0 channel estimate
      afterwards) for the blind BER to reach the baseline BER over the SNR grid
    '''
    t = cfg.temporal
    table = _new_table(cfg)
    table.metadata["search_failures"] = []
    tasks = [(cfg, vi, si, ti) for vi in range(len(t.speeds_kmh))
             for si in range(len(cfg.snr_db)) for ti in range(cfg.trials)]
    outs = run_tasks(_temporal_trial, tasks, cfg.threads)
    per_speed = len(cfg.snr_db) * cfg.trials

    for vi, speed in enumerate(t.speeds_kmh):
        f_d = doppler_frequency(speed, t.carrier_hz)
        chunk = outs[vi * per_speed:(vi + 1) * per_speed]
        for k, when in enumerate(t.symbol_times_s):
            tag = "{}:{:g}kmh:{:g}ms".format("blind-cold" if k == 0 else "blind-warm", speed, when * 1e3)
            curves, base = [], []
            for si, snr in enumerate(cfg.snr_db):
                trials = chunk[si * cfg.trials:(si + 1) * cfg.trials]
                curve = np.array([o[0][k] for o in trials])
                bl = np.array([o[1][k] for o in trials])
                curves.append(curve.mean(axis=0))
                base.append(bl.mean())
                table.add(cfg, "{}:{:g}kmh:{:g}ms".format(t.baseline, speed, when * 1e3), snr, "ber", bl.mean(), standard_error(bl))
                table.add(cfg, tag, snr, "ber", curve[:, -1].mean(), standard_error(curve[:, -1]))
            eta = temporal_coefficient(f_d, 1, when) if when > 0 else 1.0
            count = iterations_to_match(curves, base)
            if count is None:
                table.metadata["search_failures"].append(tag)
                logger.warning("%s: blind BER never reaches the baseline within %d iterations", tag, t.max_iterations)
            table.add(cfg, tag, float("nan"), "temporal_coefficient", eta, 0.0)
            table.add(cfg, tag, float("nan"), "iterations", float("nan") if count is None else count, float("nan"))
            logger.info("%s: eta %.3f, iterations %s", tag, eta, count)
    return table


#----------------------------------------------------
# run_utilization function
#----------------------------------------------------
def run_utilization(cfg):
    '''
    To compare spectral utilization:
    - it takes as input the validated ExperimentConfig
    - it outputs the ResultTable with the data-subcarrier fraction of the blind receiver
      ((N - N_u * pilots per user) / N) and of the baseline at the smallest searched pilot count whose
      BER is at most the blind BER at every SNR point; a failed search is reported in metadata
    '''
    table = _new_table(cfg)
    baseline = "mrc-fft" if cfg.n_users == 1 else "mmse-fft"
    snr_grid = cfg.utilization.snr_db or cfg.snr_db
    blind_pilots = cfg.n_users * cfg.blind.pilot_count
    table.add(cfg, "blind", float("nan"), "pilot_fraction", blind_pilots / cfg.n, 0.0)
    table.add(cfg, "blind", float("nan"), "utilization", (cfg.n - blind_pilots) / cfg.n, 0.0)

    search = []
    matched = None
    for count in sorted(cfg.utilization.pilot_counts):
        if count < cfg.n_users * (max(cfg.delays) + 1) or count > cfg.n:
            logger.warning("skipping baseline pilot count %d (outside the usable range)", count)
            continue
        trial_cfg = replace(cfg, baseline_pilots=count, receivers=["blind", baseline], snr_db=list(snr_grid))
        points = paired_ber(trial_cfg)
        blind_ber = [s["blind"][:, 0].mean() for s, _ in points]
        base_ber = [s[baseline][:, 0].mean() for s, _ in points]
        search.append({"pilots": count, "blind_ber": blind_ber, "baseline_ber": base_ber})
        logger.info("%d baseline pilots: blind BER %s, baseline BER %s", count, blind_ber, base_ber)
        if all(b <= a for a, b in zip(blind_ber, base_ber)):
            matched = count
            break

    table.metadata["search"] = search
    table.metadata["search_failed"] = matched is None
    if matched is None:
        logger.warning("baseline cannot match the blind BER with up to %d pilots", max(cfg.utilization.pilot_counts))
        table.add(cfg, baseline, float("nan"), "pilot_fraction", float("nan"), float("nan"))
        table.add(cfg, baseline, float("nan"), "utilization", float("nan"), float("nan"))
    else:
        table.add(cfg, baseline, float("nan"), "pilot_fraction", matched / cfg.n, 0.0)
        table.add(cfg, baseline, float("nan"), "utilization", (cfg.n - matched) / cfg.n, 0.0)
    return table


RUNNERS = {
    "ber-sweep": run_ber_sweep,
    "tap-error": run_tap_error,
    "temporal": run_temporal,
    "utilization": run_utilization,
}


def run_experiment(cfg):
    '''To validate a configuration and run its experiment'''
    cfg = validate_config(cfg)
    logger.info("running %s (%d trials per point, seed %d, %d thread(s))", cfg.label, cfg.trials, cfg.seed, cfg.threads)
    return RUNNERS[cfg.experiment](cfg)
