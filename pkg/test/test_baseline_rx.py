import numpy as np
import pytest

from helpers import InvalidArgumentError
from channel import ReceivedMatrix, TimeChannel, apply_channel, exponential_corr, resolve_pdp, sample_time_channel
from numerics import build_dft_submatrix
from waveform import PilotSpec, build_tx_symbol, constellation
from baseline_rx import (BASELINE_PILOT_VALUE, PilotGrid, interpolate_fft, interpolate_linear,
                         ls_pilot_estimates, mmse_equalize_multi, mrc_combine)


def gaussian(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


class TestPilotGrid:
    """Equi-spaced baseline pilots"""

    def test_single_user(self):
        grid = PilotGrid(1024, 104)
        pos = grid.positions(0)
        assert len(pos) == 104
        assert set(np.diff(pos)) == {9}
        assert grid.density == pytest.approx(104 / 1024)
        np.testing.assert_array_equal(grid.values(0), np.full(104, BASELINE_PILOT_VALUE))

    def test_users_are_disjoint(self):
        grid = PilotGrid(1024, 104, n_users=4)
        sets = [set(grid.positions(u)) for u in range(4)]
        assert all(len(s) == 26 for s in sets)
        assert len(set.union(*sets)) == 104
        assert set(grid.reserved(0)) == sets[1] | sets[2] | sets[3]

    def test_rejects_too_many(self):
        with pytest.raises(InvalidArgumentError, match="outside"):
            PilotGrid(64, 65)


class TestEstimation:
    """LS at the pilots and interpolation"""

    def test_ls_flat_channel(self, rng):
        n, grid = 256, PilotGrid(256, 32)
        f = build_dft_submatrix(n, [0])
        h = gaussian(rng, (1, 8))
        symbols = build_tx_symbol(rng, n, 16, grid.spec(0))
        y = apply_channel(symbols, TimeChannel(h, (0,)), f, float("inf"), rng)
        est = ls_pilot_estimates(y, grid, 0)
        np.testing.assert_allclose(est, np.repeat(h, 32, axis=0), atol=1e-12)

    def test_ls_noise_variance(self, rng):
        grid = PilotGrid(1024, 512)
        sigma2 = 0.2
        y = ReceivedMatrix(np.sqrt(sigma2) * gaussian(rng, (1024, 64)), sigma2)
        est = ls_pilot_estimates(y, grid, 0)
        assert np.var(est) == pytest.approx(sigma2, rel=0.05)

    def test_linear_reproduces_affine(self):
        positions = np.array([0, 8, 16, 24, 31])
        est = (1 + 2j) + (0.5 - 0.25j) * positions[:, None] * np.ones((1, 3))
        out = interpolate_linear(est, positions, 32)
        expected = (1 + 2j) + (0.5 - 0.25j) * np.arange(32)[:, None] * np.ones((1, 3))
        np.testing.assert_allclose(out, expected, atol=1e-12)

    def test_linear_flat_extrapolation(self):
        out = interpolate_linear(np.array([[1.0], [3.0]]), np.array([4, 8]), 12)
        np.testing.assert_allclose(out[:4, 0], 1.0)
        np.testing.assert_allclose(out[8:, 0], 3.0)

    def test_linear_needs_two_pilots(self):
        with pytest.raises(InvalidArgumentError, match="at least 2 pilots"):
            interpolate_linear(np.ones((1, 2)), np.array([3]), 16)

    @pytest.mark.parametrize("positions", [3 + 8 * np.arange(128), 9 * np.arange(104)])
    def test_fft_exact_for_short_channels(self, positions, rng):
        n = 1024
        f = build_dft_submatrix(n, [0, 1, 2, 3])
        h = sample_time_channel(resolve_pdp("ped4"), exponential_corr(8, 0.0), rng)
        h_f = h.frequency_response(f)
        out = interpolate_fft(h_f[positions], positions, n, 4)
        np.testing.assert_allclose(out, h_f, atol=1e-8)

    def test_fft_beats_linear(self, rng):
        n, grid = 1024, PilotGrid(1024, 104)
        f = build_dft_submatrix(n, [0, 1, 2, 3])
        h_f = sample_time_channel(resolve_pdp("ped4"), exponential_corr(8, 0.0), rng).frequency_response(f)
        pos = grid.positions(0)
        err_linear = np.max(np.abs(interpolate_linear(h_f[pos], pos, n) - h_f))
        err_fft = np.max(np.abs(interpolate_fft(h_f[pos], pos, n, 4) - h_f))
        assert err_fft < err_linear

    def test_fft_full_band(self, rng):
        est = gaussian(rng, (64, 2))
        out = interpolate_fft(est, np.arange(64), 64, 64)
        np.testing.assert_allclose(out, est, atol=1e-10)

    def test_fft_rejects_uneven_pilots(self):
        with pytest.raises(InvalidArgumentError, match="equi-spaced"):
            interpolate_fft(np.ones((3, 1)), np.array([0, 4, 9]), 16, 2)

    def test_fft_rejects_l_max(self):
        with pytest.raises(InvalidArgumentError, match="l_max"):
            interpolate_fft(np.ones((4, 1)), np.arange(4) * 4, 16, 5)


class TestCombining:
    """MRC and multi-user MMSE"""

    def test_mrc_perfect_csi(self, rng):
        h_f = gaussian(rng, (64, 8))
        x = constellation(16).points[rng.integers(0, 16, 64)]
        np.testing.assert_allclose(mrc_combine(x[:, None] * h_f, h_f), x, atol=1e-12)

    def test_mrc_single_antenna(self, rng):
        h_f = gaussian(rng, (32, 1))
        y = gaussian(rng, (32, 1))
        np.testing.assert_allclose(mrc_combine(y, h_f), y[:, 0] / h_f[:, 0])

    def test_mrc_shape_mismatch(self):
        with pytest.raises(InvalidArgumentError, match="does not match"):
            mrc_combine(np.ones((8, 2)), np.ones((8, 3)))

    def test_mrc_array_gain(self, rng):
        n_r, sigma2 = 64, 10 ** -0.5
        err = []
        for _ in range(200):
            h_f = gaussian(rng, (1, n_r)).repeat(64, axis=0)
            x = constellation(4).points[rng.integers(0, 4, 64)]
            y = x[:, None] * h_f + np.sqrt(sigma2) * gaussian(rng, (64, n_r))
            err.append(np.abs(mrc_combine(y, h_f) - x) ** 2)
        gain_db = 10 * np.log10(sigma2 / np.mean(err))
        assert gain_db == pytest.approx(10 * np.log10(n_r - 1), abs=0.5)

    def test_mmse_low_noise_is_zero_forcing(self, rng):
        h_fs = [gaussian(rng, (16, 8)) for _ in range(3)]
        y = gaussian(rng, (16, 8))
        xs = mmse_equalize_multi(y, h_fs, 1e-12)
        b = np.stack(h_fs, axis=1)
        for n in range(16):
            zf = np.linalg.lstsq(b[n].T, y[n], rcond=None)[0]
            np.testing.assert_allclose([x[n] for x in xs], zf, rtol=1e-6, atol=1e-9)

    def test_mmse_single_user_is_mrc(self, rng):
        h_f = gaussian(rng, (32, 8))
        y = gaussian(rng, (32, 8))
        x_mmse, = mmse_equalize_multi(y, [h_f], 0.3)
        np.testing.assert_allclose(x_mmse, mrc_combine(y, h_f), rtol=1e-9)

    def test_mmse_beats_mrc_with_interference(self, rng):
        n, n_r, sigma2 = 1024, 64, 0.1
        qam = constellation(16)
        labels = [rng.integers(0, 16, n) for _ in range(4)]
        h_fs = [gaussian(rng, (n, n_r)) for _ in range(4)]
        y = sum(qam.points[l][:, None] * h for l, h in zip(labels, h_fs))
        y = y + np.sqrt(sigma2) * gaussian(rng, (n, n_r))
        mmse = mmse_equalize_multi(y, h_fs, sigma2)
        err_mmse = sum(np.count_nonzero(qam.labels_of(x) != l) for x, l in zip(mmse, labels))
        err_mrc = sum(np.count_nonzero(qam.labels_of(mrc_combine(y, h)) != l) for h, l in zip(h_fs, labels))
        assert err_mmse < err_mrc
