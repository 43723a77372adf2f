import numpy as np
import pytest

from helpers import ConfigError, IllConditionedMixingError, InvalidArgumentError
from channel import TimeChannel, apply_channel
from numerics import SvdBasis, build_dft_submatrix, top_left_singular_vectors
from waveform import SUPPORTED_ORDERS, PilotSpec, build_tx_symbol, constellation, default_pilots
from blind_rx import (BlindConfig, am_step_multi, am_step_single, angle_histogram_score, blind_decode_multi,
                      blind_decode_single, circularity, derotate_cluster, estimate_coefficient_matrix,
                      estimate_lambda, initial_point_circularity, initial_point_variance, multiuser_initial_points,
                      refine_lambda, residual_rotation, unmix, warm_start_decode)


def data_errors(result, link):
    '''Symbol errors of every user on its data subcarriers'''
    return [int(np.count_nonzero(u.labels[g.data_mask] != g.labels[g.data_mask]))
            for u, g in zip(result.users, link.grids)]


class TestBlindConfig:
    """Validation of the decode parameters"""

    def test_defaults(self):
        cfg = BlindConfig()
        assert (cfg.iterations, cfg.mu, cfg.derotate_at, cfg.qam_order) == (10, 0.1, 4, 64)
        assert cfg.bins == 4 and cfg.refine_scale

    @pytest.mark.parametrize("kwargs, field", [
        ({"iterations": 1, "derotate_at": 1}, "blind.iterations"),
        ({"derotate_at": 10}, "blind.derotate_at"),
        ({"mu": 0.0}, "blind.mu"),
        ({"init": "random"}, "blind.init"),
        ({"derotation": "none"}, "blind.derotation"),
    ])
    def test_rejects(self, kwargs, field):
        with pytest.raises(ConfigError) as e:
            BlindConfig(**kwargs)
        assert e.value.field == field


class TestInitialPoints:
    """SVD-based initial points"""

    def test_variance_finds_single_tap(self, rng):
        f = build_dft_submatrix(256, [0, 1, 2, 3])
        x = build_tx_symbol(rng, 256, 64, PilotSpec.empty()).symbols
        u1 = x * f.columns[:, 2]
        u1 /= np.linalg.norm(u1)
        start = initial_point_variance(u1, f)
        assert start.tap == 2
        ratio = start.x0 / x
        np.testing.assert_allclose(ratio, ratio[0], atol=1e-10)

    def test_circularity_finds_single_tap(self, rng):
        f = build_dft_submatrix(256, [0, 1, 2, 3])
        x = build_tx_symbol(rng, 256, 16, PilotSpec.empty()).symbols
        start = initial_point_circularity(x * f.columns[:, 1] * np.exp(0.4j), f)
        assert start.tap == 1
        assert start.scores[1] == min(start.scores)

    def test_variance_ignores_global_phase(self, make_link):
        link = make_link(n=256, n_r=16, m=64, snr_db=15.0)
        u1 = top_left_singular_vectors(link.y, 1).vector(0)
        a = initial_point_variance(u1, link.f)
        b = initial_point_variance(u1 * np.exp(0.3j), link.f)
        assert a.tap == b.tap

    def test_histogram_score_is_phase_free(self, rng):
        x = build_tx_symbol(rng, 512, 64, PilotSpec.empty()).symbols
        for power in (0, 4):
            score = angle_histogram_score(x, power=power)
            assert angle_histogram_score(x * np.exp(1.1j), power=power) == pytest.approx(score, rel=1e-6)

    def test_histogram_score_of_qam_and_ring(self, rng):
        x = build_tx_symbol(rng, 1024, 64, PilotSpec.empty()).symbols
        ring = x * np.exp(2j * np.pi * rng.random(1024))
        assert angle_histogram_score(x) > 10 * angle_histogram_score(ring)
        assert angle_histogram_score(np.zeros(8)) == 0.0

    def test_variance_with_leaking_second_tap(self, rng):
        '''u1 mixes the dominant tap with a second tap at 0.4 of its amplitude'''
        f = build_dft_submatrix(1024, [0, 1, 2, 3])
        x = build_tx_symbol(rng, 1024, 64, PilotSpec.empty()).symbols
        u1 = x * (f.columns[:, 0] + 0.4 * f.columns[:, 1]) * np.exp(0.8j)
        start = initial_point_variance(u1 / np.linalg.norm(u1), f)
        assert start.tap == 0
        np.testing.assert_allclose(start.x0 / x, start.x0[0] / x[0] * (1 + 0.4 * f.columns[:, 1] / f.columns[0, 1]) / 1.4, rtol=1e-9)

    def test_zero_vector(self):
        f = build_dft_submatrix(16, [0, 1])
        with pytest.raises(InvalidArgumentError, match="non-zero"):
            initial_point_variance(np.zeros(16), f)


class TestCircularity:
    """4 pi area / perimeter^2 of the convex hull"""

    def test_circle(self):
        z = np.exp(2j * np.pi * np.arange(1000) / 1000)
        assert circularity(z) == pytest.approx(1.0, rel=0.02)

    def test_square(self):
        t = np.linspace(-1, 1, 50)
        z = np.concatenate([t + 1j, t - 1j, 1 + 1j * t, -1 + 1j * t])
        assert circularity(z) == pytest.approx(np.pi / 4, rel=0.02)

    def test_collinear(self):
        assert circularity(np.linspace(0, 1, 10) * (1 + 1j)) == 0.0


class TestAmSteps:
    """One alternating step"""

    @pytest.mark.parametrize("c", [1.0, 2j, 0.3 * np.exp(1j * np.pi / 5)])
    def test_scale_ambiguity(self, c, make_link):
        link = make_link(n=256, n_r=16, m=64)
        x = link.grids[0].symbols
        step = am_step_single(link.y, c * x, link.f, 0.0)
        np.testing.assert_allclose(step.x_next, c * x, atol=1e-8)
        np.testing.assert_allclose(step.h_hat.h, link.channels[0].on_grid(link.f.delays) / c, atol=1e-8)

    def test_residual_non_increasing(self, make_link):
        link = make_link(n=256, n_r=16, m=16, snr_db=10.0)
        x = initial_point_variance(top_left_singular_vectors(link.y, 1).vector(0), link.f).x0
        residuals = []
        for _ in range(10):
            step = am_step_single(link.y, x, link.f, 0.0)
            x = step.x_next
            residuals.append(np.linalg.norm(link.y.y - x[:, None] * (link.f.columns @ step.h_hat.h)))
        assert np.all(np.diff(residuals) <= 1e-9 * residuals[0])

    def test_multi_single_user_matches_single(self, make_link, rng):
        link = make_link(n=128, n_r=16, m=16, snr_db=10.0)
        x = build_tx_symbol(rng, 128, 16, PilotSpec.empty()).symbols
        single = am_step_single(link.y, x, link.f, 1e-9)
        multi = am_step_multi(link.y, [x], link.f, 1e-9)
        np.testing.assert_allclose(multi.h_hat[0].h, single.h_hat.h, rtol=1e-8, atol=1e-12)
        np.testing.assert_allclose(multi.x_next[0], single.x_next, rtol=1e-6, atol=1e-9)

    def test_multi_truth_is_fixed_point(self, make_link):
        link = make_link(n=128, n_r=16, m=64, n_users=2)
        step = am_step_multi(link.y, [g.symbols for g in link.grids], link.f, 1e-6)
        for x, g in zip(step.x_next, link.grids):
            np.testing.assert_allclose(x, g.symbols, atol=1e-5)

    def test_multi_disjoint_antennas_separate(self, rng):
        n, n_users = 64, 4
        f = build_dft_submatrix(n, [0])
        grids = [build_tx_symbol(rng, n, 16, PilotSpec.empty()) for _ in range(n_users)]
        chans = []
        for u in range(n_users):
            h = np.zeros((1, 16), dtype=complex)
            h[0, 4 * u:4 * u + 4] = rng.standard_normal(4) + 1j * rng.standard_normal(4)
            chans.append(TimeChannel(h, (0,)))
        y = apply_channel(grids, chans, f, float("inf"), rng)
        scales = [1.0, -1j, 0.5, 2.0 + 1j]
        multi = am_step_multi(y, [c * g.symbols for c, g in zip(scales, grids)], f, 1e-9)
        for u, (c, g) in enumerate(zip(scales, grids)):
            own = am_step_single(y.y[:, 4 * u:4 * u + 4], c * g.symbols, f, 1e-9)
            np.testing.assert_allclose(multi.x_next[u], own.x_next, atol=1e-6)

    def test_multi_too_many_users(self, rng):
        f = build_dft_submatrix(32, [0, 1, 2, 3])
        xs = [np.ones(32)] * 3
        with pytest.raises(InvalidArgumentError, match="exceeds N_r"):
            am_step_multi(np.ones((32, 8)), xs, f, 0.1)


class TestDerotation:
    """Scale estimation and clustering"""

    def test_lambda_of_scaled_symbols(self, rng):
        spec = default_pilots(64, 16)[0]
        grid = build_tx_symbol(rng, 64, 16, spec)
        assert estimate_lambda(2j * grid.symbols, spec) == pytest.approx(2j)
        assert estimate_lambda(grid.symbols, spec) == pytest.approx(1.0)

    def test_lambda_needs_pilot(self):
        with pytest.raises(InvalidArgumentError, match="at least one pilot"):
            estimate_lambda(np.ones(8), PilotSpec.empty())

    def test_lambda_variance_falls_with_pilot_count(self, rng):
        corner = constellation(64).corner
        variances = []
        for count in (1, 16):
            spec = PilotSpec(tuple(range(count)), (corner,) * count)
            x = np.full(count, corner)
            est = [estimate_lambda(x + np.sqrt(0.05) * (rng.standard_normal(count) + 1j * rng.standard_normal(count)), spec)
                   for _ in range(10000)]
            variances.append(np.var(est))
        assert variances[1] / variances[0] == pytest.approx(1 / 16, rel=0.2)

    def test_refined_lambda_on_leaking_symbols(self, rng):
        n = 1024
        spec = default_pilots(n, 64)[0]
        grid = build_tx_symbol(rng, n, 64, spec)
        lam = 0.7 * np.exp(0.6j)
        #The pilot at N/2 sees 1 - 0.1 while the data average to 1
        x = lam * grid.symbols * (1 + 0.1 * np.exp(2j * np.pi * np.arange(n) / n))
        assert abs(estimate_lambda(x, spec) / lam - 1) == pytest.approx(0.1, abs=1e-9)
        assert abs(refine_lambda(x, spec, 64) / lam - 1) < 0.03

    def test_refined_lambda_of_clean_symbols(self, rng):
        spec = default_pilots(256, 16)[0]
        grid = build_tx_symbol(rng, 256, 16, spec)
        assert refine_lambda(-2j * grid.symbols, spec, 16) == pytest.approx(-2j)

    def test_residual_rotation(self):
        points = constellation(64).points * np.exp(1j * np.radians(5.0))
        assert np.degrees(residual_rotation(points, 64)) == pytest.approx(5.0, abs=0.2)

    def test_residual_rotation_aligned(self):
        assert residual_rotation(constellation(16).points, 16) == pytest.approx(0.0, abs=1e-12)

    def test_cluster_clean_rotation(self, rng):
        qam = constellation(64)
        labels = rng.permutation(np.repeat(np.arange(64), 100))
        p = int(np.flatnonzero(labels == 0)[0])
        spec = PilotSpec((p,), (qam.corner,))
        x = 0.8 * np.exp(1j * np.radians(5.0)) * qam.points[labels]
        decision = derotate_cluster(x, spec, 64)
        np.testing.assert_array_equal(decision.labels, labels)

    def test_cluster_removes_residual_rotation(self, rng):
        qam = constellation(64)
        labels = rng.integers(0, 64, size=6400)
        labels[0] = 0
        spec = PilotSpec((0,), (qam.corner,))
        noise = np.sqrt(10 ** -2.5 / 2) * (rng.standard_normal(6400) + 1j * rng.standard_normal(6400))
        x = np.exp(1j * np.radians(3.0)) * qam.points[labels] + noise
        #Pilot seen without the rotation: lambda alone cannot remove it
        x[0] = qam.corner
        decision = derotate_cluster(x, spec, 64)
        nearest_errors = np.count_nonzero(qam.labels_of(x / estimate_lambda(x, spec)) != labels)
        cluster_errors = np.count_nonzero(decision.labels != labels)
        assert np.degrees(decision.angle) == pytest.approx(3.0, abs=0.5)
        assert cluster_errors < nearest_errors

    def test_cluster_needs_enough_samples(self):
        with pytest.raises(InvalidArgumentError, match="N >= M"):
            derotate_cluster(np.ones(8), PilotSpec((0,), (1.0,)), 16)


class TestBlindDecodeSingle:
    """Single-user blind decoding"""

    @pytest.mark.parametrize("m", SUPPORTED_ORDERS)
    def test_noiseless_exact(self, m, make_link):
        link = make_link(n=512, n_r=32, m=m)
        result = blind_decode_single(link.y, BlindConfig(iterations=12, qam_order=m))
        assert data_errors(result, link) == [0]
        spec = link.specs[0]
        assert result.symbols[spec.positions[0]] == spec.values[0]
        assert len(result.residuals) == len(result.objective) == len(result.snapshots) == 12

    @pytest.mark.parametrize("derotation", ["cluster", "lambda-only"])
    def test_noiseless_other_derotations(self, derotation, make_link):
        link = make_link(n=512, n_r=32, m=16)
        result = blind_decode_single(link.y, BlindConfig(iterations=12, qam_order=16, derotation=derotation))
        assert data_errors(result, link) == [0]

    def test_circularity_init(self, make_link):
        link = make_link(n=512, n_r=32, m=16)
        result = blind_decode_single(link.y, BlindConfig(iterations=8, qam_order=16, init="circularity"))
        assert data_errors(result, link) == [0]

    def test_phase_equivariance(self, make_link):
        link = make_link(n=512, n_r=32, m=16)
        cfg = BlindConfig(iterations=8, qam_order=16)
        a = blind_decode_single(link.y, cfg)
        b = blind_decode_single(link.y.rotated(0.7), cfg)
        np.testing.assert_array_equal(a.users[0].labels, b.users[0].labels)

    def test_objective_non_increasing_before_mapping(self, make_link):
        link = make_link(n=256, n_r=16, m=64, snr_db=10.0)
        cfg = BlindConfig(iterations=10, derotate_at=4)
        result = blind_decode_single(link.y, cfg)
        head = np.asarray(result.objective[:cfg.derotate_at])
        assert np.all(np.diff(head) <= 1e-9 * head[0])

    def test_given_tap_needs_taps(self, make_link):
        link = make_link(n=128, n_r=8, m=4)
        with pytest.raises(ConfigError, match="given_taps"):
            blind_decode_single(link.y, BlindConfig(init="given-tap", qam_order=4))

    def test_warm_start_with_exact_channel(self, make_link):
        link = make_link(n=256, n_r=16, m=64)
        result = warm_start_decode(link.y, link.channels[0], BlindConfig(), iterations=1)
        assert data_errors(result, link) == [0]
        assert result.users[0].iterations_used == 1 and len(result.snapshots) == 1

    def test_warm_start_needs_one_iteration(self, make_link):
        link = make_link(n=64, n_r=8, m=4)
        with pytest.raises(ConfigError) as e:
            warm_start_decode(link.y, link.channels[0], BlindConfig(qam_order=4), iterations=0)
        assert e.value.field == "blind.iterations"

    def test_warm_start_antenna_mismatch(self, make_link):
        link = make_link(n=64, n_r=8, m=4)
        other = TimeChannel(np.ones((4, 4)), (0, 1, 2, 3))
        with pytest.raises(InvalidArgumentError, match="antennas"):
            warm_start_decode(link.y, other, BlindConfig(qam_order=4))


class TestMultiUser:
    """Coefficient matrix, unmixing and multi-user decoding"""

    @staticmethod
    def mixture(rng, n, specs, taps, f):
        '''Synthetic (non-orthonormal) singular vectors U = Z A^T with known Z and A'''
        z = np.zeros((n, len(specs)), dtype=complex)
        for u, spec in enumerate(specs):
            others = [p for v, s in enumerate(specs) if v != u for p in s.positions]
            grid = build_tx_symbol(rng, n, 64, spec, tuple(others))
            z[:, u] = grid.symbols * f.columns[:, f.index_of(taps[u])]
        a = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        return z, a, SvdBasis(left_vectors=z @ a.T, singular_values=np.ones(2))

    def test_coefficient_matrix_and_unmix(self, rng):
        n = 64
        f = build_dft_submatrix(n, [0])
        specs = default_pilots(n, 64, n_users=2)
        z, a, svd = self.mixture(rng, n, specs, [0, 0], f)
        coef = estimate_coefficient_matrix(svd, specs)
        np.testing.assert_allclose(coef.a, a, atol=1e-10)
        np.testing.assert_allclose(unmix(svd, coef), z.T, atol=1e-10)

    def test_ill_conditioned(self):
        specs = default_pilots(16, 4, n_users=2)
        u = np.ones((16, 2), dtype=complex)
        with pytest.raises(IllConditionedMixingError) as e:
            estimate_coefficient_matrix(SvdBasis(u, np.ones(2)), specs)
        assert e.value.condition > 1e6

    def test_single_user_reduces_to_circularity(self, make_link):
        link = make_link(n=256, n_r=16, m=16, snr_db=20.0)
        svd = top_left_singular_vectors(link.y, 1)
        coef = estimate_coefficient_matrix(svd, link.specs)
        start, = multiuser_initial_points(svd, coef, link.f)
        assert start.tap == initial_point_circularity(svd.vector(0), link.f).tap

    def test_permutation_equivariance(self, rng):
        n = 256
        f = build_dft_submatrix(n, [0, 1, 2, 3])
        specs = default_pilots(n, 64, n_users=2)
        _, _, svd = self.mixture(rng, n, specs, [1, 3], f)
        forward = [p.tap for p in multiuser_initial_points(svd, estimate_coefficient_matrix(svd, specs), f)]
        backward = [p.tap for p in multiuser_initial_points(svd, estimate_coefficient_matrix(svd, specs[::-1]), f)]
        assert forward == [1, 3]
        assert backward == [3, 1]

    @pytest.mark.parametrize("n_users, m", [(2, 16), (2, 64), (4, 16)])
    def test_noiseless_exact(self, n_users, m, make_link, strong_pdp):
        link = make_link(n=512, n_r=32, m=m, pdp=strong_pdp, n_users=n_users)
        cfg = BlindConfig(iterations=12, qam_order=m, n_users=n_users, init="circularity")
        result = blind_decode_multi(link.y, cfg)
        assert data_errors(result, link) == [0] * n_users
        assert not result.fallback_used

    def test_given_taps(self, make_link, strong_pdp):
        link = make_link(n=512, n_r=32, m=16, pdp=strong_pdp, n_users=2)
        taps = tuple(c.strongest_tap for c in link.channels)
        cfg = BlindConfig(iterations=12, qam_order=16, n_users=2, init="given-tap", given_taps=taps)
        result = blind_decode_multi(link.y, cfg)
        assert data_errors(result, link) == [0, 0]
        assert [u.dominant_tap for u in result.users] == list(taps)

    def test_cluster_is_single_user(self, make_link):
        link = make_link(n=64, n_r=16, m=4, n_users=2)
        with pytest.raises(InvalidArgumentError, match="single-user"):
            blind_decode_multi(link.y, BlindConfig(qam_order=4, n_users=2, derotation="cluster"))

    def test_shared_pilots(self, make_link):
        link = make_link(n=64, n_r=16, m=4, n_users=2)
        spec = PilotSpec((5,), (1.0,))
        with pytest.raises(InvalidArgumentError, match="share pilot"):
            blind_decode_multi(link.y, BlindConfig(qam_order=4, n_users=2, pilots=(spec, spec)))
