import numpy as np
import pytest

from covertlink.channel import (
    ArrayConfig,
    ChannelRealization,
    CsiErrorBound,
    RicianModel,
    dump_channel,
    earth_station_steering,
    load_channel,
    los_egc_vector,
    los_matrix,
    perturb_channel,
    rng_stream,
    sample_channel,
    satellite_steering,
    spatial_signature,
)

SAT_CFG = ArrayConfig(4, 4)
ES_CFG = ArrayConfig(8, 8)


class TestSpatialSignature:
    def test_zero_direction_all_ones(self):
        a = spatial_signature(5, 0.0, 0.5)
        assert np.allclose(a, np.ones(5))

    def test_half_wavelength_endfire(self):
        a = spatial_signature(2, 1.0, 0.5)
        assert np.allclose(a, [1.0, -1.0], atol=1e-15)

    def test_unit_modulus_and_norm(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            n = rng.integers(1, 12)
            x = rng.uniform(-1, 1)
            a = spatial_signature(n, x, 0.5)
            assert np.allclose(np.abs(a), 1.0)
            assert np.linalg.norm(a) ** 2 == pytest.approx(n, rel=1e-12)

    def test_domain(self):
        with pytest.raises(ValueError):
            spatial_signature(4, 1.2, 0.5)


class TestSteering:
    def test_boresight_all_ones(self):
        assert np.allclose(satellite_steering(SAT_CFG, 0.0, 0.0), np.ones(16))
        assert np.allclose(earth_station_steering(ES_CFG, 0.0, 0.0), np.ones(64))

    def test_lengths(self):
        assert satellite_steering(SAT_CFG, 0.3, -0.2).shape == (16,)
        assert earth_station_steering(ES_CFG, 0.3, -0.2).shape == (64,)

    def test_norm_squared_is_element_count(self):
        g = satellite_steering(SAT_CFG, 0.4, 1.1)
        assert np.linalg.norm(g) ** 2 == pytest.approx(16.0, rel=1e-12)
        d = earth_station_steering(ES_CFG, -0.7, 0.3)
        assert np.linalg.norm(d) ** 2 == pytest.approx(64.0, rel=1e-12)

    def test_kron_index_order(self):
        # entry (i_x, i_z) sits at i_x * m_z + i_z
        cfg = ArrayConfig(3, 2)
        theta, phi = 0.5, 0.8
        g = satellite_steering(cfg, theta, phi)
        ax = spatial_signature(3, np.sin(theta), 0.5)
        az = spatial_signature(2, np.cos(theta) * np.sin(phi), 0.5)
        for ix in range(3):
            for iz in range(2):
                assert g[ix * 2 + iz] == pytest.approx(ax[ix] * az[iz], rel=1e-12)

    def test_phase_argument_conventions_differ(self):
        # z-axis argument: satellite uses cos(theta) sin(phi), Earth station sin(theta) sin(phi)
        cfg = ArrayConfig(1, 4)
        theta, phi = 0.6, 0.9
        g = satellite_steering(cfg, theta, phi)
        d = earth_station_steering(cfg, theta, phi)
        expected_g = spatial_signature(4, np.cos(theta) * np.sin(phi), 0.5)
        expected_d = spatial_signature(4, np.sin(theta) * np.sin(phi), 0.5)
        assert np.allclose(g, expected_g)
        assert np.allclose(d, expected_d)
        assert not np.allclose(g, d)


class TestLosMatrix:
    def test_all_ones(self):
        h = los_matrix(np.ones(3, dtype=complex), np.ones(4, dtype=complex))
        assert np.allclose(h, np.ones((3, 4)))

    def test_rank_one_and_frobenius(self):
        g = satellite_steering(SAT_CFG, 0.2, 0.4)
        d = earth_station_steering(ES_CFG, 0.1, -0.3)
        h = los_matrix(g, d)
        assert h.shape == (16, 64)
        assert np.linalg.matrix_rank(h) == 1
        assert np.linalg.norm(h) ** 2 == pytest.approx(16 * 64, rel=1e-12)

    def test_matched_amplitude(self):
        g = satellite_steering(SAT_CFG, 0.2, 0.4)
        d = earth_station_steering(ES_CFG, 0.1, -0.3)
        h = los_matrix(g, d)
        v = los_egc_vector(g)
        w = d / np.linalg.norm(d)
        amp = abs(v.conj() @ h @ w)
        assert amp == pytest.approx(np.sqrt(16 * 64), rel=1e-12)


class TestSampleChannel:
    def make_model(self, k):
        g = satellite_steering(SAT_CFG, 0.2, 0.4)
        d = earth_station_steering(ES_CFG, 0.1, -0.3)
        return RicianModel(k_factor=k, los_matrix=los_matrix(g, d))

    def test_pure_los_limit(self):
        model = self.make_model(1e12)
        real = sample_channel(model, rng_stream(1, 0))
        assert np.allclose(real.h, model.los_matrix, atol=1e-5)

    def test_rayleigh_moments(self):
        model = self.make_model(0.0)
        rng = rng_stream(2, 0)
        draws = np.stack([sample_channel(model, rng).h for _ in range(4000)])
        assert abs(draws.mean()) < 0.02
        assert np.mean(np.abs(draws) ** 2) == pytest.approx(1.0, abs=0.02)

    def test_k7_mean_and_power(self):
        # sample mean -> sqrt(K/(K+1)) LoS within 3 sigma; per-entry power -> 1
        k = 7.0
        model = self.make_model(k)
        rng = rng_stream(3, 0)
        n = 20000
        acc = np.zeros(model.los_matrix.shape, dtype=complex)
        pow_acc = 0.0
        for _ in range(n):
            h = sample_channel(model, rng).h
            acc += h
            pow_acc += np.mean(np.abs(h) ** 2)
        mean = acc / n
        target = np.sqrt(k / (k + 1.0)) * model.los_matrix
        # each entry's scatter has std sqrt(1/(K+1))/sqrt(n) per quadrature pair
        sigma = np.sqrt(1.0 / (k + 1.0) / n)
        assert np.all(np.abs(mean - target) < 4.0 * sigma)
        assert pow_acc / n == pytest.approx(1.0, abs=0.01)

    def test_seed_reproducibility(self):
        model = self.make_model(7.0)
        h1 = sample_channel(model, rng_stream(42, 1, 5)).h
        h2 = sample_channel(model, rng_stream(42, 1, 5)).h
        h3 = sample_channel(model, rng_stream(42, 1, 6)).h
        assert np.array_equal(h1, h2)
        assert not np.allclose(h1, h3)

    def test_invariants(self):
        with pytest.raises(ValueError):
            RicianModel(k_factor=-1.0, los_matrix=np.ones((2, 2)))
        with pytest.raises(ValueError):
            RicianModel(k_factor=1.0, los_matrix=2.0 * np.ones((2, 2)))


class TestEgc:
    def test_unit_norm(self):
        g = np.ones(16, dtype=complex)
        v = los_egc_vector(g)
        assert np.allclose(v, np.ones(16) / 4.0)
        assert np.linalg.norm(v) == pytest.approx(1.0, rel=1e-12)

    def test_any_steering(self):
        g = satellite_steering(SAT_CFG, -0.4, 0.9)
        assert np.linalg.norm(los_egc_vector(g)) == pytest.approx(1.0, rel=1e-12)


class TestPerturbChannel:
    def test_zero_bound_identity(self):
        h = np.ones((3, 3), dtype=complex)
        assert np.array_equal(perturb_channel(h, 0.0), h)

    def test_boundary_norm(self):
        h = np.zeros((4, 6), dtype=complex)
        rng = rng_stream(5, 0)
        for _ in range(10):
            hp = perturb_channel(h, 0.05, rng, boundary=True)
            assert np.linalg.norm(hp - h) == pytest.approx(0.05, abs=1e-10)

    def test_interior_within_ball(self):
        h = np.zeros((4, 6), dtype=complex)
        rng = rng_stream(6, 0)
        for _ in range(50):
            hp = perturb_channel(h, 0.05, rng)
            assert np.linalg.norm(hp - h) <= 0.05 + 1e-12

    def test_negative_bound(self):
        with pytest.raises(ValueError):
            perturb_channel(np.zeros((2, 2)), -0.1)

    def test_bound_invariants(self):
        with pytest.raises(ValueError):
            CsiErrorBound(delta_b=-1.0)


class TestChannelDump:
    def test_round_trip(self, tmp_path):
        g = satellite_steering(SAT_CFG, 0.2, 0.4)
        d = earth_station_steering(ES_CFG, 0.1, -0.3)
        model = RicianModel(7.0, los_matrix(g, d))
        real = sample_channel(model, rng_stream(9, 0), draw_id="t0")
        path = tmp_path / "chan.csv"
        dump_channel(path, real, 16, 64, 7.0, 9)
        loaded, meta = load_channel(path)
        assert np.array_equal(loaded.h, real.h)
        assert meta["k"] == "7.0"
        assert loaded.draw_id == "t0"
