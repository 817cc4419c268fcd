import math

import numpy as np
import pytest
from scipy.optimize import brentq

from covertlink.covert_analysis import (
    CovertSpec,
    NoiseUncertainty,
    WardenSignalStats,
    bob_signal_power,
    covert_power_cap,
    dep,
    dep_floor,
    dep_lb,
    dep_lb_cdf,
    eta_b,
    eta_w,
    false_alarm,
    max_rate,
    min_dep_lb,
    missed_detection,
    optimal_threshold,
    top,
    warden_stats,
)
from covertlink.linkbudget import LinkBudget

NOISE = NoiseUncertainty(nominal_power=1e-12, rho=1.5)


def draw_noise_powers(noise, rng, n):
    return np.exp(rng.uniform(np.log(noise.lb), np.log(noise.ub), size=n))


def draw_signal_powers(stats, rng, n):
    return rng.gamma(shape=stats.m_shape, scale=stats.omega / stats.m_shape, size=n)


class TestNoiseUncertainty:
    def test_bounds(self):
        assert NOISE.lb == pytest.approx(1e-12 / 1.5)
        assert NOISE.ub == pytest.approx(1.5e-12)

    def test_pdf_normalization(self):
        # integral of 1/(2 log rho x) over [lb, ub] is 1
        from scipy.integrate import quad

        val, _ = quad(lambda x: 1.0 / (2.0 * NOISE.log_rho * x), NOISE.lb, NOISE.ub)
        assert val == pytest.approx(1.0, abs=1e-9)

    def test_rho_one_rejected(self):
        with pytest.raises(ValueError):
            NoiseUncertainty(1e-12, 1.0)


class TestFalseAlarm:
    def test_branches(self):
        assert false_alarm(NOISE, 0.5 * NOISE.lb) == 1.0
        assert false_alarm(NOISE, NOISE.nominal_power) == pytest.approx(0.5, rel=1e-12)
        assert false_alarm(NOISE, 2.0 * NOISE.ub) == 0.0

    def test_monotone_non_increasing(self):
        taus = np.linspace(0.5 * NOISE.lb, 2.0 * NOISE.ub, 300)
        vals = false_alarm(NOISE, taus)
        assert np.all(np.diff(vals) <= 1e-15)

    def test_matches_noise_draws(self):
        rng = np.random.default_rng(0)
        draws = draw_noise_powers(NOISE, rng, 200_000)
        for tau in (NOISE.lb * 1.1, NOISE.nominal_power, NOISE.ub * 0.9):
            emp = np.mean(draws > tau)
            se = math.sqrt(emp * (1 - emp) / draws.size)
            assert false_alarm(NOISE, tau) == pytest.approx(emp, abs=3 * se + 1e-4)


class TestWardenStats:
    def _inputs(self):
        rng = np.random.default_rng(1)
        m_sat, m_a = 4, 6
        g = np.exp(1j * rng.uniform(0, 2 * np.pi, m_sat))
        d = np.exp(1j * rng.uniform(0, 2 * np.pi, m_a))
        los = np.outer(g, d.conj())
        v = g / math.sqrt(m_sat)
        link = LinkBudget(f_path=1e-20, g_tx=100.0, g_rx=1000.0, distance=1e7)
        return link, los, v, d / math.sqrt(m_a), m_sat, m_a

    def test_orthogonal_beam_is_rayleigh(self):
        link, los, v, w_matched, m_sat, m_a = self._inputs()
        w = np.zeros(m_a, dtype=complex)
        w[0], w[1] = 1.0, -los[0, 0].conj() / los[0, 1].conj()
        w = w / np.linalg.norm(w)
        # construct an exact null of the rank-one row space
        d_row = los[0, :].conj()
        w = w - (np.vdot(d_row, w) / np.vdot(d_row, d_row)) * d_row
        w = w / np.linalg.norm(w)
        stats = warden_stats(link, los, v, w, p_a=10.0, k_factor=7.0)
        assert stats.kappa == pytest.approx(0.0, abs=1e-20)
        assert stats.m_shape == pytest.approx(1.0, abs=1e-12)

    def test_matched_beam_kappa(self):
        link, los, v, w_matched, m_sat, m_a = self._inputs()
        stats = warden_stats(link, los, v, w_matched, p_a=10.0, k_factor=7.0)
        assert stats.kappa == pytest.approx(7.0 * m_sat * m_a, rel=1e-12)

    def test_shape_limit(self):
        s1 = WardenSignalStats(kappa=1e6, omega=1.0)
        assert s1.m_shape > 1e5
        s0 = WardenSignalStats(kappa=0.0, omega=1.0)
        assert s0.m_shape == 1.0

    def test_omega_formula(self):
        link, los, v, w, m_sat, m_a = self._inputs()
        k = 7.0
        p = 3.0
        stats = warden_stats(link, los, v, w, p, k)
        expected = link.f_path * link.g_tx * link.g_rx * p * (1 + stats.kappa) / (1 + k)
        assert stats.omega == pytest.approx(expected, rel=1e-12)


class TestMissedDetection:
    def test_below_lb_zero(self):
        stats = WardenSignalStats(kappa=2.0, omega=0.3 * NOISE.lb)
        assert missed_detection(stats, NOISE, 0.9 * NOISE.lb) == 0.0

    def test_tends_to_one(self):
        stats = WardenSignalStats(kappa=2.0, omega=0.3 * NOISE.lb)
        assert missed_detection(stats, NOISE, 50.0 * NOISE.ub) == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize("kappa,omega_scale", [(0.0, 0.5), (3.0, 1.0), (12.0, 0.1)])
    def test_monte_carlo_oracle(self, kappa, omega_scale):
        stats = WardenSignalStats(kappa=kappa, omega=omega_scale * NOISE.lb)
        rng = np.random.default_rng(23)
        n = 100_000
        s = draw_signal_powers(stats, rng, n)
        sig = draw_noise_powers(NOISE, rng, n)
        for tau in (NOISE.lb * 1.3, NOISE.nominal_power, NOISE.ub * 0.95):
            emp = np.mean(s + sig <= tau)
            se = math.sqrt(max(emp * (1 - emp), 1e-12) / n)
            assert missed_detection(stats, NOISE, tau) == pytest.approx(emp, abs=3 * se + 2e-4)


class TestDep:
    def test_below_lb_is_one(self):
        stats = WardenSignalStats(kappa=1.0, omega=NOISE.lb)
        assert dep(stats, NOISE, 0.5 * NOISE.lb) == 1.0

    def test_large_tau_tends_to_one(self):
        stats = WardenSignalStats(kappa=1.0, omega=NOISE.lb)
        assert dep(stats, NOISE, 40 * NOISE.ub) == pytest.approx(1.0, abs=1e-9)

    def test_interior_minimum_for_strong_signal(self):
        stats = WardenSignalStats(kappa=1.0, omega=5.0 * NOISE.lb)
        taus = np.linspace(0.5 * NOISE.lb, 4.0 * NOISE.ub, 120)
        vals = [dep(stats, NOISE, t) for t in taus]
        k = int(np.argmin(vals))
        assert vals[k] < 0.9
        assert 0 < k < len(taus) - 1


class TestDepLbCdf:
    def test_vanishes_at_lb(self):
        stats = WardenSignalStats(kappa=2.0, omega=NOISE.lb)
        assert dep_lb_cdf(stats, NOISE, NOISE.lb * (1 + 1e-12)) == pytest.approx(0.0, abs=1e-9)
        assert dep_lb_cdf(stats, NOISE, NOISE.lb) == 0.0

    @pytest.mark.parametrize("kappa,omega_scale", [(0.0, 0.2), (2.0, 1.0), (30.0, 3.0)])
    def test_lower_bounds_quadrature(self, kappa, omega_scale):
        stats = WardenSignalStats(kappa=kappa, omega=omega_scale * NOISE.lb)
        taus = np.linspace(NOISE.lb * 1.0001, 2.0 * NOISE.ub, 100)
        for t in taus:
            assert dep_lb_cdf(stats, NOISE, t) <= missed_detection(stats, NOISE, t) + 1e-7

    def test_gap_shrinks_as_rho_decreases(self):
        stats = WardenSignalStats(kappa=2.0, omega=0.1e-12)
        gaps = []
        for rho in (1.1, 1.3, 1.5):
            noise = NoiseUncertainty(1e-12, rho)
            taus = np.linspace(noise.lb * 1.001, noise.ub, 40)
            gap = max(missed_detection(stats, noise, t) - dep_lb_cdf(stats, noise, t) for t in taus)
            gaps.append(gap)
        assert gaps[0] <= gaps[1] <= gaps[2]


class TestOptimalThreshold:
    def random_sets(self, n, seed=5):
        rng = np.random.default_rng(seed)
        out = []
        for _ in range(n):
            rho = rng.uniform(1.001, 2.0)
            noise = NoiseUncertainty(1e-12, rho)
            kappa = rng.uniform(0.0, 20.0)
            omega = 10.0 ** rng.uniform(-4, 0) * 2.0 * noise.log_rho * noise.lb
            out.append((WardenSignalStats(kappa=kappa, omega=omega), noise))
        return out

    def test_always_within_noise_interval(self):
        for stats, noise in self.random_sets(40):
            tau = optimal_threshold(stats, noise)
            assert noise.lb <= tau <= noise.ub

    def test_grid_oracle(self):
        for stats, noise in self.random_sets(15, seed=6):
            tau_star = optimal_threshold(stats, noise)
            grid = np.linspace(noise.lb * (1 + 1e-9), 10.0 * noise.ub, 1000)
            vals = dep_lb(stats, noise, grid)
            assert dep_lb(stats, noise, tau_star) <= vals.min() + 1e-9

    def test_rayleigh_case_reduces_to_scalar_equation(self):
        # m = 1: mu e^-mu = (1 - e^-mu (1 + mu)) nu
        stats = WardenSignalStats(kappa=0.0, omega=0.4 * NOISE.lb)
        lb = NOISE.lb

        def scalar_eq(tau):
            mu = (tau - lb) / stats.omega
            nu = tau * math.log(tau / lb) / (tau - lb) - 1.0
            return mu * math.exp(-mu) - (1.0 - math.exp(-mu) * (1.0 + mu)) * nu

        tau_ref = brentq(scalar_eq, lb * (1 + 1e-9), 100 * NOISE.ub, rtol=8.9e-16)
        tau_star = optimal_threshold(stats, NOISE)
        assert tau_star == pytest.approx(min(tau_ref, NOISE.ub), rel=1e-10)

    def test_root_residual(self):
        from covertlink.covert_analysis import threshold_residual

        for stats, noise in self.random_sets(25, seed=7):
            tau = optimal_threshold(stats, noise)
            if tau >= noise.ub:  # clamped, not a root
                continue
            assert threshold_residual(stats, noise, tau) <= 1e-10


class TestMinDepLbAndFloor:
    def test_weak_signal_gives_one(self):
        stats = WardenSignalStats(kappa=1.0, omega=1e-8 * NOISE.lb)
        assert min_dep_lb(stats, NOISE) == pytest.approx(1.0, abs=1e-7)

    def test_floor_orderings(self):
        rng = np.random.default_rng(8)
        for _ in range(60):
            rho = rng.uniform(1.01, 2.0)
            noise = NoiseUncertainty(1e-12, rho)
            stats = WardenSignalStats(
                kappa=rng.uniform(0, 20),
                omega=10.0 ** rng.uniform(-4, 0) * 2.0 * noise.log_rho * noise.lb,
            )
            floor = dep_floor(stats, noise)
            mdl = min_dep_lb(stats, noise)
            assert floor < mdl
            tau_star = optimal_threshold(stats, noise)
            assert mdl <= dep(stats, noise, tau_star) + 1e-7

    def test_floor_binding_point(self):
        eps = 0.01
        omega = 2.0 * eps * NOISE.log_rho * NOISE.lb
        stats = WardenSignalStats(kappa=3.0, omega=omega)
        assert dep_floor(stats, NOISE) == pytest.approx(1.0 - eps, abs=1e-15)

    def test_floor_weak_signal(self):
        stats = WardenSignalStats(kappa=3.0, omega=1e-300)
        assert dep_floor(stats, NOISE) == pytest.approx(1.0, abs=1e-15)


class TestEtaAndPowerCap:
    LINK_W = LinkBudget(f_path=1.3e-21, g_tx=186.0, g_rx=1584.9, distance=3.6e7)
    SPEC = CovertSpec(epsilon_w=0.01, epsilon_b=0.01)

    def test_eta_w_linearity_in_epsilon(self):
        base = eta_w(self.LINK_W, NOISE, self.SPEC, 7.0)
        doubled = eta_w(self.LINK_W, NOISE, CovertSpec(0.02, 0.01), 7.0)
        assert doubled == pytest.approx(2.0 * base, rel=1e-12)

    def test_cap_zero_gain(self):
        cap = covert_power_cap(self.LINK_W, NOISE, self.SPEC, 7.0, 0.0)
        assert cap == pytest.approx(eta_w(self.LINK_W, NOISE, self.SPEC, 7.0) / self.LINK_W.g_tx, rel=1e-12)

    def test_cap_rederivation_through_floor(self):
        # transmitting exactly at the cap puts the DEP floor at 1 - epsilon_w
        k = 7.0
        for los_gain in (0.0, 0.3, 4.0):
            cap = covert_power_cap(self.LINK_W, NOISE, self.SPEC, k, los_gain)
            kappa = k * los_gain
            omega = self.LINK_W.f_path * self.LINK_W.g_tx * self.LINK_W.g_rx * cap * (1 + kappa) / (1 + k)
            stats = WardenSignalStats(kappa=kappa, omega=omega)
            assert dep_floor(stats, NOISE) == pytest.approx(1.0 - self.SPEC.epsilon_w, abs=1e-9)


class TestTopAndMaxRate:
    LINK_B = LinkBudget(f_path=1.3554e-21, g_tx=1584.9, g_rx=1584.9, distance=3.6e7)
    SPEC = CovertSpec(epsilon_w=0.01, epsilon_b=0.01)

    def test_zero_outage_branch(self):
        s_b = 1e-10
        rate = math.log2(1.0 + s_b / NOISE.ub)  # capacity at worst-case noise
        assert top(rate, s_b, NOISE) == 0.0

    def test_half_outage_at_nominal(self):
        s_b = 5e-12
        rate = math.log2(1.0 + s_b / NOISE.nominal_power)
        assert top(rate, s_b, NOISE) == pytest.approx(0.5, rel=1e-12)

    def test_extremes(self):
        assert top(0.0, 1e-12, NOISE) == 0.0
        assert top(50.0, 1e-12, NOISE) == 1.0

    def test_monotone_in_rate(self):
        s_b = 3e-12
        rates = np.linspace(0.0, 10.0, 50)
        vals = [top(r, s_b, NOISE) for r in rates]
        assert all(v2 >= v1 - 1e-15 for v1, v2 in zip(vals, vals[1:]))

    def test_monte_carlo_oracle(self):
        rng = np.random.default_rng(17)
        s_b = 4e-12
        rate = 1.7
        draws = draw_noise_powers(NOISE, rng, 100_000)
        emp = np.mean(rate > np.log2(1.0 + s_b / draws))
        se = math.sqrt(max(emp * (1 - emp), 1e-12) / draws.size)
        assert top(rate, s_b, NOISE) == pytest.approx(emp, abs=3 * se + 1e-4)

    def _rate_inputs(self):
        rng = np.random.default_rng(19)
        m_sat, m_a = 4, 8
        h = (rng.normal(size=(m_sat, m_a)) + 1j * rng.normal(size=(m_sat, m_a))) / math.sqrt(2)
        v = np.exp(1j * rng.uniform(0, 2 * np.pi, m_sat)) / math.sqrt(m_sat)
        w = rng.normal(size=m_a) + 1j * rng.normal(size=m_a)
        w = w / np.linalg.norm(w)
        return h, v, w

    def test_max_rate_inversion(self):
        h, v, w = self._rate_inputs()
        p_a = 60.0
        rate = max_rate(p_a, self.LINK_B, h, w, v, self.SPEC, NOISE)
        s_b = bob_signal_power(p_a, self.LINK_B, h, w, v)
        assert top(rate, s_b, NOISE) == pytest.approx(self.SPEC.epsilon_b, abs=1e-9)

    def test_zero_gain_zero_rate(self):
        h, v, w = self._rate_inputs()
        null = np.zeros_like(h)
        assert max_rate(10.0, self.LINK_B, null, w, v, self.SPEC, NOISE) == 0.0

    def test_eta_b_exponent_vanishes_at_half(self):
        spec = CovertSpec(epsilon_w=0.01, epsilon_b=0.5)
        val = eta_b(self.LINK_B, NOISE, spec)
        expected = self.LINK_B.f_path * self.LINK_B.g_tx * self.LINK_B.g_rx / NOISE.nominal_power
        assert val == pytest.approx(expected, rel=1e-12)
