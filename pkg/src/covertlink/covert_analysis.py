"""Closed-form detection and reliability analysis.

The warden observes the average received power and runs a threshold
test under log-uniform noise-power uncertainty.  The received-signal
amplitude is Rician; its power is treated through the matching
Nakagami/Gamma shape, which makes the missed-detection CDF, its lower
bound, the optimal threshold condition, and the detection-error floor
expressible with incomplete gamma functions.

Notation used throughout: ``lb``/``ub`` are the noise-power interval
endpoints, ``m``/``omega`` the Gamma shape/mean of the received signal
power, ``mu(tau) = m (tau - lb) / omega`` the normalized threshold.

The missed-detection integrand keeps the literal log form of the noise
CDF, which is exact for thresholds up to ``ub``; outputs are clamped to
[0, 1] so all quantities remain probabilities (the closed-form lower
bound is clamped the same way, preserving the bound ordering pointwise).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize

from .linkbudget import LinkBudget
from .special import reg_lower_gamma, reg_lower_gamma_vec, reg_upper_gamma


class QuadratureError(ArithmeticError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class RootBracketError(ArithmeticError):
    """Sign change for the optimal-threshold equation was not found."""


@dataclass(frozen=True)
class NoiseUncertainty:
    """Log-uniform noise power over [nominal/rho, rho*nominal]."""

    nominal_power: float
    rho: float

    def __post_init__(self):
        if self.nominal_power <= 0.0:
            raise ValueError("nominal noise power must be positive")
        if self.rho <= 1.0:
            raise ValueError("noise uncertainty rho must exceed 1")

    @property
    def lb(self) -> float:
        return self.nominal_power / self.rho

    @property
    def ub(self) -> float:
        return self.nominal_power * self.rho

    @property
    def log_rho(self) -> float:
        return math.log(self.rho)


@dataclass(frozen=True)
class WardenSignalStats:
    """Received-signal power statistics at one warden.

    kappa is the effective Rician factor of the combined scalar channel,
    omega the mean received signal power, and m_shape the matched
    Nakagami/Gamma shape (kappa+1)^2 / (2 kappa + 1).
    """

    kappa: float
    omega: float
    m_shape: float = field(init=False)

    def __post_init__(self):
        if self.kappa < 0.0:
            raise ValueError("kappa must be nonnegative")
        if self.omega <= 0.0:
            raise ValueError("omega must be positive")
        m = (self.kappa + 1.0) ** 2 / (2.0 * self.kappa + 1.0)
        object.__setattr__(self, "m_shape", m)


@dataclass(frozen=True)
class CovertSpec:
    """Covertness slack epsilon_w and outage tolerance epsilon_b."""

    epsilon_w: float
    epsilon_b: float

    def __post_init__(self):
        for name in ("epsilon_w", "epsilon_b"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")


def _mu(stats: WardenSignalStats, tau, lb: float):
    return stats.m_shape * (np.asarray(tau, dtype=float) - lb) / stats.omega


def false_alarm(noise: NoiseUncertainty, tau):
    """False-alarm probability of the threshold test; array friendly."""
    t = np.asarray(tau, dtype=float)
    if np.any(t < 0.0):
        raise ValueError("threshold must be nonnegative")
    with np.errstate(divide="ignore"):
        mid = (np.log(noise.ub) - np.log(t)) / (2.0 * noise.log_rho)
    out = np.where(t < noise.lb, 1.0, np.where(t > noise.ub, 0.0, mid))
    return float(out) if np.isscalar(tau) else out


def warden_stats(
    link: LinkBudget,
    los: np.ndarray,
    combiner: np.ndarray,
    w: np.ndarray,
    p_a: float,
    k_factor: float,
) -> WardenSignalStats:
    """Signal-power statistics seen by a warden for beamformer ``w`` at power ``p_a``."""
    overlap = abs(np.vdot(combiner, los @ w)) ** 2
    kappa = k_factor * overlap
    omega = link.f_path * link.g_tx * link.g_rx * p_a * (1.0 + kappa) / (1.0 + k_factor)
    return WardenSignalStats(kappa=kappa, omega=omega)


def missed_detection(stats: WardenSignalStats, noise: NoiseUncertainty, tau: float) -> float:
    """Missed-detection probability P{S + sigma^2 <= tau}, clamped to [0, 1].

    The integral is evaluated in normalized Gamma coordinates with an
    absolute tolerance of 1e-8.
    """
    lb = noise.lb
    if tau <= lb:
        return 0.0
    m, omega = stats.m_shape, stats.omega
    mu_tau = m * (tau - lb) / omega
    two_log_rho = 2.0 * noise.log_rho
    log_lb = math.log(lb)
    lgm = math.lgamma(m)

    def integrand(t):
        # Gamma(m) density times the noise log-CDF term at s = omega t / m
        s = omega * t / m
        h1 = (math.log(tau - s) - log_lb) / two_log_rho
        return h1 * math.exp((m - 1.0) * math.log(t) - t - lgm) if t > 0.0 else 0.0

    upper = min(mu_tau, m + 45.0 * math.sqrt(m) + 60.0)
    pts = [p for p in (m - 1.0, m, m + math.sqrt(m)) if 0.0 < p < upper]
    val, err, info = integrate.quad(
        integrand, 0.0, upper, points=pts or None, epsabs=1e-8, epsrel=1e-10,
        limit=200, full_output=True,
    )[:3]
    if err > 1e-6:
        raise QuadratureError(
            f"missed-detection quadrature error {err:.2e} at tau={tau} "
            f"(m={m}, omega={omega}, evaluations={info.get('neval', '?')})"
        )
    return min(1.0, max(0.0, val))


def dep(stats: WardenSignalStats, noise: NoiseUncertainty, tau: float) -> float:
    """Detection error probability: false alarm plus missed detection."""
    if tau < noise.lb:
        return 1.0
    return float(false_alarm(noise, tau)) + missed_detection(stats, noise, tau)


def dep_lb_cdf(stats: WardenSignalStats, noise: NoiseUncertainty, tau):
    """Closed-form lower bound of the missed-detection CDF; array friendly."""
    t = np.asarray(tau, dtype=float)
    lb = noise.lb
    m = stats.m_shape
    mu = np.maximum(_mu(stats, t, lb), 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.log(t / lb) / (2.0 * noise.log_rho)
        bracket = reg_lower_gamma_vec(m, mu) - (m / mu) * reg_lower_gamma_vec(m + 1.0, mu)
        val = scale * bracket
    out = np.where(t <= lb, 0.0, np.clip(val, 0.0, 1.0))
    return float(out) if np.isscalar(tau) else out


def dep_lb(stats: WardenSignalStats, noise: NoiseUncertainty, tau):
    """Lower bound of the detection error probability; array friendly."""
    t = np.asarray(tau, dtype=float)
    out = np.where(t < noise.lb, 1.0, false_alarm(noise, t) + dep_lb_cdf(stats, noise, t))
    return float(out) if np.isscalar(tau) else out


def _threshold_terms(stats: WardenSignalStats, noise: NoiseUncertainty, tau: float) -> tuple[float, float]:
    """Both sides of the stationarity condition, in regularized gamma terms."""
    lb = noise.lb
    m = stats.m_shape
    mu = m * (tau - lb) / stats.omega
    nu = tau * math.log(tau / lb) / (tau - lb) - 1.0
    return mu * reg_upper_gamma(m, mu) / m, reg_lower_gamma(m + 1.0, mu) * nu


def _threshold_equation(stats: WardenSignalStats, noise: NoiseUncertainty, tau: float) -> float:
    """Stationarity residual of the DEP lower bound.

    Positive below the optimum, negative above; the optimum is the
    unique zero above lb.
    """
    t1, t2 = _threshold_terms(stats, noise, tau)
    return t1 - t2


def threshold_residual(stats: WardenSignalStats, noise: NoiseUncertainty, tau: float) -> float:
    """Relative residual of the stationarity condition at ``tau``."""
    t1, t2 = _threshold_terms(stats, noise, tau)
    return abs(t1 - t2) / max(t1, t2, 1e-300)


def optimal_threshold(stats: WardenSignalStats, noise: NoiseUncertainty) -> float:
    """Worst-case detection threshold minimizing the DEP lower bound.

    Solves the stationarity condition by geometric bracket expansion
    from just above lb (the residual starts positive and crosses zero
    exactly once), then clamps to ub.
    """
    lb = noise.lb
    width = lb * 1e-9
    lo = lb + width
    f_lo = _threshold_equation(stats, noise, lo)
    if f_lo <= 0.0:
        return min(lo, noise.ub)
    hi = lo
    f_hi = f_lo
    for _ in range(200):
        width *= 2.0
        lo, f_lo = hi, f_hi
        hi = lb + width
        f_hi = _threshold_equation(stats, noise, hi)
        if f_hi <= 0.0:
            break
    else:
        raise RootBracketError(
            f"no sign change up to tau={hi} (m={stats.m_shape}, omega={stats.omega})"
        )
    tau_prime = optimize.brentq(
        lambda t: _threshold_equation(stats, noise, t), lo, hi, xtol=1e-300, rtol=8.9e-16
    )
    # brentq stops on interval width; pick the neighboring float with the
    # smallest relative residual so the stationarity condition is met as
    # tightly as float64 allows
    best = tau_prime
    best_res = threshold_residual(stats, noise, tau_prime)
    for direction in (np.inf, -np.inf):
        t = tau_prime
        for _ in range(10):
            t = float(np.nextafter(t, direction))
            if t <= lb:
                break
            res = threshold_residual(stats, noise, t)
            if res < best_res:
                best, best_res = t, res
    return min(best, noise.ub)


def min_dep_lb(stats: WardenSignalStats, noise: NoiseUncertainty) -> float:
    """Minimum of the DEP lower bound, attained at the optimal threshold."""
    tau_star = optimal_threshold(stats, noise)
    lb = noise.lb
    m = stats.m_shape
    mu = _mu(stats, tau_star, lb)
    q_term = mu * reg_upper_gamma(m, float(mu)) / m
    p_term = reg_lower_gamma(m + 1.0, float(mu))
    value = 1.0 - math.log(tau_star / lb) / (2.0 * noise.log_rho) * (q_term + p_term) * (m / mu)
    return float(np.clip(value, 0.0, 1.0))


def dep_floor(stats: WardenSignalStats, noise: NoiseUncertainty) -> float:
    """Analytic floor of the minimum DEP lower bound (may be negative for large omega)."""
    return 1.0 - stats.omega / (2.0 * noise.log_rho * noise.lb)


def eta_w(link_w: LinkBudget, noise_w: NoiseUncertainty, spec: CovertSpec, k_factor: float) -> float:
    """Covertness budget constant: caps G_tx * P * (1 + K |v' Hbar w|^2) per warden."""
    return (
        2.0
        * spec.epsilon_w
        * noise_w.log_rho
        * (1.0 + k_factor)
        * noise_w.lb
        / (link_w.f_path * link_w.g_rx)
    )


def eta_b(link_b: LinkBudget, noise_b: NoiseUncertainty, spec: CovertSpec) -> float:
    """Reliability constant: 2^R - 1 <= P * eta_b * |v' H w|^2 keeps outage at epsilon_b."""
    return (
        noise_b.rho ** (2.0 * spec.epsilon_b - 1.0)
        * link_b.f_path
        * link_b.g_tx
        * link_b.g_rx
        / noise_b.nominal_power
    )


def covert_power_cap(
    link_w: LinkBudget,
    noise_w: NoiseUncertainty,
    spec: CovertSpec,
    k_factor: float,
    los_gain: float,
) -> float:
    """Largest transmit power keeping one warden's DEP floor above 1 - epsilon_w.

    ``los_gain`` is |v' Hbar w|^2 toward that warden.
    """
    if los_gain < 0.0:
        raise ValueError("los_gain must be nonnegative")
    return eta_w(link_w, noise_w, spec, k_factor) / (link_w.g_tx * (1.0 + k_factor * los_gain))


def top(rate: float, s_b: float, noise_b: NoiseUncertainty) -> float:
    """Transmission outage probability for transmit rate ``rate`` and signal power ``s_b``."""
    if rate < 0.0 or s_b < 0.0:
        raise ValueError("rate and signal power must be nonnegative")
    if rate == 0.0:
        return 0.0
    r = 2.0**rate - 1.0
    if s_b > 0.0 and noise_b.ub <= s_b / r:
        return 0.0
    if s_b == 0.0:
        return 1.0
    val = (math.log(noise_b.ub) + math.log(r) - math.log(s_b)) / (2.0 * noise_b.log_rho)
    return min(1.0, max(0.0, val))


def max_rate(
    p_a: float,
    link_b: LinkBudget,
    h_ab: np.ndarray,
    w: np.ndarray,
    combiner: np.ndarray,
    spec: CovertSpec,
    noise_b: NoiseUncertainty,
) -> float:
    """Largest transmit rate whose outage probability stays at epsilon_b."""
    gain = abs(np.vdot(combiner, h_ab @ w)) ** 2
    return math.log2(1.0 + p_a * eta_b(link_b, noise_b, spec) * gain)


def bob_signal_power(p_a: float, link_b: LinkBudget, h_ab: np.ndarray, w: np.ndarray, combiner: np.ndarray) -> float:
    """Received signal power at the intended receiver."""
    gain = abs(np.vdot(combiner, h_ab @ w)) ** 2
    return link_b.f_path * link_b.g_tx * link_b.g_rx * p_a * gain
