"""Monte Carlo oracles for the closed-form detection quantities.

Trials draw the scattered channel component and the noise power
independently under each hypothesis and run the threshold test.  The
scalar projection v' Htilde w of an i.i.d. complex Gaussian matrix is
itself standard complex Gaussian for unit-norm v and w, so trials sample
that scalar directly; event counts accumulate as integers (exact), one
counter-based stream per (link, batch) pair.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .channel import rng_stream
from .covert_analysis import NoiseUncertainty
from .optimizer import BeamSolution
from .scenario import ScenarioGeometry


@dataclass(frozen=True)
class McConfig:
    n_trials: int
    seed: int = 0
    batch: int = 200_000

    def __post_init__(self):
        if self.n_trials < 1:
            raise ValueError("n_trials must be >= 1")
        if self.batch < 1:
            raise ValueError("batch must be >= 1")


@dataclass(frozen=True)
class DepCurve:
    tau: np.ndarray
    xi_emp: np.ndarray
    se: np.ndarray


def _noise_draws(noise: NoiseUncertainty, rng: np.random.Generator, n: int) -> np.ndarray:
    return np.exp(rng.uniform(np.log(noise.lb), np.log(noise.ub), size=n))


def _signal_scale(geom: ScenarioGeometry, w: np.ndarray, p_a: float, warden_index: int):
    """Deterministic LoS projection and per-trial power scale for one warden."""
    link = geom.link_warden(warden_index)
    k = geom.scenario.k_factor
    c = np.vdot(geom.combiner_wardens[warden_index], geom.los_wardens[warden_index] @ w)
    amp_los = np.sqrt(k / (k + 1.0)) * c
    scatter_std = np.sqrt(1.0 / (k + 1.0))
    power = link.f_path * link.g_tx * link.g_rx * p_a
    return amp_los, scatter_std, power


def simulate_dep_curve(
    geom: ScenarioGeometry,
    w: np.ndarray,
    p_a: float,
    warden_index: int,
    tau_grid: np.ndarray,
    mc: McConfig,
) -> DepCurve:
    """Empirical detection error probability on a threshold grid."""
    tau = np.asarray(tau_grid, dtype=float)
    noise = geom.noise_warden
    amp_los, scatter_std, power = _signal_scale(geom, w, p_a, warden_index)

    false_alarms = np.zeros(tau.shape, dtype=np.int64)
    missed = np.zeros(tau.shape, dtype=np.int64)
    done = 0
    batch_idx = 0
    while done < mc.n_trials:
        n = min(mc.batch, mc.n_trials - done)
        rng = rng_stream(mc.seed, warden_index, batch_idx)
        # null hypothesis: noise only
        t0 = _noise_draws(noise, rng, n)
        false_alarms += (t0[None, :] > tau[:, None]).sum(axis=1)
        # alternative: signal power plus an independent noise draw
        g = (rng.normal(size=n) + 1j * rng.normal(size=n)) * np.sqrt(0.5)
        s = power * np.abs(amp_los + scatter_std * g) ** 2
        t1 = s + _noise_draws(noise, rng, n)
        missed += (t1[None, :] <= tau[:, None]).sum(axis=1)
        done += n
        batch_idx += 1

    pf = false_alarms / mc.n_trials
    pm = missed / mc.n_trials
    se = np.sqrt((pf * (1 - pf) + pm * (1 - pm)) / mc.n_trials)
    return DepCurve(tau=tau, xi_emp=pf + pm, se=se)


def empirical_min_dep(
    geom: ScenarioGeometry,
    w: np.ndarray,
    p_a: float,
    warden_index: int,
    mc: McConfig,
    tau_grid: np.ndarray | None = None,
):
    """Grid minimizer of the empirical DEP: returns (tau_hat, xi_hat, se_at_min)."""
    noise = geom.noise_warden
    if tau_grid is None:
        tau_grid = np.linspace(0.95 * noise.lb, 1.2 * noise.ub, 400)
    curve = simulate_dep_curve(geom, w, p_a, warden_index, tau_grid, mc)
    k = int(np.argmin(curve.xi_emp))
    return float(curve.tau[k]), float(curve.xi_emp[k]), float(curve.se[k])


def simulate_top(
    geom: ScenarioGeometry,
    solution: BeamSolution,
    h_ab: np.ndarray,
    mc: McConfig,
) -> tuple[float, float]:
    """Empirical outage probability over noise draws; channel held fixed."""
    if solution.rate <= 0.0:
        return 0.0, 0.0
    link = geom.link_bob(solution.boresight)
    gain = abs(np.vdot(geom.combiner_bob, h_ab @ solution.w)) ** 2
    s_b = link.f_path * link.g_tx * link.g_rx * solution.p_a * gain
    threshold = s_b / (2.0**solution.rate - 1.0)
    count = 0
    done = 0
    batch_idx = 0
    while done < mc.n_trials:
        n = min(mc.batch, mc.n_trials - done)
        rng = rng_stream(mc.seed, 9999, batch_idx)
        sigma = _noise_draws(geom.noise_bob, rng, n)
        count += int((sigma > threshold).sum())
        done += n
        batch_idx += 1
    zeta = count / mc.n_trials
    se = float(np.sqrt(max(zeta * (1 - zeta), 0.0) / mc.n_trials))
    return float(zeta), se


def write_dep_curve_csv(path, tau, xi_emp, se, xi_analytic, xi_lb) -> None:
    """Fixed-schema CSV: tau, xi_emp, se, xi_analytic, xi_lb."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tau", "xi_emp", "se", "xi_analytic", "xi_lb"])
        for row in zip(tau, xi_emp, se, xi_analytic, xi_lb):
            writer.writerow([f"{v:.12g}" for v in row])
