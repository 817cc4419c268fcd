"""Covert-rate maximizers.

Four designs: optimal beamforming (OB) with the default Bob-pointing
orientation, joint beamforming and antenna-orientation (JO-BA) on the
necessary-condition cone, and their robust counterparts under bounded
CSI error.  Zero-forcing and matched-filter baselines share the same
power-cap rule so comparisons are apples to apples.

All SDPs here have a rank-one objective and rank-one-plus-identity
constraint structure, so each is solved exactly on the subspace spanned
by the effective receiver row and the warden LoS rows (plus scalar
slots for the robust rate variable and the orthogonal-complement trace
where those matter).  Solutions are lifted back to the full array
dimension before rank-one extraction.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .channel import CsiErrorBound, rng_stream
from .covert_analysis import (
    bob_signal_power,
    dep_floor,
    eta_b,
    eta_w,
    max_rate,
    min_dep_lb,
    top,
    warden_stats,
)
from .geometry import off_boresight_angle, orientation_candidates
from .linkbudget import LinkBudget, dbi_to_linear, earth_station_gain_dbi
from .scenario import ScenarioGeometry
from .sdp_engine import SdpConstraint, SdpProblem, gaussian_randomization, solve

REL_TOL_DEFAULT = 1e-4
MAX_ITERS_DEFAULT = 50
ORIENTATION_GRID_DEFAULT = 360
N_DRAWS_DEFAULT = 1000


class InfeasibleDesignError(RuntimeError):
    """An SDP subproblem reported infeasibility that the model rules out."""


@dataclass(frozen=True)
class RobustSpec:
    csi_bounds: CsiErrorBound


@dataclass
class BeamSolution:
    """One design output: beamformer, power, rate, pointing and its audit."""

    w: np.ndarray
    p_a: float
    rate: float
    boresight: np.ndarray
    dep_floor_margins: np.ndarray
    top_value: float
    converged: bool = True
    meta: dict = field(default_factory=dict)

    def to_json(self) -> str:
        payload = {
            "w": np.column_stack([self.w.real, self.w.imag]).ravel().tolist(),
            "p_a": self.p_a,
            "rate": self.rate,
            "boresight": np.asarray(self.boresight, dtype=float).tolist(),
            "dep_floor_margins": np.asarray(self.dep_floor_margins, dtype=float).tolist(),
            "top_value": self.top_value,
            "converged": self.converged,
            "meta": self.meta,
        }
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text: str) -> "BeamSolution":
        d = json.loads(text)
        flat = np.asarray(d["w"], dtype=float)
        w = flat[0::2] + 1j * flat[1::2]
        return cls(
            w=w,
            p_a=d["p_a"],
            rate=d["rate"],
            boresight=np.asarray(d["boresight"], dtype=float),
            dep_floor_margins=np.asarray(d["dep_floor_margins"], dtype=float),
            top_value=d["top_value"],
            converged=d["converged"],
            meta=d.get("meta", {}),
        )


@dataclass(frozen=True)
class FeasibilityReport:
    dep_floor_margins: np.ndarray
    min_dep_lb_values: np.ndarray
    top_value: float
    realized_rate: float
    rate_margin: float  # P eta_b |v' H_true w|^2 - (2^rate - 1)

    @property
    def covert_ok(self) -> bool:
        return bool(np.all(self.dep_floor_margins >= -1e-6))


@dataclass
class _LinkSet:
    """Per-design constants: effective rows, budgets and caps."""

    h_row: np.ndarray  # v_b' H_ab, length M_a
    warden_rows: list[np.ndarray]  # v_j' Hbar_j
    etas: list[float]
    link_b: LinkBudget
    links_w: list[LinkBudget]
    k: float
    p_max: float
    eta_b_val: float


def _build_links(geom: ScenarioGeometry, h_ab: np.ndarray, boresight=None) -> _LinkSet:
    sc = geom.scenario
    link_b = geom.link_bob(boresight)
    links_w = [geom.link_warden(j, boresight) for j in range(geom.n_wardens)]
    spec = sc.covert
    noise_w = geom.noise_warden
    return _LinkSet(
        h_row=geom.combiner_bob.conj() @ h_ab,
        warden_rows=[geom.combiner_wardens[j].conj() @ geom.los_wardens[j] for j in range(geom.n_wardens)],
        etas=[eta_w(links_w[j], noise_w, spec, sc.k_factor) for j in range(geom.n_wardens)],
        link_b=link_b,
        links_w=links_w,
        k=sc.k_factor,
        p_max=sc.p_max_w,
        eta_b_val=eta_b(link_b, geom.noise_bob, spec),
    )


def _orth_basis(rows: list[np.ndarray], dim: int) -> np.ndarray:
    """Orthonormal basis (dim x r) of the span of the given row vectors."""
    stack = np.stack([r.conj() for r in rows], axis=1)  # dim x k column vectors
    u, s, _ = np.linalg.svd(stack, full_matrices=False)
    keep = s > max(s[0], 1e-300) * 1e-12
    return u[:, keep]


def _rank_one(row: np.ndarray) -> np.ndarray:
    """Matrix A with Tr(A W) = |row @ w|^2 for W = w w'."""
    return np.outer(row.conj(), row)


def _power_cap(links: _LinkSet, gains, robust: RobustSpec | None = None) -> float:
    """Largest power satisfying every warden's covertness cap for LoS gains |r_j w|^2."""
    p = links.p_max
    for j, g in enumerate(gains):
        if robust is not None and _delta_w(robust, j) > 0.0:
            denom = 1.0 + 2.0 * links.k * (g + _delta_w(robust, j) ** 2)
        else:
            denom = 1.0 + links.k * g
        p = min(p, links.etas[j] / (links.links_w[j].g_tx * denom))
    return p


def _delta_w(robust: RobustSpec, j: int) -> float:
    dw = robust.csi_bounds.delta_w
    if len(dw) == 0:
        return 0.0
    if len(dw) == 1:
        return dw[0]
    return dw[j]


def _robust_rate_factor(x: float, delta_b: float) -> float:
    """Worst-case support factor for |v' H' w|^2 = x under error radius delta_b."""
    if delta_b == 0.0:
        return x
    return x - 2.0 * delta_b * max(x, 1.0) + delta_b**2


def _certificate(geom: ScenarioGeometry, links: _LinkSet, w, p_a, rate, h_ab):
    sc = geom.scenario
    margins = []
    for j in range(geom.n_wardens):
        stats = warden_stats(links.links_w[j], geom.los_wardens[j], geom.combiner_wardens[j], w, p_a, sc.k_factor)
        margins.append(dep_floor(stats, geom.noise_warden) - (1.0 - sc.covert.epsilon_w))
    s_b = bob_signal_power(p_a, links.link_b, h_ab, w, geom.combiner_bob)
    return np.asarray(margins), top(rate, s_b, geom.noise_bob)


def _extract(geom, links, x_opt, h_ab, rng, n_draws, robust=None, warm_starts=()):
    """Rank-one extraction with cap-aware rescaling; returns (w, p_a, rate)."""
    sc = geom.scenario
    delta_b = robust.csi_bounds.delta_b if robust is not None else 0.0

    def oracle(w_unit):
        gains = [abs(r @ w_unit) ** 2 for r in links.warden_rows]
        p = _power_cap(links, gains, robust)
        x = abs(links.h_row @ w_unit) ** 2
        r_val = max(0.0, p * links.eta_b_val * _robust_rate_factor(x, delta_b))
        return np.sqrt(p) * w_unit, r_val

    w_hat = gaussian_randomization(
        x_opt, oracle, n_draws=n_draws, rng=rng, extra_candidates=warm_starts
    )
    w = w_hat / np.linalg.norm(w_hat)
    # the rate is monotone in power, so the extracted direction always
    # transmits at its full covertness cap
    gains = [abs(r @ w) ** 2 for r in links.warden_rows]
    p_a = _power_cap(links, gains, robust)
    x = abs(links.h_row @ w) ** 2
    r_val = max(0.0, p_a * links.eta_b_val * _robust_rate_factor(x, delta_b))
    rate = math.log2(1.0 + r_val)
    return w, p_a, rate


def solve_ob_perfect(
    geom: ScenarioGeometry,
    h_ab: np.ndarray,
    n_draws: int = N_DRAWS_DEFAULT,
    rng: np.random.Generator | None = None,
) -> BeamSolution:
    """Optimal beamforming with the default orientation, perfect CSI."""
    links = _build_links(geom, h_ab)
    if rng is None:
        rng = rng_stream(geom.scenario.seed, 100)
    m_a = geom.scenario.alice_array.size

    basis = _orth_basis([links.h_row, *links.warden_rows], m_a)
    h_red = links.h_row @ basis
    rows_red = [r @ basis for r in links.warden_rows]
    r_dim = basis.shape[1]

    constraints = [SdpConstraint(np.eye(r_dim, dtype=complex), links.p_max, "<=")]
    for j, r in enumerate(rows_red):
        mat = links.links_w[j].g_tx * (np.eye(r_dim, dtype=complex) + links.k * _rank_one(r))
        constraints.append(SdpConstraint(mat, links.etas[j], "<="))
    prob = SdpProblem(dim=r_dim, objective=_rank_one(h_red), constraints=constraints)
    sol = solve(prob)
    if sol.status == "infeasible":
        raise InfeasibleDesignError("zero power is always feasible; solver disagreed")

    x_full = basis @ sol.x_opt @ basis.conj().T
    mrt_dir = links.h_row.conj()
    w, p_a, _ = _extract(geom, links, x_full, h_ab, rng, n_draws, warm_starts=(mrt_dir,))
    rate = max_rate(p_a, links.link_b, h_ab, w, geom.combiner_bob, geom.scenario.covert, geom.noise_bob)
    margins, top_val = _certificate(geom, links, w, p_a, rate, h_ab)
    return BeamSolution(
        w=w, p_a=p_a, rate=rate, boresight=geom.alice.boresight,
        dep_floor_margins=margins, top_value=top_val,
        meta={"design": "ob", "sdp_objective": sol.objective_value, "sdp_status": sol.status},
    )


def solve_ob_imperfect(
    geom: ScenarioGeometry,
    h_ab_est: np.ndarray,
    robust: RobustSpec,
    n_draws: int = N_DRAWS_DEFAULT,
    rng: np.random.Generator | None = None,
) -> BeamSolution:
    """Robust optimal beamforming under bounded CSI error, default orientation.

    The worst-case reliability max(.) term is enforced through both of
    its linear branches; the rate enters as an extra diagonal slot of
    the PSD variable, and a second slot carries the trace of the
    orthogonal complement so the reduction stays exact.
    """
    links = _build_links(geom, h_ab_est)
    if rng is None:
        rng = rng_stream(geom.scenario.seed, 101)
    m_a = geom.scenario.alice_array.size
    delta_b = robust.csi_bounds.delta_b

    basis = _orth_basis([links.h_row, *links.warden_rows], m_a)
    h_red = links.h_row @ basis
    rows_red = [r @ basis for r in links.warden_rows]
    r_dim = basis.shape[1]
    has_complement = r_dim < m_a
    n = r_dim + 1 + (1 if has_complement else 0)  # blocks: W, rate, complement trace
    i_rate = r_dim
    i_comp = r_dim + 1

    def block(mat_w=None, rate_coef=0.0, comp_coef=0.0) -> np.ndarray:
        m = np.zeros((n, n), dtype=complex)
        if mat_w is not None:
            m[:r_dim, :r_dim] = mat_w
        m[i_rate, i_rate] = rate_coef
        if has_complement:
            m[i_comp, i_comp] = comp_coef
        return m

    eye_r = np.eye(r_dim, dtype=complex)
    constraints = [SdpConstraint(block(eye_r, comp_coef=1.0), links.p_max, "<=")]
    for j, r in enumerate(rows_red):
        d_w = _delta_w(robust, j)
        g_j = links.links_w[j].g_tx
        if d_w > 0.0:
            mat = g_j * ((1.0 + 2.0 * links.k * d_w**2) * eye_r + 2.0 * links.k * _rank_one(r))
            comp = g_j * (1.0 + 2.0 * links.k * d_w**2)
        else:
            mat = g_j * (eye_r + links.k * _rank_one(r))
            comp = g_j
        constraints.append(SdpConstraint(block(mat, comp_coef=comp), links.etas[j], "<="))

    x_mat = _rank_one(h_red)
    inv_eta = 1.0 / links.eta_b_val
    if delta_b > 0.0:
        constraints.append(
            SdpConstraint(
                block((1.0 - 2.0 * delta_b) * x_mat + delta_b**2 * eye_r, -inv_eta, delta_b**2),
                0.0, ">=",
            )
        )
        constraints.append(
            SdpConstraint(
                block(x_mat + (delta_b**2 - 2.0 * delta_b) * eye_r, -inv_eta, delta_b**2 - 2.0 * delta_b),
                0.0, ">=",
            )
        )
    else:
        constraints.append(SdpConstraint(block(x_mat, -inv_eta), 0.0, ">="))

    prob = SdpProblem(dim=n, objective=block(rate_coef=1.0), constraints=constraints)
    sol = solve(prob)
    if sol.status == "infeasible":
        raise InfeasibleDesignError("zero power is always feasible; solver disagreed")

    w_block = sol.x_opt[:r_dim, :r_dim]
    x_full = basis @ w_block @ basis.conj().T
    if has_complement:
        comp_trace = float(np.real(sol.x_opt[i_comp, i_comp]))
        if comp_trace > 1e-12:
            proj = np.eye(m_a, dtype=complex) - basis @ basis.conj().T
            x_full = x_full + comp_trace * proj / (m_a - r_dim)

    mrt_dir = links.h_row.conj()
    w, p_a, rate = _extract(
        geom, links, x_full, h_ab_est, rng, n_draws, robust=robust, warm_starts=(mrt_dir,)
    )
    margins, top_val = _certificate(geom, links, w, p_a, rate, h_ab_est)
    return BeamSolution(
        w=w, p_a=p_a, rate=rate, boresight=geom.alice.boresight,
        dep_floor_margins=margins, top_value=top_val,
        meta={
            "design": "ob-robust", "sdp_objective": sol.objective_value,
            "sdp_status": sol.status, "delta_b": delta_b,
        },
    )


def _solve_w_subproblem(links: _LinkSet, basis, p_a: float, m_a: int, robust: RobustSpec | None):
    """Unit-trace beamforming-matrix subproblem at fixed power and orientation.

    Returns the lifted full-dimension matrix.  Perfect-CSI form
    maximizes the receiver gain; the robust form maximizes the
    worst-case supported rate through both reliability branches.
    """
    h_red = links.h_row @ basis
    rows_red = [r @ basis for r in links.warden_rows]
    r_dim = basis.shape[1]
    pad = r_dim < m_a
    trace_sense = "<=" if pad else "=="

    if robust is None or robust.csi_bounds.delta_b == 0.0 and all(
        _delta_w(robust, j) == 0.0 for j in range(len(rows_red))
    ):
        robust = None

    if robust is None:
        constraints = [SdpConstraint(np.eye(r_dim, dtype=complex), 1.0, trace_sense)]
        for j, r in enumerate(rows_red):
            g_j = links.links_w[j].g_tx
            cap = links.etas[j] / (g_j * p_a) - 1.0
            if links.k <= 0.0 or not np.isfinite(cap):
                continue
            constraints.append(SdpConstraint(_rank_one(r), max(cap, 0.0) / links.k, "<="))
        prob = SdpProblem(dim=r_dim, objective=_rank_one(h_red), constraints=constraints)
        sol = solve(prob)
        if sol.status == "infeasible":
            raise InfeasibleDesignError(f"W-subproblem infeasible at power {p_a}")
        w_block = sol.x_opt
    else:
        delta_b = robust.csi_bounds.delta_b
        n = r_dim + 1
        i_rate = r_dim

        def block(mat_w=None, rate_coef=0.0):
            m = np.zeros((n, n), dtype=complex)
            if mat_w is not None:
                m[:r_dim, :r_dim] = mat_w
            m[i_rate, i_rate] = rate_coef
            return m

        eye_r = np.eye(r_dim, dtype=complex)
        constraints = [SdpConstraint(block(eye_r), 1.0, trace_sense)]
        for j, r in enumerate(rows_red):
            d_w = _delta_w(robust, j)
            g_j = links.links_w[j].g_tx
            if d_w > 0.0:
                bound = links.etas[j] / (g_j * p_a) - 1.0 - 2.0 * links.k * d_w**2
                coef = 2.0 * links.k
            else:
                bound = links.etas[j] / (g_j * p_a) - 1.0
                coef = links.k
            if coef <= 0.0:
                continue
            constraints.append(SdpConstraint(block(coef * _rank_one(r)), max(bound, 0.0), "<="))
        x_mat = _rank_one(h_red)
        inv_peta = 1.0 / (p_a * links.eta_b_val)
        if delta_b > 0.0:
            constraints.append(
                SdpConstraint(block((1.0 - 2.0 * delta_b) * x_mat, -inv_peta), -(delta_b**2), ">=")
            )
            constraints.append(
                SdpConstraint(block(x_mat, -inv_peta), 2.0 * delta_b - delta_b**2, ">=")
            )
        else:
            constraints.append(SdpConstraint(block(x_mat, -inv_peta), 0.0, ">="))
        prob = SdpProblem(dim=n, objective=block(rate_coef=1.0), constraints=constraints)
        sol = solve(prob)
        if sol.status == "infeasible":
            raise InfeasibleDesignError(f"robust W-subproblem infeasible at power {p_a}")
        w_block = sol.x_opt[:r_dim, :r_dim]

    x_full = basis @ w_block @ basis.conj().T
    if pad:
        slack = 1.0 - float(np.real(np.trace(w_block)))
        if slack > 1e-12:
            proj = np.eye(m_a, dtype=complex) - basis @ basis.conj().T
            x_full = x_full + slack * proj / (m_a - r_dim)
    return x_full


def _jo_ba(
    geom: ScenarioGeometry,
    h_ab: np.ndarray,
    robust: RobustSpec | None,
    n_grid: int,
    rel_tol: float,
    max_iters: int,
    n_draws: int,
    rng: np.random.Generator | None,
    provisional_scale: float = 1.0,
) -> BeamSolution:
    sc = geom.scenario
    if rng is None:
        rng = rng_stream(sc.seed, 102)
    m_a = sc.alice_array.size
    theta0 = sc.es_pattern.theta0_deg
    u_ab = geom.u_alice_bob
    delta_b = robust.csi_bounds.delta_b if robust is not None else 0.0

    coarse = orientation_candidates(u_ab, theta0, n_grid)
    coarse_thetas = [2.0 * math.pi * k / n_grid for k in range(n_grid)]

    def refined_candidates(theta_c):
        step = 2.0 * math.pi / n_grid / 10.0
        thetas = [theta_c + i * step for i in range(-9, 10)]
        all_cands = orientation_candidates(u_ab, theta0, 1)
        # rebuild each refined candidate by rotating the seed vector
        out = []
        seed = all_cands[0]
        for th in thetas:
            o = (
                seed * math.cos(th)
                + np.cross(u_ab, seed) * math.sin(th)
                + u_ab * np.dot(u_ab, seed) * (1.0 - math.cos(th))
            )
            out.append((th % (2.0 * math.pi), o / np.linalg.norm(o)))
        return out

    # orientation-independent pieces of the covertness caps
    links_ref = _build_links(geom, h_ab)
    etas = links_ref.etas
    warden_rows = links_ref.warden_rows
    k = links_ref.k
    u_to_bob = geom.bob.position - geom.alice.position
    u_to_wardens = [w_node.position - geom.alice.position for w_node in geom.wardens]

    def es_gain(boresight, target_vec) -> float:
        ang = off_boresight_angle(boresight, target_vec)
        return dbi_to_linear(earth_station_gain_dbi(sc.es_pattern, ang))

    def orientation_step(x_w, incumbent):
        """Best (boresight, power) on the cone for the current beamforming matrix."""
        gains_t = [float(np.real(r @ x_w @ r.conj())) for r in warden_rows]

        def denom(j: int) -> float:
            if robust is not None and _delta_w(robust, j) > 0.0:
                return 1.0 + 2.0 * k * (gains_t[j] + _delta_w(robust, j) ** 2)
            return 1.0 + k * gains_t[j]

        denoms = [denom(j) for j in range(geom.n_wardens)]

        def score(o):
            p = sc.p_max_w
            for j in range(geom.n_wardens):
                p = min(p, etas[j] / (es_gain(o, u_to_wardens[j]) * denoms[j]))
            return es_gain(o, u_to_bob) * p, p

        best = None
        pool = list(zip(coarse_thetas, coarse))
        if incumbent is not None:
            pool.append(incumbent)
        for theta, o in pool:
            val, p = score(o)
            if best is None or val > best[0]:
                best = (val, theta, o, p)
        for theta, o in refined_candidates(best[1]):
            val, p = score(o)
            if val > best[0]:
                best = (val, theta, o, p)
        return best[2], best[3], best[1]

    # provisional power for the first beamforming solve: the caps with
    # zero LoS leakage (a zero initial power would make the first
    # subproblem unconstrained and stall the alternation)
    links0 = _build_links(geom, h_ab, boresight=u_ab)
    p_prov = provisional_scale * _power_cap(links0, [0.0] * geom.n_wardens, robust)

    o_cur = u_ab
    p_cur = p_prov
    incumbent = None
    g_prev = 0.0
    converged = False
    x_w = None
    history = []
    for it in range(max_iters):
        links_cur = _build_links(geom, h_ab, boresight=o_cur)
        basis = _orth_basis([links_cur.h_row, *links_cur.warden_rows], m_a)
        for attempt in range(4):
            try:
                x_new = _solve_w_subproblem(links_cur, basis, p_cur, m_a, robust)
                break
            except InfeasibleDesignError:
                if attempt == 3:
                    raise
                p_cur *= 0.5
        if x_w is not None:
            # ascent safeguard: keep the incumbent matrix when solver
            # tolerance makes the fresh solve marginally worse
            x_old_gain = float(np.real(links_cur.h_row @ x_w @ links_cur.h_row.conj()))
            x_new_gain = float(np.real(links_cur.h_row @ x_new @ links_cur.h_row.conj()))
            if x_new_gain < x_old_gain:
                x_new = x_w
        x_w = x_new
        o_cur, p_cur, theta_cur = orientation_step(x_w, incumbent)
        incumbent = (theta_cur, o_cur)

        links_new = _build_links(geom, h_ab, boresight=o_cur)
        x_gain = float(np.real(links_new.h_row.conj() @ x_w @ links_new.h_row))
        g_new = p_cur * links_new.eta_b_val * max(0.0, _robust_rate_factor(x_gain, delta_b))
        history.append(g_new)
        if it > 0 and abs(g_new - g_prev) <= rel_tol * max(abs(g_new), 1e-30):
            converged = True
            g_prev = g_new
            break
        g_prev = g_new

    links_fin = _build_links(geom, h_ab, boresight=o_cur)
    mrt_dir = links_fin.h_row.conj()
    w, p_a, rate = _extract(
        geom, links_fin, x_w, h_ab, rng, n_draws, robust=robust, warm_starts=(mrt_dir,)
    )
    if robust is None:
        rate = max_rate(p_a, links_fin.link_b, h_ab, w, geom.combiner_bob, sc.covert, geom.noise_bob)
    margins, top_val = _certificate(geom, links_fin, w, p_a, rate, h_ab)
    return BeamSolution(
        w=w, p_a=p_a, rate=rate, boresight=o_cur,
        dep_floor_margins=margins, top_value=top_val, converged=converged,
        meta={
            "design": "jo-ba" if robust is None else "jo-ba-robust",
            "iterations": len(history),
            "objective_history": history,
            "cone_angle_deg": off_boresight_angle(o_cur, u_ab),
        },
    )


def solve_jo_ba_perfect(
    geom: ScenarioGeometry,
    h_ab: np.ndarray,
    n_grid: int = ORIENTATION_GRID_DEFAULT,
    rel_tol: float = REL_TOL_DEFAULT,
    max_iters: int = MAX_ITERS_DEFAULT,
    n_draws: int = N_DRAWS_DEFAULT,
    rng: np.random.Generator | None = None,
) -> BeamSolution:
    """Joint beamforming and orientation design on the cone, perfect CSI."""
    return _jo_ba(geom, h_ab, None, n_grid, rel_tol, max_iters, n_draws, rng)


def solve_jo_ba_imperfect(
    geom: ScenarioGeometry,
    h_ab_est: np.ndarray,
    robust: RobustSpec,
    n_grid: int = ORIENTATION_GRID_DEFAULT,
    rel_tol: float = REL_TOL_DEFAULT,
    max_iters: int = MAX_ITERS_DEFAULT,
    n_draws: int = N_DRAWS_DEFAULT,
    rng: np.random.Generator | None = None,
) -> BeamSolution:
    """Joint design under bounded CSI error."""
    return _jo_ba(geom, h_ab_est, robust, n_grid, rel_tol, max_iters, n_draws, rng)


def _baseline(geom: ScenarioGeometry, h_ab: np.ndarray, w: np.ndarray, name: str) -> BeamSolution:
    links = _build_links(geom, h_ab)
    gains = [abs(r @ w) ** 2 for r in links.warden_rows]
    p_a = _power_cap(links, gains)
    rate = max_rate(p_a, links.link_b, h_ab, w, geom.combiner_bob, geom.scenario.covert, geom.noise_bob)
    margins, top_val = _certificate(geom, links, w, p_a, rate, h_ab)
    return BeamSolution(
        w=w, p_a=p_a, rate=rate, boresight=geom.alice.boresight,
        dep_floor_margins=margins, top_value=top_val, meta={"design": name},
    )


def mrt_baseline(geom: ScenarioGeometry, h_ab: np.ndarray) -> BeamSolution:
    """Matched filter to the effective receiver row, capped by covertness."""
    links = _build_links(geom, h_ab)
    h = links.h_row.conj()
    n = np.linalg.norm(h)
    if n == 0.0:
        raise InfeasibleDesignError("zero effective channel")
    return _baseline(geom, h_ab, h / n, "mrt")


def zf_baseline(geom: ScenarioGeometry, h_ab: np.ndarray) -> BeamSolution:
    """Matched filter projected on the null space of the warden LoS rows."""
    links = _build_links(geom, h_ab)
    m_a = geom.scenario.alice_array.size
    if geom.n_wardens >= m_a:
        raise InfeasibleDesignError(
            f"zero-forcing needs fewer wardens ({geom.n_wardens}) than antennas ({m_a})"
        )
    h = links.h_row.conj()
    rows = np.stack(links.warden_rows)
    # null-space projection via the right singular vectors; applied twice
    # for numerical depth since the warden rows are nearly collinear
    _, s, vh = np.linalg.svd(rows, full_matrices=False)
    v_range = vh[s > max(s[0], 1e-300) * 1e-12].conj().T
    w = h - v_range @ (v_range.conj().T @ h)
    w = w - v_range @ (v_range.conj().T @ w)
    n = np.linalg.norm(w)
    if n < 1e-300:
        raise InfeasibleDesignError("matched direction lies entirely in the warden row space")
    return _baseline(geom, h_ab, w / n, "zf")


def evaluate_solution(
    geom: ScenarioGeometry,
    solution: BeamSolution,
    h_ab_true: np.ndarray,
    los_wardens_true: list[np.ndarray] | None = None,
) -> FeasibilityReport:
    """Post-hoc audit of a solution against (possibly perturbed) channels."""
    sc = geom.scenario
    los_w = geom.los_wardens if los_wardens_true is None else los_wardens_true
    link_b = geom.link_bob(solution.boresight)
    margins, mdl_values = [], []
    for j in range(geom.n_wardens):
        link_j = geom.link_warden(j, solution.boresight)
        stats = warden_stats(
            link_j, los_w[j], geom.combiner_wardens[j], solution.w, solution.p_a, sc.k_factor
        )
        margins.append(dep_floor(stats, geom.noise_warden) - (1.0 - sc.covert.epsilon_w))
        mdl_values.append(min_dep_lb(stats, geom.noise_warden))
    s_b = bob_signal_power(solution.p_a, link_b, h_ab_true, solution.w, geom.combiner_bob)
    top_val = top(solution.rate, s_b, geom.noise_bob)
    realized = max_rate(
        solution.p_a, link_b, h_ab_true, solution.w, geom.combiner_bob, sc.covert, geom.noise_bob
    )
    gain_true = abs(np.vdot(geom.combiner_bob, h_ab_true @ solution.w)) ** 2
    eta = eta_b(link_b, geom.noise_bob, sc.covert)
    rate_margin = solution.p_a * eta * gain_true - (2.0**solution.rate - 1.0)
    return FeasibilityReport(
        dep_floor_margins=np.asarray(margins),
        min_dep_lb_values=np.asarray(mdl_values),
        top_value=top_val,
        realized_rate=realized,
        rate_margin=rate_margin,
    )
