"""Semidefinite programming layer.

Problems are stated over one Hermitian PSD matrix variable with trace
objective and trace constraints.  Solving happens on the standard real
symmetric embedding [[Re, -Im], [Im, Re]]; objective and constraint
matrices carry a factor 1/2 so recovered complex values equal the
embedded ones.  Backends are cvxpy solvers: Clarabel for small cones,
SCS at tight tolerance above the size threshold.

Constraint residuals of an optimal solution are verified to
1e-6 * max(1, |bound|); solutions failing the check are downgraded to
the numerical-limit status rather than silently returned.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np

HERMITIAN_TOL = 1e-12
RANK_ONE_RATIO = 1e-6
_CLARABEL_MAX_EMBEDDED_DIM = 80

SENSES = ("<=", "==", ">=")


class SdpInfeasibleError(RuntimeError):
    pass


class RandomizationError(RuntimeError):
    pass


@dataclass(frozen=True)
class SdpConstraint:
    matrix: np.ndarray
    bound: float
    sense: str

    def __post_init__(self):
        if self.sense not in SENSES:
            raise ValueError(f"sense must be one of {SENSES}")


@dataclass
class SdpProblem:
    """max Tr(objective @ X) s.t. Tr(matrix_i @ X) <sense_i> bound_i, X >= 0."""

    dim: int
    objective: np.ndarray
    constraints: list[SdpConstraint] = field(default_factory=list)

    def __post_init__(self):
        self.objective = _check_hermitian(np.asarray(self.objective), self.dim, "objective")
        self.constraints = [
            SdpConstraint(_check_hermitian(np.asarray(c.matrix), self.dim, f"constraint {i}"), float(c.bound), c.sense)
            for i, c in enumerate(self.constraints)
        ]


@dataclass(frozen=True)
class SdpSolution:
    x_opt: np.ndarray
    objective_value: float
    status: str  # "optimal" | "infeasible" | "numerical-limit"
    diagnostics: str = ""


def _check_hermitian(m: np.ndarray, dim: int, label: str) -> np.ndarray:
    if m.shape != (dim, dim):
        raise ValueError(f"{label} has shape {m.shape}, expected ({dim}, {dim})")
    scale = max(1.0, float(np.abs(m).max()))
    if np.abs(m - m.conj().T).max() > HERMITIAN_TOL * scale:
        raise ValueError(f"{label} is not Hermitian within tolerance")
    return (m + m.conj().T) / 2.0


def embed_hermitian(m: np.ndarray) -> np.ndarray:
    """Real symmetric embedding [[Re, -Im], [Im, Re]] of a Hermitian matrix."""
    r, i = np.real(m), np.imag(m)
    return np.block([[r, -i], [i, r]])


def recover_complex(y: np.ndarray) -> np.ndarray:
    """Inverse of the embedding, averaging the redundant blocks."""
    n = y.shape[0] // 2
    r = (y[:n, :n] + y[n:, n:]) / 2.0
    i = (y[n:, :n] - y[:n, n:]) / 2.0
    x = r + 1j * i
    return (x + x.conj().T) / 2.0


def embed_complex(problem: SdpProblem) -> SdpProblem:
    """Real symmetric form of a complex Hermitian problem.

    Matrices are halved so Tr of the embedded pair equals the complex
    trace inner product; bounds are unchanged.
    """
    return SdpProblem(
        dim=2 * problem.dim,
        objective=embed_hermitian(problem.objective) / 2.0,
        constraints=[
            SdpConstraint(embed_hermitian(c.matrix) / 2.0, c.bound, c.sense)
            for c in problem.constraints
        ],
    )


def _pick_solver(embedded_dim: int) -> tuple[str, dict]:
    if embedded_dim <= _CLARABEL_MAX_EMBEDDED_DIM:
        return cp.CLARABEL, {
            "tol_gap_abs": 1e-10,
            "tol_gap_rel": 1e-10,
            "tol_feas": 1e-10,
        }
    return cp.SCS, {"eps": 1e-9, "max_iters": 50_000}


def solve(problem: SdpProblem, solver: str | None = None) -> SdpSolution:
    """Solve the SDP; returns a verified solution or a diagnostic status."""
    emb = embed_complex(problem)
    y = cp.Variable((emb.dim, emb.dim), PSD=True)
    cons = []
    scales = []
    for c in emb.constraints:
        s = max(1.0, abs(c.bound))
        scales.append(s)
        expr = cp.sum(cp.multiply(c.matrix / s, y))
        if c.sense == "<=":
            cons.append(expr <= c.bound / s)
        elif c.sense == ">=":
            cons.append(expr >= c.bound / s)
        else:
            cons.append(expr == c.bound / s)
    obj_scale = max(1.0, float(np.abs(emb.objective).max()))
    cvx_prob = cp.Problem(cp.Maximize(cp.sum(cp.multiply(emb.objective / obj_scale, y))), cons)

    chosen, opts = _pick_solver(emb.dim) if solver is None else (solver, {})
    try:
        with warnings.catch_warnings():
            # reduced accuracy is reported through the solution status
            warnings.filterwarnings("ignore", message="Solution may be inaccurate")
            cvx_prob.solve(solver=chosen, **opts)
    except cp.error.SolverError as exc:
        return SdpSolution(np.zeros((problem.dim, problem.dim)), float("nan"), "numerical-limit", str(exc))

    if cvx_prob.status in (cp.INFEASIBLE, "infeasible_inaccurate"):
        return SdpSolution(np.zeros((problem.dim, problem.dim)), float("nan"), "infeasible", cvx_prob.status)
    if cvx_prob.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
        return SdpSolution(
            np.zeros((problem.dim, problem.dim)), float("nan"), "numerical-limit",
            f"solver status {cvx_prob.status}",
        )

    x = recover_complex(np.asarray(y.value))
    if problem.objective.dtype.kind != "c" and all(c.matrix.dtype.kind != "c" for c in problem.constraints):
        x = x.real
    value = float(np.real(np.trace(problem.objective @ x)))

    issues = []
    min_eig = float(np.linalg.eigvalsh((x + np.conj(x).T) / 2.0).min())
    if min_eig < -1e-7:
        issues.append(f"min eigenvalue {min_eig:.2e}")
    for c, s in zip(problem.constraints, scales):
        val = float(np.real(np.trace(c.matrix @ x)))
        if c.sense == "<=":
            resid = val - c.bound
        elif c.sense == ">=":
            resid = c.bound - val
        else:
            resid = abs(val - c.bound)
        if resid > 1e-6 * s:
            issues.append(f"constraint residual {resid:.2e} (bound {c.bound:.3g}, sense {c.sense})")
    if cvx_prob.status == cp.OPTIMAL_INACCURATE:
        issues.append("solver reported reduced accuracy")
    if issues:
        return SdpSolution(x, value, "numerical-limit", "; ".join(issues))
    return SdpSolution(x, value, "optimal")


def gaussian_randomization(
    x_opt: np.ndarray,
    feasibility_oracle,
    n_draws: int = 1000,
    rng: np.random.Generator | None = None,
    extra_candidates: tuple = (),
):
    """Rank-one extraction from a PSD matrix.

    ``feasibility_oracle(direction)`` receives a unit-norm candidate and
    returns ``(scaled_vector, objective)`` with the best admissible
    power applied, or ``(None, -inf)`` when no scaling is feasible.  The
    best candidate over: the dominant eigenvector, any caller-supplied
    warm starts, and ``n_draws`` Gaussian draws with covariance
    ``x_opt`` is returned as the scaled vector.

    A numerically rank-one input short-circuits to the exact dominant
    eigenvector scaled by the square root of its eigenvalue.
    """
    x = np.asarray(x_opt)
    x = (x + x.conj().T) / 2.0
    lam, vecs = np.linalg.eigh(x)
    lam = np.clip(lam, 0.0, None)
    top = vecs[:, -1]
    if lam[-1] <= 0.0:
        raise RandomizationError("input matrix is numerically zero")
    if lam[-2] / lam[-1] < RANK_ONE_RATIO:
        return top * np.sqrt(lam[-1])

    if rng is None:
        rng = np.random.default_rng()
    half = vecs @ np.diag(np.sqrt(lam))
    n = x.shape[0]

    candidates = [top]
    candidates.extend(np.asarray(c, dtype=complex) for c in extra_candidates)
    z = (rng.normal(size=(n_draws, n)) + 1j * rng.normal(size=(n_draws, n))) * np.sqrt(0.5)
    candidates.extend(half @ zk for zk in z)

    best_vec, best_obj = None, -np.inf
    for cand in candidates:
        norm = np.linalg.norm(cand)
        if norm < 1e-12:
            continue
        scaled, obj = feasibility_oracle(cand / norm)
        if scaled is not None and obj > best_obj:
            best_vec, best_obj = scaled, obj
    if best_vec is None:
        raise RandomizationError(
            f"no feasible candidate among {len(candidates)} (top eigenvalue {lam[-1]:.3e})"
        )
    return best_vec


def write_sdpa(problem: SdpProblem, path) -> None:
    """Dump the real-embedded problem in SDPA sparse format.

    The variable is the dual-form SDPA block matrix: block 1 carries the
    embedded PSD cone, block 2 is a diagonal slack block with one entry
    per inequality constraint (zero entries for equalities).
    """
    emb = embed_complex(problem)
    n = emb.dim
    ineq = [i for i, c in enumerate(emb.constraints) if c.sense != "=="]
    slack_pos = {idx: k + 1 for k, idx in enumerate(ineq)}
    n_slack = len(ineq)
    with open(path, "w") as fh:
        fh.write(f"{len(emb.constraints)} = mDIM\n")
        fh.write(f"{2 if n_slack else 1} = nBLOCK\n")
        fh.write((f"{n} -{n_slack}" if n_slack else f"{n}") + " = bLOCKsTRUCT\n")
        fh.write(" ".join(f"{c.bound:.17g}" for c in emb.constraints) + "\n")

        def emit(matrix_index: int, block: int, m: np.ndarray):
            for r, cidx in zip(*np.nonzero(np.triu(m))):
                fh.write(f"{matrix_index} {block} {r + 1} {cidx + 1} {m[r, cidx]:.17g}\n")

        emit(0, 1, emb.objective)
        for i, c in enumerate(emb.constraints):
            emit(i + 1, 1, c.matrix)
            if c.sense != "==":
                sign = 1.0 if c.sense == "<=" else -1.0
                fh.write(f"{i + 1} 2 {slack_pos[i]} {slack_pos[i]} {sign:.17g}\n")
