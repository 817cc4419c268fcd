import numpy as np
import pytest

from covertlink.sdp_engine import (
    RandomizationError,
    SdpConstraint,
    SdpProblem,
    embed_complex,
    embed_hermitian,
    gaussian_randomization,
    recover_complex,
    solve,
    write_sdpa,
)


def random_hermitian(n, rng):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (a + a.conj().T) / 2.0


class TestEmbedding:
    def test_scalar_problem(self):
        prob = SdpProblem(dim=1, objective=np.array([[3.0]]))
        emb = embed_complex(prob)
        assert emb.dim == 2
        assert np.allclose(emb.objective, 1.5 * np.eye(2))

    def test_eigenvalues_doubled(self):
        rng = np.random.default_rng(0)
        m = random_hermitian(5, rng)
        ev_c = np.sort(np.linalg.eigvalsh(m))
        ev_e = np.sort(np.linalg.eigvalsh(embed_hermitian(m)))
        assert np.allclose(ev_e, np.sort(np.repeat(ev_c, 2)), atol=1e-10)

    def test_trace_preserved_under_recovery(self):
        rng = np.random.default_rng(1)
        x = random_hermitian(4, rng)
        x = x @ x.conj().T  # PSD
        y = embed_hermitian(x)
        back = recover_complex(y)
        assert np.allclose(back, x, atol=1e-12)
        assert np.trace(y).real == pytest.approx(2.0 * np.trace(x).real, rel=1e-12)

    def test_embedded_inner_product_matches(self):
        rng = np.random.default_rng(2)
        a = random_hermitian(3, rng)
        x = random_hermitian(3, rng)
        lhs = np.trace(embed_hermitian(a) / 2.0 @ embed_hermitian(x)).real
        assert lhs == pytest.approx(np.trace(a @ x).real, rel=1e-12)

    def test_non_hermitian_rejected(self):
        with pytest.raises(ValueError):
            SdpProblem(dim=2, objective=np.array([[0.0, 1.0], [0.0, 0.0]]))


class TestSolve:
    def test_top_eigenpair(self):
        rng = np.random.default_rng(3)
        c = random_hermitian(6, rng)
        prob = SdpProblem(
            dim=6,
            objective=c,
            constraints=[SdpConstraint(np.eye(6, dtype=complex), 1.0, "<=")],
        )
        sol = solve(prob)
        lam, vecs = np.linalg.eigh(c)
        assert sol.status == "optimal"
        assert sol.objective_value == pytest.approx(lam[-1], rel=1e-7)
        u = vecs[:, -1]
        assert np.allclose(sol.x_opt, np.outer(u, u.conj()), atol=1e-5)

    def test_diagonal_toy(self):
        prob = SdpProblem(
            dim=2,
            objective=np.diag([1.0, 2.0]).astype(complex),
            constraints=[SdpConstraint(np.eye(2, dtype=complex), 1.0, "==")],
        )
        sol = solve(prob)
        assert sol.status == "optimal"
        assert sol.objective_value == pytest.approx(2.0, abs=1e-7)
        assert np.allclose(sol.x_opt, np.diag([0.0, 1.0]), atol=1e-6)

    def test_infeasible_pair(self):
        prob = SdpProblem(
            dim=3,
            objective=np.eye(3, dtype=complex),
            constraints=[
                SdpConstraint(np.eye(3, dtype=complex), 1.0, "<="),
                SdpConstraint(np.eye(3, dtype=complex), 2.0, ">="),
            ],
        )
        sol = solve(prob)
        assert sol.status == "infeasible"

    def test_reference_gap(self):
        # trace-capped eigenvalue problems with known optimum
        rng = np.random.default_rng(4)
        for n in (2, 4, 8):
            c = random_hermitian(n, rng)
            cap = rng.uniform(0.5, 3.0)
            prob = SdpProblem(
                dim=n,
                objective=c,
                constraints=[SdpConstraint(np.eye(n, dtype=complex), cap, "<=")],
            )
            sol = solve(prob)
            lam_max = np.linalg.eigvalsh(c)[-1]
            expected = cap * lam_max if lam_max > 0 else 0.0
            assert sol.status == "optimal"
            assert sol.objective_value == pytest.approx(expected, rel=1e-7, abs=1e-7)

    def test_determinism(self):
        rng = np.random.default_rng(5)
        c = random_hermitian(5, rng)
        prob = SdpProblem(
            dim=5, objective=c, constraints=[SdpConstraint(np.eye(5, dtype=complex), 1.0, "<=")]
        )
        s1 = solve(prob)
        s2 = solve(prob)
        assert s1.status == s2.status == "optimal"
        assert abs(s1.objective_value - s2.objective_value) <= 1e-9

    def test_real_input_gives_real_solution(self):
        prob = SdpProblem(
            dim=2,
            objective=np.array([[1.0, 0.2], [0.2, 0.5]]),
            constraints=[SdpConstraint(np.eye(2), 1.0, "<=")],
        )
        sol = solve(prob)
        assert sol.status == "optimal"
        assert sol.x_opt.dtype.kind == "f"


class TestGaussianRandomization:
    def test_rank_one_shortcut(self):
        rng = np.random.default_rng(6)
        u = rng.normal(size=4) + 1j * rng.normal(size=4)
        u = u / np.linalg.norm(u)
        x = 2.5 * np.outer(u, u.conj())

        def oracle(_):
            raise AssertionError("oracle must not run for rank-one input")

        w = gaussian_randomization(x, oracle, n_draws=10, rng=rng)
        assert np.linalg.norm(w) ** 2 == pytest.approx(2.5, rel=1e-9)
        overlap = abs(np.vdot(w / np.linalg.norm(w), u))
        assert overlap == pytest.approx(1.0, rel=1e-9)

    def test_best_candidate_beats_eigvec(self):
        # objective rewards alignment with a direction != top eigenvector
        rng = np.random.default_rng(7)
        target = np.array([0.0, 1.0, 0.0], dtype=complex)
        x = np.diag([1.0, 0.9, 0.1]).astype(complex)

        def oracle(w):
            return w, abs(np.vdot(target, w)) ** 2

        w = gaussian_randomization(x, oracle, n_draws=500, rng=rng)
        assert abs(np.vdot(target, w)) ** 2 > 0.5

    def test_warm_start_candidates_used(self):
        rng = np.random.default_rng(8)
        x = np.diag([1.0, 0.5]).astype(complex)
        magic = np.array([0.6, 0.8], dtype=complex)

        def oracle(w):
            if abs(np.vdot(magic, w)) > 0.999:
                return 10.0 * w, 100.0
            return w, 0.0

        w = gaussian_randomization(x, oracle, n_draws=5, rng=rng, extra_candidates=(magic,))
        assert np.linalg.norm(w) == pytest.approx(10.0, rel=1e-9)

    def test_all_infeasible_raises(self):
        rng = np.random.default_rng(9)
        x = np.diag([1.0, 0.5]).astype(complex)
        with pytest.raises(RandomizationError):
            gaussian_randomization(x, lambda w: (None, -np.inf), n_draws=5, rng=rng)

    def test_zero_matrix_raises(self):
        with pytest.raises(RandomizationError):
            gaussian_randomization(np.zeros((3, 3)), lambda w: (w, 0.0), n_draws=5)

    def test_randomized_recovery_near_sdp_bound(self):
        # recovered rank-one objective within 5% of the SDP optimum
        rng = np.random.default_rng(10)
        n = 6
        h = rng.normal(size=n) + 1j * rng.normal(size=n)
        obj = np.outer(h, h.conj())
        caps = [random_hermitian(n, rng) for _ in range(2)]
        caps = [c @ c.conj().T + 0.1 * np.eye(n) for c in caps]
        prob = SdpProblem(
            dim=n,
            objective=obj,
            constraints=[SdpConstraint(np.eye(n, dtype=complex), 1.0, "<=")]
            + [SdpConstraint(c, 1.0, "<=") for c in caps],
        )
        sol = solve(prob)
        assert sol.status == "optimal"

        def oracle(w):
            # largest feasible scale for all quadratic caps
            scale = 1.0 / max(
                np.real(np.vdot(w, w)),
                *(np.real(np.vdot(w, c @ w)) for c in caps),
            )
            v = np.sqrt(scale) * w
            return v, float(np.real(np.vdot(v, obj @ v)))

        w = gaussian_randomization(sol.x_opt, oracle, n_draws=1000, rng=rng)
        achieved = float(np.real(np.vdot(w, obj @ w)))
        assert achieved <= sol.objective_value + 1e-6
        assert achieved >= 0.95 * sol.objective_value


class TestSdpaDump:
    def test_structure(self, tmp_path):
        prob = SdpProblem(
            dim=2,
            objective=np.diag([1.0, 2.0]).astype(complex),
            constraints=[
                SdpConstraint(np.eye(2, dtype=complex), 1.0, "<="),
                SdpConstraint(np.diag([1.0, 0.0]).astype(complex), 0.5, "=="),
            ],
        )
        path = tmp_path / "prob.dat-s"
        write_sdpa(prob, path)
        lines = path.read_text().splitlines()
        assert lines[0].startswith("2")
        assert "bLOCKsTRUCT" in lines[2]
        assert "4 -1" in lines[2]
        assert any(line.startswith("0 1 ") for line in lines)  # objective entries
        assert any(" 2 1 1 " in line for line in lines)  # slack entry
