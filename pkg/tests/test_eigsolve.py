import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.linalg import eigh

from omvsl.eigsolve import (
    DeflationExhaustedError,
    NumericalError,
    Pencil,
    SolverConfig,
    StartNotInRangeError,
    estimate_norm,
    gev_topk,
    loecg,
    solve_projected,
)
from omvsl.linop import DenseOperator, FunctionOperator

from conftest import leakage, random_pencil, range_oracle


def dense_pencil(A, B):
    return Pencil(DenseOperator(A), DenseOperator(B))


class TestConfig:
    def test_defaults(self):
        c = SolverConfig()
        assert (c.krylov_order, c.tol, c.max_iters, c.guard_tol) == (10, 1e-6, 500, 1e-12)

    @pytest.mark.parametrize("kw", [{"krylov_order": 0}, {"tol": -1.0}, {"max_iters": 0},
                                    {"guard_tol": 1e-3, "tol": 1e-4}])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            SolverConfig(**kw)


class TestPencil:
    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            dense_pencil(np.eye(3), np.eye(2))

    def test_indefinite_B_rejected(self):
        with pytest.raises(ValueError):
            dense_pencil(np.eye(3), -np.eye(3))


class TestEstimateNorm:
    def test_identity(self):
        assert 0.1 <= estimate_norm(DenseOperator(np.eye(5))) <= 10

    def test_zero(self):
        assert estimate_norm(FunctionOperator(4, lambda x: 0 * x)) == 0

    def test_diagonal(self):
        assert 10 <= estimate_norm(DenseOperator(np.diag(np.arange(1.0, 101)))) <= 100


class TestSolveProjected:
    def test_diagonal(self):
        rho, z = solve_projected(np.diag([3.0, 1.0]), np.eye(2))
        assert_allclose(rho, 3)
        assert_allclose(np.abs(z), [1, 0], atol=1e-15)

    def test_identical_pair(self):
        rng = np.random.default_rng(0)
        M = rng.standard_normal((5, 5))
        M = M @ M.T + np.eye(5)
        rho, _ = solve_projected(M, M)
        assert_allclose(rho, 1, rtol=1e-12)

    def test_random_spd_pair(self):
        rng = np.random.default_rng(1)
        A = rng.standard_normal((11, 11))
        A = A + A.T
        B = rng.standard_normal((11, 11))
        B = B @ B.T + 0.1 * np.eye(11)
        rho, z = solve_projected(A, B)
        assert_allclose(rho, eigh(A, B, eigvals_only=True)[-1], rtol=1e-10)
        assert_allclose(np.linalg.norm(z), 1)
        assert np.linalg.norm(A @ z - rho * B @ z) <= 1e-10 * np.linalg.norm(A)

    def test_singular_recovers_with_jitter(self):
        B = np.diag([1.0, 1e-30])
        rho, z = solve_projected(np.diag([1.0, 0.0]), B)
        assert np.isfinite(rho)

    def test_indefinite_is_hard_error(self):
        with pytest.raises(NumericalError):
            solve_projected(np.eye(2), np.diag([1.0, -1.0]))


class TestLOECG:
    def test_diagonal(self):
        r = loecg(dense_pencil(np.diag([3.0, 2, 1]), np.eye(3)))
        assert r.converged
        assert_allclose(r.rho, 3, rtol=1e-10)
        assert_allclose(r.x, [1, 0, 0], atol=1e-8)

    def test_generalized_diagonal(self):
        r = loecg(dense_pencil(np.diag([2.0, 1]), np.diag([1.0, 4])))
        assert_allclose(r.rho, 2, rtol=1e-10)
        assert_allclose(r.x, [1, 0], atol=1e-8)

    def test_singular_B(self):
        r = loecg(dense_pencil(np.diag([5.0, 0]), np.diag([1.0, 0])))
        assert_allclose(r.rho, 5, rtol=1e-10)
        assert abs(r.x[1]) <= 1e-8

    def test_range_oracle_d100(self):
        A, B, C = random_pencil(7, d=100, rank=60)
        r = loecg(dense_pencil(A, B), SolverConfig(tol=1e-8))
        lam, x, U = range_oracle(A, B, C)
        assert_allclose(r.rho, lam, rtol=1e-6)
        assert leakage(r.x, U) <= 1e-6
        assert abs(abs(r.x @ x) - 1) <= 1e-6

    @pytest.mark.parametrize("seed", range(6))
    def test_properties(self, seed):
        A, B, C = random_pencil(100 + seed, d=40)
        r = loecg(dense_pencil(A, B), SolverConfig(tol=1e-8, seed=seed))
        assert r.converged and r.seed == seed
        assert_allclose(np.linalg.norm(r.x), 1, rtol=1e-12)
        # residual recomputed independently
        res = np.linalg.norm(A @ r.x - r.rho * B @ r.x) / (r.est_a + abs(r.rho) * r.est_b)
        assert res < 1e-8
        # monotone Rayleigh quotient and sign convention
        h = np.asarray(r.rho_history)
        assert np.all(np.diff(h) >= -1e-12 * max(1.0, np.max(np.abs(h))))
        assert r.x[np.argmax(np.abs(r.x))] > 0

    def test_deterministic(self):
        A, B, _ = random_pencil(3, d=30)
        a = loecg(dense_pencil(A, B), SolverConfig(seed=4))
        b = loecg(dense_pencil(A, B), SolverConfig(seed=4))
        assert a.rho == b.rho and np.array_equal(a.x, b.x)

    def test_nonconvergence_flagged(self):
        A, B, _ = random_pencil(5, d=80)
        r = loecg(dense_pencil(A, B), SolverConfig(krylov_order=1, max_iters=2, tol=1e-14,
                                                   guard_tol=1e-15))
        assert not r.converged and r.iters == 2
        assert np.isfinite(r.rho)

    def test_start_not_in_range(self):
        Z = FunctionOperator(3, lambda x: 0 * x)
        with pytest.raises(StartNotInRangeError):
            loecg(Pencil(Z, Z, check=False))


class TestGevTopk:
    def test_diagonal(self):
        Q, vals, _ = gev_topk(dense_pencil(np.diag([3.0, 2, 1]), np.eye(3)), 2)
        assert_allclose(np.abs(Q), np.eye(3)[:, :2], atol=1e-8)
        assert_allclose(vals, [3, 2], rtol=1e-8)

    def test_degenerate_pencil(self):
        rng = np.random.default_rng(2)
        M = rng.standard_normal((6, 6))
        M = M @ M.T + np.eye(6)
        Q, vals, _ = gev_topk(dense_pencil(M, M), 1)
        assert_allclose(vals, [1], rtol=1e-8)
        assert_allclose(Q[:, 0] @ M @ Q[:, 0], 1, rtol=1e-8)

    def test_random_spd(self):
        rng = np.random.default_rng(3)
        A = rng.standard_normal((40, 40))
        A = A + A.T
        B = rng.standard_normal((40, 40))
        B = B @ B.T + np.eye(40)
        Q, vals, _ = gev_topk(dense_pencil(A, B), 3, SolverConfig(tol=1e-10))
        ref = eigh(A, B, eigvals_only=True)[::-1][:3]
        assert_allclose(vals, ref, rtol=1e-6)
        assert np.all(np.diff(vals) <= 0)
        assert np.max(np.abs(Q.T @ B @ Q - np.eye(3))) <= 1e-8

    def test_exhausts_range(self):
        A = np.diag([2.0, 1, 0, 0])
        B = np.diag([1.0, 1, 0, 0])
        with pytest.raises(DeflationExhaustedError) as info:
            gev_topk(dense_pencil(A, B), 3)
        assert info.value.achieved == 2
