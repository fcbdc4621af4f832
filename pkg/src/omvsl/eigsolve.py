"""Top eigenpair of a semi-definite pencil ``A x = lambda B x``, ``x in R(B)``.

``loecg`` is a locally optimal extended conjugate gradient iteration
without preconditioning or blocking: every step searches the Krylov space
of ``A - rho B`` at the current iterate, augmented with the previous
iterate, and solves the small projected pencil exactly. Because the start
vector is pushed through ``B`` and ``R(A)`` is assumed inside ``R(B)``, all
iterates stay in the range of ``B``, so a singular ``B`` needs no
regularization.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import linalg

from .linop import LinearMap, SymmetricOperator, lanczos_basis

__all__ = [
    "Pencil",
    "SolverConfig",
    "EigResult",
    "NumericalError",
    "StartNotInRangeError",
    "DeflationExhaustedError",
    "estimate_norm",
    "solve_projected",
    "loecg",
    "gev_topk",
]


class NumericalError(RuntimeError):
    """A numerical failure the solver cannot recover from."""


class StartNotInRangeError(NumericalError):
    pass


class DeflationExhaustedError(NumericalError):
    def __init__(self, achieved: int, requested: int):
        self.achieved, self.requested = achieved, requested
        super().__init__(
            f"deflation exhausted the range of B after {achieved} of {requested} columns")


@dataclass
class Pencil:
    """Symmetric pencil ``(A, B)`` with ``B`` positive semi-definite.

    ``phi`` and ``psi`` optionally keep the per-view blocks the operators
    were assembled from; objective evaluators and the degeneracy fallback
    need them.
    """

    A: LinearMap
    B: LinearMap
    block_sizes: Sequence[int] = ()
    phi: list | None = None
    psi: list | None = None
    check: bool = True

    def __post_init__(self):
        if self.A.dim != self.B.dim:
            raise ValueError(f"A is {self.A.dim}-dimensional but B is {self.B.dim}-dimensional")
        if not self.block_sizes:
            self.block_sizes = (self.A.dim,)
        self.block_sizes = tuple(int(s) for s in self.block_sizes)
        if sum(self.block_sizes) != self.A.dim:
            raise ValueError(f"block sizes {self.block_sizes} do not sum to {self.A.dim}")
        if self.check:
            rng = np.random.default_rng(12345)
            scale = estimate_norm(self.B, seed=0)
            for _ in range(5):
                x = rng.standard_normal(self.dim)
                curv = x @ self.B.matvec(x)
                if curv < -1e-10 * max(scale, 1.0) * (x @ x):
                    raise ValueError(f"B is not positive semi-definite (probe curvature {curv:.3e})")

    @property
    def dim(self) -> int:
        return self.A.dim


@dataclass(frozen=True)
class SolverConfig:
    krylov_order: int = 10
    tol: float = 1e-6
    max_iters: int = 500
    guard_tol: float = 1e-12
    seed: int = 0

    def __post_init__(self):
        if self.krylov_order < 1 or self.max_iters < 1:
            raise ValueError("krylov_order and max_iters must be positive")
        if not (self.tol > 0 and self.guard_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.guard_tol >= self.tol:
            raise ValueError("guard_tol must be smaller than tol")


@dataclass
class EigResult:
    rho: float
    x: np.ndarray
    residual: float
    iters: int
    converged: bool
    seed: int = 0
    est_a: float = 1.0
    est_b: float = 1.0
    rho_history: list = field(default_factory=list)
    matvecs: int = 0


def estimate_norm(op: LinearMap, seed: int = 0, iters: int = 10) -> float:
    """Rough 2-norm estimate from a few power iterations.

    Only the order of magnitude is meaningful. Returns 0 for a zero operator.
    """
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(op.shape[1])
    u /= np.linalg.norm(u)
    est = 0.0
    for _ in range(iters):
        w = op.matvec(u)
        est = float(np.linalg.norm(w))
        if est == 0.0:
            return 0.0
        u = w / est
    return est


def solve_projected(Am, Bm):
    """Largest eigenpair of the small dense pencil ``(Am, Bm)``, ``Bm`` SPD.

    Cholesky ``Bm = R^T R``, eigendecomposition of ``R^-T Am R^-1``, then
    ``z = R^-1 w`` rescaled to unit 2-norm.
    """
    Am = np.asarray(Am, dtype=np.float64)
    Bm = np.asarray(Bm, dtype=np.float64)
    m = Am.shape[0]
    try:
        R = linalg.cholesky(Bm, lower=False)
    except linalg.LinAlgError:
        jitter = 1e-12 * np.trace(Bm) / m
        try:
            R = linalg.cholesky(Bm + jitter * np.eye(m), lower=False)
        except linalg.LinAlgError as exc:
            raise NumericalError("projected B is not positive definite") from exc
    T = linalg.solve_triangular(R, Am, trans="T", lower=False)
    T = linalg.solve_triangular(R, T.T, trans="T", lower=False)
    T = 0.5 * (T + T.T)
    vals, vecs = linalg.eigh(T)
    z = linalg.solve_triangular(R, vecs[:, -1], lower=False)
    return float(vals[-1]), z / np.linalg.norm(z)


def _fix_sign(x):
    i = int(np.argmax(np.abs(x)))
    return -x if x[i] < 0 else x


def _random_range_start(B, rng, dim):
    for _ in range(5):
        x = B.matvec(rng.standard_normal(dim))
        nrm = np.linalg.norm(x)
        if nrm > 0 and np.isfinite(nrm):
            return x / nrm
    raise StartNotInRangeError("start not in range: B maps every random start to zero")


def loecg(pencil: Pencil, config: SolverConfig | None = None) -> EigResult:
    """Top eigenpair of ``pencil`` by the locally optimal extended CG method."""
    config = config or SolverConfig()
    A, B = pencil.A, pencil.B
    d = pencil.dim
    est_a = estimate_norm(A, seed=config.seed) or 1.0
    est_b = estimate_norm(B, seed=config.seed + 1) or 1.0
    matvecs = 0

    rng = np.random.default_rng(config.seed)
    x1 = _random_range_start(B, rng, d)
    ax1, bx1 = A.matvec(x1), B.matvec(x1)
    matvecs += 2
    rho = float((x1 @ ax1) / (x1 @ bx1))
    res = np.linalg.norm(ax1 - rho * bx1) / (est_a + abs(rho) * est_b)
    x0 = None
    history = [rho]
    iters = 0

    while res >= config.tol and iters < config.max_iters:
        iters += 1
        a_cols, b_cols = [], []

        def shifted(z, rho=rho):
            az, bz = A.matvec(z), B.matvec(z)
            a_cols.append(az)
            b_cols.append(bz)
            return az - rho * bz

        Z = lanczos_basis(shifted, x1, config.krylov_order)
        W = Z
        if x0 is not None:
            p = x0 - Z @ (Z.T @ x0)
            if np.linalg.norm(p) > config.guard_tol:
                p = p - Z @ (Z.T @ p)
                W = np.column_stack([Z, p / np.linalg.norm(p)])
        # reuse products from the Lanczos sweep, compute the rest
        for j in range(len(a_cols), W.shape[1]):
            a_cols.append(A.matvec(W[:, j]))
            b_cols.append(B.matvec(W[:, j]))
        matvecs += 2 * len(a_cols)
        AW = np.column_stack(a_cols[:W.shape[1]])
        BW = np.column_stack(b_cols[:W.shape[1]])
        Am = W.T @ AW
        Bm = W.T @ BW
        rho, z = solve_projected(0.5 * (Am + Am.T), 0.5 * (Bm + Bm.T))
        x0 = x1
        x1 = W @ z
        ax1, bx1 = AW @ z, BW @ z
        res = np.linalg.norm(ax1 - rho * bx1) / (est_a + abs(rho) * est_b)
        history.append(rho)

    return EigResult(
        rho=rho, x=_fix_sign(x1 / np.linalg.norm(x1)), residual=float(res), iters=iters,
        converged=bool(res < config.tol), seed=config.seed, est_a=est_a, est_b=est_b,
        rho_history=history, matvecs=matvecs)


class _BDeflated(SymmetricOperator):
    """``T^T X T`` with ``T = I - Q Q^T B`` for B-orthonormal ``Q``."""

    def __init__(self, X: LinearMap, B: LinearMap, Q: np.ndarray, BQ: np.ndarray):
        self.X, self.B, self.Q, self.BQ = X, B, Q, BQ
        self.shape = X.shape

    def matvec(self, x):
        x = x - self.Q @ (self.BQ.T @ x)
        y = self.X.matvec(x)
        return y - self.BQ @ (self.Q.T @ y)


def gev_topk(pencil: Pencil, k: int, config: SolverConfig | None = None):
    """Top ``k`` generalized eigenvectors, B-orthonormal, eigenvalues descending.

    Each column comes from ``loecg`` on the pencil deflated against the
    columns found so far. Returns ``(Q, eigenvalues, results)``.
    """
    config = config or SolverConfig()
    if k < 1:
        raise ValueError("k must be positive")
    A, B = pencil.A, pencil.B
    d = pencil.dim
    Q = np.zeros((d, 0))
    BQ = np.zeros((d, 0))
    vals, results = [], []
    for j in range(k):
        if j == 0:
            sub = pencil
        else:
            sub = Pencil(_BDeflated(A, B, Q, BQ), _BDeflated(B, B, Q, BQ), pencil.block_sizes,
                         check=False)
        cfg = SolverConfig(config.krylov_order, config.tol, config.max_iters, config.guard_tol,
                           config.seed + j)
        try:
            res = loecg(sub, cfg)
        except StartNotInRangeError as exc:
            raise DeflationExhaustedError(j, k) from exc
        q = res.x - Q @ (BQ.T @ res.x)
        bq = B.matvec(q)
        curv = q @ bq
        scale = estimate_norm(B, seed=0) or 1.0
        if not curv > 1e-14 * scale * (q @ q):
            raise DeflationExhaustedError(j, k)
        # one extra B-orthogonalization pass against rounding drift
        q = q - Q @ (BQ.T @ q)
        bq = B.matvec(q)
        nrm = np.sqrt(q @ bq)
        q, bq = q / nrm, bq / nrm
        if not res.converged:
            warnings.warn(f"generalized eigenvector {j + 1} did not converge "
                          f"(residual {res.residual:.2e})", RuntimeWarning, stacklevel=2)
        Q = np.column_stack([Q, q])
        BQ = np.column_stack([BQ, bq])
        vals.append(res.rho)
        results.append(res)
    return Q, np.array(vals), results
