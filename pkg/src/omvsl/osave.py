"""Successive approximation of orthonormal per-view projections.

Column ``l + 1`` of every ``P_s`` comes from the top eigenvector of the
relaxed pencil deflated by the columns already found: both operators are
wrapped as ``Pi A Pi`` and ``Pi B Pi`` with ``Pi = diag(I - P_s P_s^T)``,
the eigenvector is split into view blocks and each block is normalized.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .eigsolve import EigResult, Pencil, SolverConfig, loecg
from .linop import BlockVector, LinearMap, SymmetricOperator, block_offsets

__all__ = [
    "ViewDegeneracyError",
    "ProjectionSet",
    "DeflationState",
    "deflate_pencil",
    "split_normalize",
    "osave",
    "relaxed_objective",
    "trace_ratio_objective",
]


class ViewDegeneracyError(ValueError):
    def __init__(self, view: int, norm: float, threshold: float):
        self.view = view
        super().__init__(
            f"view {view} block of the eigenvector vanished (norm {norm:.3e} <= {threshold:.3e}); "
            "retry with degeneracy='fallback' or a different model")


@dataclass
class ProjectionSet:
    """Per-view projection matrices ``P_s`` (``d_s x k``).

    ``orthonormal=False`` marks ratio-trace baselines whose columns are
    B-orthonormal instead.
    """

    matrices: list
    orthonormal: bool = True
    eigenvalues: np.ndarray = field(default_factory=lambda: np.zeros(0))
    converged: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)

    def __post_init__(self):
        self.matrices = [np.asarray(P, dtype=np.float64) for P in self.matrices]
        ks = {P.shape[1] for P in self.matrices}
        if len(ks) != 1:
            raise ValueError(f"projection matrices disagree on k: {sorted(ks)}")
        if self.orthonormal:
            err = self.orthonormality_error()
            if err > 1e-10:
                raise ValueError(f"projection columns are not orthonormal (error {err:.2e})")

    @property
    def k(self) -> int:
        return self.matrices[0].shape[1]

    @property
    def v(self) -> int:
        return len(self.matrices)

    def orthonormality_error(self) -> float:
        k = self.k
        return max(float(np.max(np.abs(P.T @ P - np.eye(k)))) for P in self.matrices)


@dataclass
class DeflationState:
    sizes: tuple
    columns: list = field(default_factory=list)
    rhos: list = field(default_factory=list)
    results: list = field(default_factory=list)
    feasibility: list = field(default_factory=list)

    def __post_init__(self):
        self.sizes = tuple(int(d) for d in self.sizes)
        if not self.columns:
            self.columns = [[] for _ in self.sizes]

    @property
    def ell(self) -> int:
        return len(self.columns[0])

    def basis(self, s: int) -> np.ndarray:
        cols = self.columns[s]
        if not cols:
            return np.zeros((self.sizes[s], 0))
        return np.column_stack(cols)

    def append(self, ps: Sequence[np.ndarray]):
        for s, p in enumerate(ps):
            self.columns[s].append(p)


class _Deflated(SymmetricOperator):
    """``Pi X Pi`` for block projector ``Pi``, applied in three steps."""

    def __init__(self, base: LinearMap, bases: list, offsets):
        self.base, self.bases, self.offsets = base, bases, offsets
        self.shape = base.shape

    def _project(self, x):
        y = x.copy()
        o = self.offsets
        for s, P in enumerate(self.bases):
            if P.shape[1]:
                xs = y[o[s]:o[s + 1]]
                xs -= P @ (P.T @ xs)
        return y

    def matvec(self, x):
        return self._project(self.base.matvec(self._project(np.asarray(x, dtype=np.float64))))


def deflate_pencil(base: Pencil, state: DeflationState) -> Pencil:
    if state.ell == 0:
        return base
    bases = [state.basis(s) for s in range(len(state.sizes))]
    offsets = block_offsets(base.block_sizes)
    return Pencil(_Deflated(base.A, bases, offsets), _Deflated(base.B, bases, offsets),
                  base.block_sizes, check=False)


def split_normalize(q):
    """Split ``q`` into view blocks and normalize each; returns ``(gammas, ps)``."""
    if not isinstance(q, BlockVector):
        raise TypeError("split_normalize expects a BlockVector")
    tau = 1e-10 * np.linalg.norm(q.data)
    gammas, ps = [], []
    for s, qs in enumerate(q.blocks()):
        g = float(np.linalg.norm(qs))
        if not g > tau:
            raise ViewDegeneracyError(s, g, tau)
        p = qs / g
        gammas.append(g)
        ps.append(p / np.linalg.norm(p))
    return gammas, ps


def _fallback_column(psi: LinearMap, P: np.ndarray, iters: int = 50) -> np.ndarray:
    """Deterministic unit vector in ``R(psi)`` orthogonal to ``P``.

    Starts from the normalized ones vector, then the coordinate axes, and
    runs a deflated power iteration on ``psi`` from the first start that
    survives projection.
    """
    d = psi.dim

    def step(x):
        x = x - P @ (P.T @ x)
        x = psi.matvec(x)
        return x - P @ (P.T @ x)

    starts = [np.ones(d) / np.sqrt(d)] + list(np.eye(d))
    scale = max(np.linalg.norm(psi.matvec(c)) for c in starts[:1] + starts[1:min(d, 10) + 1])
    x = None
    for c in starts:
        y = step(c)
        if np.linalg.norm(y) > 1e-8 * max(scale, np.finfo(float).tiny):
            x = y / np.linalg.norm(y)
            break
    if x is None:
        raise ValueError("no direction left in the range of Psi")
    for _ in range(iters):
        y = step(x)
        nrm = np.linalg.norm(y)
        if nrm == 0:
            break
        x = y / nrm
    x = x - P @ (P.T @ x)
    return x / np.linalg.norm(x)


def osave(base: Pencil, k: int, config: SolverConfig | None = None,
          degeneracy: str = "raise") -> ProjectionSet:
    """Learn ``k`` orthonormal columns per view from the relaxed pencil ``base``.

    ``degeneracy`` is ``"raise"`` (default) or ``"fallback"``: when a view's
    block of the eigenvector vanishes, fall back to a deterministic unit
    vector in the range of that view's constraint block.
    """
    config = config or SolverConfig()
    if degeneracy not in ("raise", "fallback"):
        raise ValueError(f"unknown degeneracy policy {degeneracy!r}")
    sizes = base.block_sizes
    if not 1 <= k <= min(sizes):
        raise ValueError(f"k must satisfy 1 <= k <= min view dimension ({min(sizes)}), got {k}")
    state = DeflationState(sizes)
    for ell in range(k):
        pencil = deflate_pencil(base, state)
        cfg = SolverConfig(config.krylov_order, config.tol, config.max_iters, config.guard_tol,
                           config.seed + ell)
        res = loecg(pencil, cfg)
        if not res.converged:
            warnings.warn(f"column {ell + 1}: eigensolver stopped at residual {res.residual:.2e} "
                          f"after {res.iters} iterations", RuntimeWarning, stacklevel=2)
        q = BlockVector(sizes, res.x)
        feas = []
        for s in range(len(sizes)):
            P, qs = state.basis(s), q.block(s)
            feas.append(float(np.max(np.abs(P.T @ qs)) / max(np.linalg.norm(qs), 1e-300))
                        if P.shape[1] else 0.0)
        # remove rounding drift along earlier columns before splitting, so a
        # block that only carries drift is caught as degenerate
        qd = BlockVector(sizes, q.data.copy())
        for s in range(len(sizes)):
            P = state.basis(s)
            if P.shape[1]:
                b = qd.block(s)
                b -= P @ (P.T @ b)
        try:
            _, ps = split_normalize(qd)
        except ViewDegeneracyError as exc:
            if degeneracy == "raise":
                raise
            ps = _degenerate_columns(qd, base, state, exc.view)
        for s, p in enumerate(ps):
            P = state.basis(s)
            if P.shape[1]:
                p = p - P @ (P.T @ p)
                ps[s] = p / np.linalg.norm(p)
        state.append(ps)
        state.rhos.append(res.rho)
        state.results.append(res)
        state.feasibility.append(feas)
    return ProjectionSet(
        [state.basis(s) for s in range(len(sizes))],
        eigenvalues=np.array(state.rhos),
        converged=[r.converged for r in state.results],
        diagnostics=[_diag(r, f) for r, f in zip(state.results, state.feasibility)])


def _degenerate_columns(q: BlockVector, base: Pencil, state: DeflationState, first_bad: int):
    if base.psi is None:
        raise ValueError("degeneracy fallback needs the per-view Psi blocks on the pencil")
    tau = 1e-10 * np.linalg.norm(q.data)
    ps = []
    for s, qs in enumerate(q.blocks()):
        g = np.linalg.norm(qs)
        if g > tau:
            ps.append(qs / g)
        else:
            warnings.warn(f"view {s}: vanishing eigenvector block, using fallback column",
                          RuntimeWarning, stacklevel=3)
            ps.append(_fallback_column(base.psi[s], state.basis(s)))
    return ps


def _diag(res: EigResult, feas) -> dict:
    return {
        "rho": res.rho,
        "residual": res.residual,
        "iters": res.iters,
        "converged": res.converged,
        "seed": res.seed,
        "feasibility": list(feas),
    }


def relaxed_objective(q, phi_grid) -> float:
    """``sum_s sum_t q_s^T Phi_st q_t``; ``None`` grid entries are zero blocks."""
    blocks = q.blocks() if isinstance(q, BlockVector) else list(q)
    v = len(phi_grid)
    if len(blocks) != v:
        raise ValueError(f"grid has {v} views but q has {len(blocks)} blocks")
    total = 0.0
    for s in range(v):
        for t in range(v):
            if phi_grid[s][t] is not None:
                total += float(blocks[s] @ phi_grid[s][t].matvec(blocks[t]))
    return total


def trace_ratio_objective(P, phi_grid, psi_list) -> float:
    """Sum of ``tr(P_s^T Phi_st P_t)`` over ``sqrt(tr(P_s^T Psi_s P_s) tr(P_t^T Psi_t P_t))``."""
    mats = P.matrices if isinstance(P, ProjectionSet) else [np.asarray(M) for M in P]
    v = len(mats)
    if len(phi_grid) != v or len(psi_list) != v:
        raise ValueError("projection, Phi grid and Psi list disagree on the number of views")
    k = mats[0].shape[1]
    denom = np.empty(v)
    for s in range(v):
        tr = float(np.sum(mats[s] * psi_list[s].matmat(mats[s])))
        if not tr > 1e-14 * k:
            raise ValueError(f"trace ratio undefined: view {s} has vanishing tr(P^T Psi P) = {tr:.3e}")
        denom[s] = np.sqrt(tr)
    total = 0.0
    for s in range(v):
        for t in range(v):
            block = phi_grid[s][t]
            if block is not None:
                total += float(np.sum(mats[s] * block.matmat(mats[t]))) / (denom[s] * denom[t])
    return total
