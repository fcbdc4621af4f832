"""Scaling benchmark for the successive-deflation driver on dense operators.

The leading cost of a fit is about ``2 m k n_kry d^2`` flops (``m`` solver
iterations per column), so matvec counts should grow linearly in ``k`` and
the time of one operator apply quadratically in ``d``.
"""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass

import numpy as np

from .eigsolve import Pencil, SolverConfig
from .linop import CountingOperator, DenseMap, DenseOperator, block_diag_op, block_full_op
from .models import ModelSpec, build_grids
from .evaluation.synthetic import synth_multiview
from .osave import osave

__all__ = ["BenchRow", "dense_pencil", "run_bench", "fit_exponent"]


@dataclass
class BenchRow:
    d: int
    k: int
    matvecs: int
    seconds: float
    apply_seconds: float

    def as_dict(self):
        return asdict(self)


def dense_pencil(d: int, v: int = 2, n: int = 200, seed: int = 0, epsilon: float = 1e-8) -> Pencil:
    """OMLDA-style pencil with every block assembled as a dense matrix."""
    base = d // v
    dims = [base + (1 if s < d - base * v else 0) for s in range(v)]
    ds = synth_multiview(seed, v, 4, max(n // 4, 2), dims, noise=1.0)
    phi, psi, _ = build_grids(ds, ModelSpec("OMLDA", 0.1, epsilon, 1))
    I = [np.eye(dim) for dim in dims]
    grid = [[None if b is None else DenseMap(b.matmat(I[t])) for t, b in enumerate(row)]
            for row in phi]
    psi_dense = [DenseOperator(p.matmat(I[s]) + epsilon * I[s]) for s, p in enumerate(psi)]
    return Pencil(block_full_op(grid, sizes=dims), block_diag_op(psi_dense), dims)


def _apply_time(op, d, repeats=30):
    x = np.random.default_rng(0).standard_normal(d)
    best = np.inf
    for _ in range(5):
        t = time.perf_counter()
        for _ in range(repeats):
            op.matvec(x)
        best = min(best, (time.perf_counter() - t) / repeats)
    return best


def run_bench(sizes, ks, config: SolverConfig | None = None, v: int = 2, n: int = 200,
              seed: int = 0) -> list[BenchRow]:
    config = config or SolverConfig()
    rows = []
    for d in sizes:
        pencil = dense_pencil(d, v=v, n=n, seed=seed)
        apply_s = _apply_time(pencil.A, d)
        for k in ks:
            A, B = CountingOperator(pencil.A), CountingOperator(pencil.B)
            counted = Pencil(A, B, pencil.block_sizes, check=False)
            t = time.perf_counter()
            osave(counted, k, config)
            rows.append(BenchRow(d, k, A.count + B.count, time.perf_counter() - t, apply_s))
    return rows


def fit_exponent(xs, ys) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    lx, ly = np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float))
    return float(np.polyfit(lx, ly, 1)[0])
