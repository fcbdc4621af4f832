"""Matrix-free linear maps and the symmetric-operator layer.

Every solver in the package talks to its matrices only through
``matvec``/``rmatvec``. Views are stored with samples as columns
(``d x n``), so data-backed operators apply ``X @ center(X.T @ x)``
without ever forming ``X @ X.T``.
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

__all__ = [
    "LinearMap",
    "SymmetricOperator",
    "FunctionOperator",
    "DenseMap",
    "DenseOperator",
    "ZeroMap",
    "GramOperator",
    "DeflationProjector",
    "BlockVector",
    "BlockDiagonalOperator",
    "BlockGridOperator",
    "CountingOperator",
    "center",
    "gram_apply",
    "project_out",
    "lanczos_basis",
    "block_diag_op",
    "block_full_op",
    "transpose_grid",
    "check_symmetric",
    "block_offsets",
]


def _as_vector(x, n=None):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"expected a 1-d vector, got shape {x.shape}")
    if n is not None and x.shape[0] != n:
        raise ValueError(f"dimension mismatch: expected length {n}, got {x.shape[0]}")
    return x


class LinearMap:
    """A linear map ``R^cols -> R^rows`` known only through products."""

    shape: tuple[int, int]

    def matvec(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def rmatvec(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def matmat(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] != self.shape[1]:
            raise ValueError(f"dimension mismatch: map is {self.shape}, got {X.shape}")
        out = np.empty((self.shape[0], X.shape[1]))
        for j in range(X.shape[1]):
            out[:, j] = self.matvec(X[:, j])
        return out

    @property
    def T(self) -> "LinearMap":
        return _TransposedMap(self)

    @property
    def dim(self) -> int:
        if self.shape[0] != self.shape[1]:
            raise ValueError(f"map of shape {self.shape} is not square")
        return self.shape[0]

    def __call__(self, x):
        return self.matvec(x)

    def __matmul__(self, x):
        x = np.asarray(x, dtype=np.float64)
        return self.matvec(x) if x.ndim == 1 else self.matmat(x)

    def __add__(self, other: "LinearMap") -> "LinearMap":
        if not isinstance(other, LinearMap):
            return NotImplemented
        return _SumMap([self, other])

    def __mul__(self, alpha) -> "LinearMap":
        return _ScaledMap(self, float(alpha))

    __rmul__ = __mul__

    def __repr__(self):
        return f"<{type(self).__name__} {self.shape[0]}x{self.shape[1]}>"


class _TransposedMap(LinearMap):
    def __init__(self, base: LinearMap):
        self.base = base
        self.shape = (base.shape[1], base.shape[0])

    def matvec(self, x):
        return self.base.rmatvec(x)

    def rmatvec(self, x):
        return self.base.matvec(x)

    @property
    def T(self):
        return self.base


class _ScaledMap(LinearMap):
    def __init__(self, base: LinearMap, alpha: float):
        self.base, self.alpha = base, alpha
        self.shape = base.shape

    def matvec(self, x):
        return self.alpha * self.base.matvec(x)

    def rmatvec(self, x):
        return self.alpha * self.base.rmatvec(x)


class _SumMap(LinearMap):
    def __init__(self, terms: Sequence[LinearMap]):
        shapes = {t.shape for t in terms}
        if len(shapes) != 1:
            raise ValueError(f"cannot add maps of shapes {sorted(shapes)}")
        self.terms = list(terms)
        self.shape = terms[0].shape

    def matvec(self, x):
        return sum(t.matvec(x) for t in self.terms)

    def rmatvec(self, x):
        return sum(t.rmatvec(x) for t in self.terms)


class SymmetricOperator(LinearMap):
    """Square map equal to its own transpose."""

    def rmatvec(self, x):
        return self.matvec(x)

    def apply(self, x):
        return self.matvec(x)

    @property
    def T(self):
        return self

    def __add__(self, other):
        if isinstance(other, SymmetricOperator):
            return _SymmetricSum([self, other])
        return super().__add__(other)

    def __mul__(self, alpha):
        return _SymmetricScaled(self, float(alpha))

    __rmul__ = __mul__


class _SymmetricSum(_SumMap, SymmetricOperator):
    pass


class _SymmetricScaled(_ScaledMap, SymmetricOperator):
    pass


class FunctionOperator(SymmetricOperator):
    """Symmetric operator defined by a callable ``x -> y``."""

    def __init__(self, dim: int, fn: Callable[[np.ndarray], np.ndarray], name: str = ""):
        if dim <= 0:
            raise ValueError("dimension must be positive")
        self.shape = (dim, dim)
        self._fn = fn
        self.name = name

    def matvec(self, x):
        return np.asarray(self._fn(_as_vector(x, self.shape[1])), dtype=np.float64)


class DenseMap(LinearMap):
    def __init__(self, M):
        M = np.asarray(M, dtype=np.float64)
        if M.ndim != 2 or 0 in M.shape:
            raise ValueError(f"expected a nonempty 2-d array, got shape {M.shape}")
        if not np.all(np.isfinite(M)):
            raise ValueError("matrix has non-finite entries")
        self.M = M
        self.shape = M.shape

    def matvec(self, x):
        return self.M @ _as_vector(x, self.shape[1])

    def rmatvec(self, x):
        return self.M.T @ _as_vector(x, self.shape[0])

    def matmat(self, X):
        return self.M @ X


class DenseOperator(DenseMap, SymmetricOperator):
    """Explicit symmetric matrix. Symmetry is the caller's responsibility."""

    def __init__(self, M):
        super().__init__(M)
        if self.shape[0] != self.shape[1]:
            raise ValueError(f"symmetric operator must be square, got {self.shape}")

    def rmatvec(self, x):
        return self.matvec(x)


class ZeroMap(LinearMap):
    def __init__(self, rows: int, cols: int | None = None):
        self.shape = (rows, rows if cols is None else cols)

    def matvec(self, x):
        _as_vector(x, self.shape[1])
        return np.zeros(self.shape[0])

    def rmatvec(self, x):
        _as_vector(x, self.shape[0])
        return np.zeros(self.shape[1])

    @property
    def T(self):
        return ZeroMap(self.shape[1], self.shape[0])


class _ZeroOperator(ZeroMap, SymmetricOperator):
    @property
    def T(self):
        return self


def center(x) -> np.ndarray:
    """Subtract the mean from every entry of ``x``."""
    x = _as_vector(x)
    if x.shape[0] == 0:
        raise ValueError("cannot center an empty vector")
    return x - x.mean()


class GramOperator(LinearMap):
    """``x -> scale * left @ C @ right.T @ x`` with ``C`` the centering matrix.

    ``left`` is ``d_s x m`` and ``right`` is ``d_t x m``; the product
    ``left @ right.T`` is never formed. With ``left is right`` the map is
    symmetric positive semi-definite.
    """

    def __init__(self, left, right=None, center: bool = True, scale: float = 1.0):
        left = np.asarray(left, dtype=np.float64)
        right = left if right is None else np.asarray(right, dtype=np.float64)
        if left.ndim != 2 or right.ndim != 2 or left.shape[1] != right.shape[1]:
            raise ValueError(
                f"left and right must share their column count, got {left.shape} and {right.shape}")
        if scale < 0:
            raise ValueError("scale must be nonnegative")
        self.left, self.right = left, right
        self.center = bool(center)
        self.scale = float(scale)
        self.shape = (left.shape[0], right.shape[0])

    @property
    def symmetric(self) -> bool:
        return self.left is self.right or (
            self.left.shape == self.right.shape and np.array_equal(self.left, self.right))

    def _apply(self, outer, inner, x):
        z = inner.T @ x
        if self.center:
            z = z - z.mean()
        return self.scale * (outer @ z)

    def matvec(self, x):
        return self._apply(self.left, self.right, _as_vector(x, self.shape[1]))

    def rmatvec(self, x):
        return self._apply(self.right, self.left, _as_vector(x, self.shape[0]))

    def matmat(self, X):
        Z = self.right.T @ X
        if self.center:
            Z = Z - Z.mean(axis=0)
        return self.scale * (self.left @ Z)

    @property
    def T(self):
        return GramOperator(self.right, self.left, self.center, self.scale)

    def as_symmetric(self) -> SymmetricOperator:
        if not self.symmetric:
            raise ValueError("Gram operator with distinct factors is not symmetric")
        return _SymmetricGram(self.left, None, self.center, self.scale)


class _SymmetricGram(GramOperator, SymmetricOperator):
    @property
    def T(self):
        return self


def gram_apply(op: GramOperator, x) -> np.ndarray:
    return op.matvec(x)


class DeflationProjector(SymmetricOperator):
    """Orthogonal projector ``I - P P^T`` onto the complement of ``basis``."""

    def __init__(self, basis):
        basis = np.asarray(basis, dtype=np.float64)
        if basis.ndim == 1:
            basis = basis[:, None]
        if basis.ndim != 2:
            raise ValueError("basis must be a 2-d array")
        if basis.shape[1] and np.max(np.abs(basis.T @ basis - np.eye(basis.shape[1]))) > 1e-8:
            raise ValueError("deflation basis must have orthonormal columns")
        self.basis = basis
        self.shape = (basis.shape[0], basis.shape[0])

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    def matvec(self, x):
        x = _as_vector(x, self.shape[0])
        if self.basis.shape[1] == 0:
            return x.copy()
        # keep the bracketing: never form P @ P.T
        return x - self.basis @ (self.basis.T @ x)

    def matmat(self, X):
        if self.basis.shape[1] == 0:
            return np.array(X, dtype=np.float64)
        return X - self.basis @ (self.basis.T @ X)


def project_out(proj: DeflationProjector, x) -> np.ndarray:
    return proj.matvec(x)


def block_offsets(sizes: Sequence[int]) -> np.ndarray:
    sizes = [int(s) for s in sizes]
    if not sizes or any(s <= 0 for s in sizes):
        raise ValueError(f"block sizes must be positive, got {sizes}")
    return np.concatenate([[0], np.cumsum(sizes)])


class BlockVector:
    """A vector partitioned into consecutive blocks of the given sizes."""

    def __init__(self, sizes: Sequence[int], data=None):
        self.sizes = tuple(int(s) for s in sizes)
        self.offsets = block_offsets(self.sizes)
        total = int(self.offsets[-1])
        self.data = np.zeros(total) if data is None else _as_vector(data)
        if self.data.shape[0] != total:
            raise ValueError(f"block sizes sum to {total} but data has length {self.data.shape[0]}")

    @classmethod
    def from_blocks(cls, blocks) -> "BlockVector":
        blocks = [_as_vector(b) for b in blocks]
        return cls([b.shape[0] for b in blocks], np.concatenate(blocks))

    def __len__(self):
        return len(self.sizes)

    def block(self, s: int) -> np.ndarray:
        return self.data[self.offsets[s]:self.offsets[s + 1]]

    def blocks(self) -> list[np.ndarray]:
        return [self.block(s) for s in range(len(self.sizes))]


class BlockDiagonalOperator(SymmetricOperator):
    def __init__(self, ops: Sequence[LinearMap]):
        if not ops:
            raise ValueError("need at least one block")
        self.blocks = list(ops)
        self.sizes = tuple(op.dim for op in self.blocks)
        self.offsets = block_offsets(self.sizes)
        n = int(self.offsets[-1])
        self.shape = (n, n)

    def matvec(self, x):
        x = _as_vector(x, self.shape[0])
        o = self.offsets
        return np.concatenate([op.matvec(x[o[s]:o[s + 1]]) for s, op in enumerate(self.blocks)])


def block_diag_op(ops: Sequence[LinearMap]) -> SymmetricOperator:
    if len(ops) == 1 and isinstance(ops[0], SymmetricOperator):
        return ops[0]
    return BlockDiagonalOperator(ops)


def transpose_grid(grid):
    """Fill ``None`` lower blocks of an upper-triangular grid with transposes."""
    v = len(grid)
    out = [list(row) for row in grid]
    for s in range(v):
        for t in range(s):
            if out[s][t] is None and out[t][s] is not None:
                out[s][t] = out[t][s].T
    return out


class BlockGridOperator(SymmetricOperator):
    """Full ``v x v`` block operator; block ``(s, t)`` maps view ``t`` to view ``s``.

    ``None`` entries are zero blocks.
    """

    def __init__(self, grid, sizes: Sequence[int] | None = None, check: bool = True, seed: int = 0):
        v = len(grid)
        if v == 0 or any(len(row) != v for row in grid):
            raise ValueError("block grid must be square and nonempty")
        if sizes is None:
            sizes = []
            for s in range(v):
                known = [b.shape[0] for b in grid[s] if b is not None]
                known += [grid[t][s].shape[1] for t in range(v) if grid[t][s] is not None]
                if not known:
                    raise ValueError(f"cannot infer the size of block row {s}; pass sizes")
                sizes.append(known[0])
        self.sizes = tuple(int(d) for d in sizes)
        self.offsets = block_offsets(self.sizes)
        for s in range(v):
            for t in range(v):
                b = grid[s][t]
                if b is not None and b.shape != (self.sizes[s], self.sizes[t]):
                    raise ValueError(
                        f"block ({s}, {t}) has shape {b.shape}, expected "
                        f"{(self.sizes[s], self.sizes[t])}")
        self.grid = [list(row) for row in grid]
        n = int(self.offsets[-1])
        self.shape = (n, n)
        if check:
            check_symmetric(self, n_probes=20, rtol=1e-10, seed=seed)

    def matvec(self, x):
        x = _as_vector(x, self.shape[0])
        o = self.offsets
        parts = [x[o[t]:o[t + 1]] for t in range(len(self.sizes))]
        y = np.zeros(self.shape[0])
        for s, row in enumerate(self.grid):
            ys = y[o[s]:o[s + 1]]
            for t, block in enumerate(row):
                if block is not None:
                    ys += block.matvec(parts[t])
        return y


def block_full_op(grid, sizes=None, check: bool = True) -> SymmetricOperator:
    return BlockGridOperator(grid, sizes=sizes, check=check)


def check_symmetric(op: LinearMap, n_probes: int = 20, rtol: float = 1e-10, seed: int = 0) -> None:
    """Randomized test of ``<u, op v> == <v, op u>``; raises ``ValueError``."""
    n = op.dim
    rng = np.random.default_rng(seed)
    for _ in range(n_probes):
        u = rng.standard_normal(n)
        w = rng.standard_normal(n)
        au, aw = op.matvec(u), op.matvec(w)
        scale = np.linalg.norm(u) * np.linalg.norm(w) * max(
            np.linalg.norm(au) / np.linalg.norm(u), np.linalg.norm(aw) / np.linalg.norm(w), 1e-300)
        if abs(u @ aw - w @ au) > rtol * scale:
            raise ValueError(
                f"operator failed the symmetry check: |<u,Av> - <v,Au>| = {abs(u @ aw - w @ au):.3e}")


class CountingOperator(SymmetricOperator):
    """Wraps an operator and counts vector applications (for benchmarks)."""

    def __init__(self, base: LinearMap):
        self.base = base
        self.shape = base.shape
        self.count = 0

    def matvec(self, x):
        self.count += 1
        return self.base.matvec(x)


def lanczos_basis(op, start, order: int, *, breakdown_tol: float = 1e-12,
                  return_products: bool = False):
    """Orthonormal basis of ``span{start, op start, ..., op^order start}``.

    Symmetric Lanczos with full (two-pass) reorthogonalization. The basis is
    truncated when the next residual falls below ``breakdown_tol`` times the
    largest ``||op z_j||`` seen so far, i.e. on reaching an invariant subspace.

    With ``return_products=True`` also returns the list of ``op @ z_j`` that
    were computed, aligned with the leading columns of the basis.
    """
    apply = op.matvec if hasattr(op, "matvec") else op
    start = _as_vector(start)
    if order < 0:
        raise ValueError("order must be nonnegative")
    nrm = np.linalg.norm(start)
    if nrm == 0 or not np.isfinite(nrm):
        raise ValueError("Lanczos start vector must be nonzero and finite")
    n = start.shape[0]
    Z = np.empty((n, min(order + 1, n)))
    Z[:, 0] = start / nrm
    ncol = 1
    products = []
    scale = 0.0
    for j in range(order):
        if ncol >= n:
            break
        w = np.asarray(apply(Z[:, j]), dtype=np.float64)
        products.append(w)
        scale = max(scale, np.linalg.norm(w))
        w = w - Z[:, :ncol] @ (Z[:, :ncol].T @ w)
        w = w - Z[:, :ncol] @ (Z[:, :ncol].T @ w)
        beta = np.linalg.norm(w)
        if scale == 0.0 or beta <= breakdown_tol * scale:
            break
        Z[:, ncol] = w / beta
        ncol += 1
    Z = Z[:, :ncol]
    if return_products:
        return Z, products
    return Z
