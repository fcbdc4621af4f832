"""Dataset statistics as matrix-free operators, and the model registry.

Views are ``d_s x n`` (samples as columns); labels are ``c x n``. The
registry turns a :class:`ModelSpec` into a :class:`~omvsl.eigsolve.Pencil`
whose ``A`` is the full block grid of ``Phi`` blocks and whose ``B`` is the
block diagonal of (regularized) ``Psi`` blocks.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .eigsolve import Pencil
from .linop import (
    BlockDiagonalOperator,
    BlockGridOperator,
    GramOperator,
    LinearMap,
    SymmetricOperator,
)

__all__ = [
    "LABEL_KINDS",
    "MODEL_KINDS",
    "OSAVE_KINDS",
    "GEV_KINDS",
    "MultiViewDataset",
    "ModelSpec",
    "LabelOperators",
    "cross_cov_block",
    "apply_Q",
    "between_scatter",
    "within_scatter",
    "mvmda_coupling",
    "hsic_block",
    "build_grids",
    "instantiate",
]

LABEL_KINDS = ("multiclass_onehot", "multilabel", "none")
OSAVE_KINDS = ("OGMA", "OMLDA", "OMVMDA", "OM2CCA", "OMCCA", "OHSIC")
GEV_KINDS = ("GEV_GMA", "GEV_MLDA", "GEV_MVMDA", "GEV_MCCA", "HSIC_GEV")
MODEL_KINDS = OSAVE_KINDS + GEV_KINDS

# ratio-trace baseline -> orthogonal model sharing its block grids
GEV_COUNTERPART = {
    "GEV_GMA": "OGMA",
    "GEV_MLDA": "OMLDA",
    "GEV_MVMDA": "OMVMDA",
    "GEV_MCCA": "OM2CCA",
    "HSIC_GEV": "OHSIC",
}
_NEEDS_ONEHOT = {"OGMA", "OMLDA", "OMVMDA"}
_NEEDS_LABELS = {"OHSIC", "HSIC_GEV", "OM2CCA"}
_ZERO_DIAGONAL = {"OMCCA", "OM2CCA"}
_IGNORES_ALPHA = {"OMVMDA", "OMCCA", "OM2CCA"}


@dataclass(frozen=True, eq=False)
class MultiViewDataset:
    views: tuple
    labels: np.ndarray | None = None
    label_kind: str = "none"

    def __post_init__(self):
        views = tuple(np.ascontiguousarray(X, dtype=np.float64) for X in self.views)
        if not views:
            raise ValueError("a dataset needs at least one view")
        for s, X in enumerate(views):
            if X.ndim != 2 or 0 in X.shape:
                raise ValueError(f"view {s} must be a nonempty d x n matrix, got shape {X.shape}")
            if not np.all(np.isfinite(X)):
                raise ValueError(f"view {s} has non-finite entries")
        n = views[0].shape[1]
        for s, X in enumerate(views):
            if X.shape[1] != n:
                raise ValueError(f"view {s} has {X.shape[1]} samples, view 0 has {n}")
        object.__setattr__(self, "views", views)
        kind = self.label_kind
        if kind not in LABEL_KINDS:
            raise ValueError(f"unknown label kind {kind!r}")
        Y = self.labels
        if Y is None:
            if kind != "none":
                raise ValueError(f"label kind {kind!r} requires a label matrix")
            return
        Y = np.ascontiguousarray(Y, dtype=np.float64)
        if Y.ndim != 2 or Y.shape[1] != n:
            raise ValueError(f"labels must be c x {n}, got shape {Y.shape}")
        if kind == "none":
            raise ValueError("labels given but label kind is 'none'")
        if not np.all((Y == 0) | (Y == 1)):
            raise ValueError("label matrix entries must be 0 or 1")
        if kind == "multiclass_onehot":
            sums = Y.sum(axis=0)
            bad = np.flatnonzero(sums != 1)
            if bad.size:
                raise ValueError(
                    f"one-hot violation: sample {bad[0]} has {int(sums[bad[0]])} labels")
        object.__setattr__(self, "labels", Y)

    @property
    def n(self) -> int:
        return self.views[0].shape[1]

    @property
    def v(self) -> int:
        return len(self.views)

    @property
    def c(self) -> int:
        return 0 if self.labels is None else self.labels.shape[0]

    @property
    def dims(self) -> tuple:
        return tuple(X.shape[0] for X in self.views)

    def subset(self, idx) -> "MultiViewDataset":
        idx = np.asarray(idx)
        Y = None if self.labels is None else self.labels[:, idx]
        return MultiViewDataset(tuple(X[:, idx] for X in self.views), Y, self.label_kind)

    @classmethod
    def from_class_labels(cls, views, y, n_classes=None):
        y = np.asarray(y, dtype=int)
        c = int(y.max()) + 1 if n_classes is None else n_classes
        Y = np.zeros((c, y.shape[0]))
        Y[y, np.arange(y.shape[0])] = 1.0
        return cls(tuple(views), Y, "multiclass_onehot")


@dataclass(frozen=True)
class ModelSpec:
    kind: str = "OMLDA"
    alpha: float | np.ndarray = 1.0
    epsilon: float = 1e-8
    k: int = 10

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}; choose from {MODEL_KINDS}")
        if np.any(np.asarray(self.alpha) < 0):
            raise ValueError("alpha must be nonnegative")
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        if self.k < 1:
            raise ValueError("k must be positive")

    @property
    def base_kind(self) -> str:
        return GEV_COUNTERPART.get(self.kind, self.kind)

    @property
    def solver(self) -> str:
        return "gev" if self.kind in GEV_KINDS else "osave"

    @property
    def uses_alpha(self) -> bool:
        return self.base_kind not in _IGNORES_ALPHA


class LabelOperators:
    """Class bookkeeping for one-hot labels; classes with no samples are dropped."""

    def __init__(self, Y):
        Y = np.asarray(Y, dtype=np.float64)
        present = Y.sum(axis=1) > 0
        Y = Y[present]
        self.class_of = np.argmax(Y, axis=0)
        self.counts = np.bincount(self.class_of, minlength=Y.shape[0]).astype(np.float64)
        self.n = Y.shape[1]

    @property
    def n_classes(self) -> int:
        return self.counts.shape[0]

    def class_sums(self, z):
        return np.bincount(self.class_of, weights=z, minlength=self.n_classes)

    def apply_Q(self, x):
        """Replace every entry by the mean of ``x`` over its sample's class."""
        return (self.class_sums(x) / self.counts)[self.class_of]

    def apply_A(self, z):
        """``Y^T S^-1 H_c S^-1 Y z`` via class sums; ``S = diag(counts)``."""
        w = self.class_sums(z) / self.counts
        w = w - w.mean()
        return (w / self.counts)[self.class_of]


def apply_Q(lab: LabelOperators, x) -> np.ndarray:
    return lab.apply_Q(np.asarray(x, dtype=np.float64))


class _DataOperator(SymmetricOperator):
    """``x -> X (M (X^T x))`` for a symmetric sample-space map ``M``."""

    def __init__(self, X, sample_map, name=""):
        self.X = X
        self.sample_map = sample_map
        self.shape = (X.shape[0], X.shape[0])
        self.name = name

    def matvec(self, x):
        return self.X @ self.sample_map(self.X.T @ x)


class _DataCoupling(LinearMap):
    """``x_t -> X_s (M (X_t^T x_t))`` for symmetric ``M``."""

    def __init__(self, Xs, Xt, sample_map):
        self.Xs, self.Xt, self.sample_map = Xs, Xt, sample_map
        self.shape = (Xs.shape[0], Xt.shape[0])

    def matvec(self, x):
        return self.Xs @ self.sample_map(self.Xt.T @ x)

    def rmatvec(self, y):
        return self.Xt @ self.sample_map(self.Xs.T @ y)

    @property
    def T(self):
        return _DataCoupling(self.Xt, self.Xs, self.sample_map)


def _centered(z):
    return z - z.mean()


def _view(ds: MultiViewDataset, s: int):
    """View ``s``; index ``v`` addresses the label matrix as an extra view."""
    if s == ds.v:
        if ds.labels is None:
            raise ValueError("the label view requires labels")
        return ds.labels
    return ds.views[s]


def _label_ops(ds: MultiViewDataset) -> LabelOperators:
    if ds.label_kind != "multiclass_onehot":
        raise ValueError("this operator requires multiclass one-hot labels")
    return LabelOperators(ds.labels)


def cross_cov_block(ds: MultiViewDataset, s: int, t: int) -> GramOperator:
    """Sample cross-covariance ``(1/n) X_s H X_t^T`` as a Gram operator."""
    Xs, Xt = _view(ds, s), _view(ds, t)
    op = GramOperator(Xs, Xt, center=True, scale=1.0 / ds.n)
    return op.as_symmetric() if s == t else op


def between_scatter(ds: MultiViewDataset, s: int) -> SymmetricOperator:
    lab = _label_ops(ds)
    return _DataOperator(ds.views[s], lambda z: lab.apply_Q(z) - z.mean(), "S_b")


def within_scatter(ds: MultiViewDataset, s: int) -> SymmetricOperator:
    lab = _label_ops(ds)
    return _DataOperator(ds.views[s], lambda z: z - lab.apply_Q(z), "S_w")


def mvmda_coupling(ds: MultiViewDataset, s: int, t: int) -> LinearMap:
    lab = _label_ops(ds)
    if s == t:
        return _DataOperator(ds.views[s], lab.apply_A, "X A X^T")
    return _DataCoupling(ds.views[s], ds.views[t], lab.apply_A)


def hsic_block(ds: MultiViewDataset, s: int) -> SymmetricOperator:
    """``X_s H Y^T Y H X_s^T``; only a ``c``-vector is formed per apply."""
    if ds.labels is None:
        raise ValueError("HSIC blocks require labels")
    Y = ds.labels

    def sample_map(z):
        z = _centered(z)
        return _centered(Y.T @ (Y @ z))

    return _DataOperator(ds.views[s], sample_map, "HSIC")


class _Regularized(SymmetricOperator):
    def __init__(self, base, eps):
        self.base, self.eps = base, eps
        self.shape = base.shape

    def matvec(self, x):
        return self.base.matvec(x) + self.eps * x


def _alpha_grid(alpha, v):
    a = np.asarray(alpha, dtype=np.float64)
    if a.ndim == 0:
        return np.full((v, v), float(a))
    if a.shape != (v, v):
        raise ValueError(f"alpha grid must be {v}x{v}, got shape {a.shape}")
    if not np.allclose(a, a.T):
        raise ValueError("alpha grid must be symmetric")
    return a


def _validate(ds: MultiViewDataset, spec: ModelSpec):
    base = spec.base_kind
    if base in _NEEDS_ONEHOT and ds.label_kind != "multiclass_onehot":
        raise ValueError(f"{spec.kind} requires multiclass one-hot labels")
    if spec.kind in _NEEDS_LABELS and ds.labels is None:
        raise ValueError(f"{spec.kind} requires labels")
    # the MCCA baseline treats labels as an extra view when it has them
    label_view = spec.kind == "OM2CCA" or (spec.kind == "GEV_MCCA" and ds.labels is not None)
    if base in _ZERO_DIAGONAL and ds.v + int(label_view) < 2:
        raise ValueError(f"{spec.kind} needs at least two views")
    return label_view


def build_grids(ds: MultiViewDataset, spec: ModelSpec):
    """Return ``(phi_grid, psi_list, label_view)`` for ``spec`` without regularization."""
    label_view = _validate(ds, spec)
    base = spec.base_kind
    nv = ds.v + int(label_view)
    alpha = _alpha_grid(spec.alpha, nv)
    phi = [[None] * nv for _ in range(nv)]
    for s in range(nv):
        for t in range(s + 1, nv):
            if base == "OMVMDA":
                block = mvmda_coupling(ds, s, t)
            elif base in _ZERO_DIAGONAL:
                block = cross_cov_block(ds, s, t)
            else:
                block = alpha[s, t] * cross_cov_block(ds, s, t)
            phi[s][t] = block
            phi[t][s] = block.T
        if base in ("OGMA", "OMLDA"):
            phi[s][s] = between_scatter(ds, s)
        elif base == "OMVMDA":
            phi[s][s] = mvmda_coupling(ds, s, s)
        elif base == "OHSIC":
            phi[s][s] = hsic_block(ds, s)
    psi = []
    for s in range(nv):
        if base in ("OGMA", "OMVMDA"):
            psi.append(within_scatter(ds, s))
        else:
            psi.append(cross_cov_block(ds, s, s))
    return phi, psi, label_view


def instantiate(ds: MultiViewDataset, spec: ModelSpec):
    """Build the pencil of ``spec`` on ``ds``; returns ``(pencil, meta)``."""
    phi, psi, label_view = build_grids(ds, spec)
    sizes = [ds.views[s].shape[0] for s in range(ds.v)] + ([ds.c] if label_view else [])
    if spec.epsilon > 0:
        psi = [_Regularized(p, spec.epsilon) for p in psi]
    A = BlockGridOperator(phi, sizes=sizes, check=True)
    B = BlockDiagonalOperator(psi)
    pencil = Pencil(A, B, sizes, phi=phi, psi=psi)
    meta = {
        "kind": spec.kind,
        "solver": spec.solver,
        "block_sizes": list(sizes),
        "label_view": label_view,
        "n_input_views": ds.v,
    }
    return pencil, meta
