"""Scikit-learn style front end.

Inputs follow the usual sample-major convention: a list of
``(n_samples, d_s)`` arrays, one per view. Internally views are transposed
to the ``d_s x n`` layout the operators use.
"""
from __future__ import annotations

import warnings

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_views, labels_to_matrix
from .eigsolve import SolverConfig, gev_topk
from .models import ModelSpec, MultiViewDataset, instantiate
from .osave import ProjectionSet, osave, trace_ratio_objective

__all__ = ["OrthogonalMultiViewSubspace", "fit_projections"]


def fit_projections(ds: MultiViewDataset, spec: ModelSpec, config: SolverConfig,
                    degeneracy: str = "raise"):
    """Fit ``spec`` on ``ds``; returns ``(ProjectionSet, meta)``.

    ``meta`` gains the trace-ratio objective (``None`` when undefined) and,
    for models with a label view, that view's projection is kept as the last
    matrix of the set.
    """
    pencil, meta = instantiate(ds, spec)
    if spec.solver == "osave":
        P = osave(pencil, spec.k, config, degeneracy=degeneracy)
    else:
        Q, vals, results = gev_topk(pencil, spec.k, config)
        o = np.concatenate([[0], np.cumsum(pencil.block_sizes)])
        P = ProjectionSet([Q[o[s]:o[s + 1]] for s in range(len(pencil.block_sizes))],
                          orthonormal=False, eigenvalues=vals,
                          converged=[r.converged for r in results],
                          diagnostics=[{"rho": r.rho, "residual": r.residual, "iters": r.iters,
                                        "converged": r.converged, "seed": r.seed}
                                       for r in results])
    try:
        meta["objective"] = trace_ratio_objective(P, pencil.phi, pencil.psi)
    except ValueError:
        meta["objective"] = None
    return P, meta


class OrthogonalMultiViewSubspace(TransformerMixin, BaseEstimator):
    """Learn one projection per view onto a shared ``n_components``-dim space.

    Parameters
    ----------
    model : str, default="OMLDA"
        One of ``OGMA, OMLDA, OMVMDA, OM2CCA, OMCCA, OHSIC`` (orthonormal
        projections by successive deflation) or the ratio-trace baselines
        ``GEV_GMA, GEV_MLDA, GEV_MVMDA, GEV_MCCA, HSIC_GEV``.
    n_components : int, default=10
    alpha : float, default=1.0
        Weight of the cross-view covariance blocks.
    epsilon : float, default=1e-8
        Ridge added to each constraint block.
    krylov_order, tol, max_iter, guard_tol :
        Eigensolver settings.
    random_state : int, default=0
    degeneracy : {"raise", "fallback"}, default="raise"

    Attributes
    ----------
    projections_ : list of ndarray
        ``(d_s, n_components)`` per input view.
    label_projection_ : ndarray or None
        Projection of the label view for ``OM2CCA``/``GEV_MCCA``; not used
        by :meth:`transform`.
    eigenvalues_ : ndarray
    converged_ : list of bool
    objective_ : float or None
    classes_ : ndarray or None
    """

    def __init__(self, model="OMLDA", n_components=10, alpha=1.0, epsilon=1e-8,
                 krylov_order=10, tol=1e-6, max_iter=500, guard_tol=1e-12,
                 random_state=0, degeneracy="raise"):
        self.model = model
        self.n_components = n_components
        self.alpha = alpha
        self.epsilon = epsilon
        self.krylov_order = krylov_order
        self.tol = tol
        self.max_iter = max_iter
        self.guard_tol = guard_tol
        self.random_state = random_state
        self.degeneracy = degeneracy

    def _spec(self):
        spec = ModelSpec(self.model, self.alpha, self.epsilon, self.n_components)
        if not spec.uses_alpha and self.alpha != 1.0:
            warnings.warn(f"{self.model} has no alpha parameter; alpha={self.alpha} is ignored",
                          UserWarning, stacklevel=3)
        return spec

    def _config(self):
        return SolverConfig(self.krylov_order, self.tol, self.max_iter, self.guard_tol,
                            int(self.random_state or 0))

    def fit(self, Xs, y=None):
        """Fit on a list of views; ``y`` is 1-d class labels or an
        ``(n_samples, n_labels)`` indicator matrix."""
        views = check_views(Xs)
        n = views[0].shape[0]
        Y, kind, classes = labels_to_matrix(y, n)
        ds = MultiViewDataset(tuple(X.T for X in views), Y, kind)
        P, meta = fit_projections(ds, self._spec(), self._config(), self.degeneracy)
        self.projections_ = P.matrices[:ds.v]
        self.label_projection_ = P.matrices[ds.v] if len(P.matrices) > ds.v else None
        self.eigenvalues_ = P.eigenvalues
        self.converged_ = P.converged
        self.objective_ = meta["objective"]
        self.classes_ = classes
        self.n_views_ = ds.v
        self.projection_set_ = P
        return self

    def transform(self, Xs):
        """Serially fused embedding, ``(n_samples, n_views * n_components)``."""
        check_is_fitted(self)
        views = check_views(Xs, self.n_views_)
        for s, (X, P) in enumerate(zip(views, self.projections_)):
            if X.shape[1] != P.shape[0]:
                raise ValueError(f"view {s} has {X.shape[1]} features, expected {P.shape[0]}")
        return np.hstack([X @ P for X, P in zip(views, self.projections_)])

    def transform_views(self, Xs):
        """Per-view embeddings ``[(n_samples, n_components), ...]``."""
        check_is_fitted(self)
        views = check_views(Xs, self.n_views_)
        return [X @ P for X, P in zip(views, self.projections_)]
