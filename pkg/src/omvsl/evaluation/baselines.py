"""Projection-and-fusion and the PCA baselines."""
from __future__ import annotations

import numpy as np

__all__ = ["project_fuse", "pca_project", "pca_concat"]


def project_fuse(P, ds, idx=None) -> np.ndarray:
    """Serial fusion: stack ``P_s^T x_i^(s)`` over views for the selected samples.

    ``P`` is a :class:`~omvsl.osave.ProjectionSet` or a list of matrices; a
    label-view projection beyond the dataset's views is ignored.
    """
    mats = P.matrices if hasattr(P, "matrices") else list(P)
    if len(mats) < ds.v:
        raise ValueError(f"{len(mats)} projections for {ds.v} views")
    mats = mats[:ds.v]
    idx = np.arange(ds.n) if idx is None else np.asarray(idx)
    if idx.size and (idx.min() < -ds.n or idx.max() >= ds.n):
        raise IndexError(f"sample index out of range for n={ds.n}")
    for s, (M, X) in enumerate(zip(mats, ds.views)):
        if M.shape[0] != X.shape[0]:
            raise ValueError(f"view {s}: projection has {M.shape[0]} rows, view has {X.shape[0]}")
    return np.vstack([M.T @ X[:, idx] for M, X in zip(mats, ds.views)])


def pca_project(X, k: int, tol: float = 1e-10):
    """Top-``k`` principal directions of ``X`` (``d x n``).

    Returns ``(components, projected)`` with ``components`` ``d x k``
    orthonormal in variance-descending order and ``projected = components.T @ X``.
    """
    X = np.asarray(X, dtype=np.float64)
    d, n = X.shape
    if not 1 <= k <= d:
        raise ValueError(f"k must satisfy 1 <= k <= {d}, got {k}")
    Xc = X - X.mean(axis=1, keepdims=True)
    vals, vecs = np.linalg.eigh(Xc @ Xc.T / n)
    vals, vecs = vals[::-1], vecs[:, ::-1]
    rank = int(np.sum(vals > tol * max(vals[0], np.finfo(float).tiny)))
    if k > rank:
        raise ValueError(f"k={k} exceeds the covariance rank {rank}")
    comps = vecs[:, :k]
    # deterministic signs: largest-magnitude entry positive
    flip = comps[np.argmax(np.abs(comps), axis=0), np.arange(k)] < 0
    comps[:, flip] *= -1
    return comps, comps.T @ X


def pca_concat(ds, train_idx, k: int):
    """Per-view PCA fitted on the training samples; the fused features use
    the same serial concatenation as the learned projections."""
    comps = [pca_project(X[:, train_idx], k)[0] for X in ds.views]
    return comps
