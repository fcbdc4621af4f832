"""Input validation for the estimator layer (sklearn sample-major layout)."""
from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array

__all__ = ["check_samples", "check_views", "check_label_matrix", "labels_to_matrix"]


def check_samples(X) -> np.ndarray:
    return check_array(X, dtype=np.float64, ensure_2d=True)


def check_views(Xs, n_views: int | None = None) -> list[np.ndarray]:
    """Validate a list of ``(n_samples, d_s)`` arrays sharing ``n_samples``."""
    if isinstance(Xs, np.ndarray) and Xs.ndim == 2:
        Xs = [Xs]
    Xs = [check_samples(X) for X in Xs]
    if not Xs:
        raise ValueError("need at least one view")
    n = Xs[0].shape[0]
    for s, X in enumerate(Xs):
        if X.shape[0] != n:
            raise ValueError(f"view {s} has {X.shape[0]} samples, view 0 has {n}")
    if n_views is not None and len(Xs) != n_views:
        raise ValueError(f"expected {n_views} views, got {len(Xs)}")
    return Xs


def check_label_matrix(Y, n: int) -> np.ndarray:
    Y = check_array(Y, dtype=np.float64, ensure_2d=True)
    if Y.shape[0] != n:
        raise ValueError(f"{Y.shape[0]} label rows for {n} samples")
    if not np.all((Y == 0) | (Y == 1)):
        raise ValueError("label indicator matrix must be binary")
    return Y


def labels_to_matrix(y, n: int):
    """Turn ``y`` into ``(Y c x n, kind, classes)``.

    A 1-d ``y`` holds class labels (one-hot encoded, ``classes`` keeps the
    original values); a 2-d ``y`` is a multi-label indicator matrix.
    """
    if y is None:
        return None, "none", None
    y = np.asarray(y)
    if y.ndim == 1:
        if y.shape[0] != n:
            raise ValueError(f"{y.shape[0]} labels for {n} samples")
        classes, inv = np.unique(y, return_inverse=True)
        Y = np.zeros((classes.shape[0], n))
        Y[inv, np.arange(n)] = 1.0
        return Y, "multiclass_onehot", classes
    Y = check_label_matrix(y, n)
    return Y.T.copy(), "multilabel", None
