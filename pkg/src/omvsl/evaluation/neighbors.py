"""Brute-force Euclidean neighbors with deterministic tie-breaking."""
from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist

__all__ = ["nearest_indices", "knn1"]


def nearest_indices(train, test, k: int, exclude_self: bool = False) -> np.ndarray:
    """Indices (``n_test x k``) of the ``k`` nearest training columns.

    Ties go to the lowest training index. With ``exclude_self`` the test set
    must be the training set and each point skips itself.
    """
    train = np.asarray(train, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    if train.ndim != 2 or test.ndim != 2 or train.shape[0] != test.shape[0]:
        raise ValueError(f"feature dimension mismatch: train {train.shape}, test {test.shape}")
    if train.shape[1] == 0:
        raise ValueError("empty training set")
    dist = cdist(test.T, train.T, "sqeuclidean")
    if exclude_self:
        np.fill_diagonal(dist, np.inf)
    order = np.argsort(dist, axis=1, kind="stable")
    return order[:, :k]


def knn1(train, train_labels, test) -> np.ndarray:
    """1-nearest-neighbor labels for the columns of ``test``."""
    train_labels = np.asarray(train_labels)
    if train_labels.shape[0] != np.shape(train)[1]:
        raise ValueError("one label per training column required")
    return train_labels[nearest_indices(train, test, 1)[:, 0]]
