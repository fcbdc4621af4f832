"""ML-kNN multi-label classifier (Bayesian rule over neighbor label counts)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .._validation import check_label_matrix, check_samples
from .neighbors import nearest_indices

__all__ = ["MLkNNModel", "mlknn_fit", "mlknn_predict", "MLkNN"]


@dataclass
class MLkNNModel:
    train: np.ndarray        # f x m
    train_Y: np.ndarray      # c x m, binary
    k_nn: int
    smoothing: float
    prior: np.ndarray        # P(label present), length c
    like_pos: np.ndarray     # c x (k_nn + 1): P(j neighbors carry r | r present)
    like_neg: np.ndarray     # c x (k_nn + 1): P(j neighbors carry r | r absent)


def mlknn_fit(train_fused, train_Y, k_nn: int = 10, smoothing: float = 1.0) -> MLkNNModel:
    X = np.asarray(train_fused, dtype=np.float64)
    Y = np.asarray(train_Y, dtype=np.float64)
    m = X.shape[1]
    if Y.shape[1] != m:
        raise ValueError(f"{m} training samples but {Y.shape[1]} label columns")
    if not 1 <= k_nn < m:
        raise ValueError(f"k_nn must satisfy 1 <= k_nn < train size ({m}), got {k_nn}")
    s = float(smoothing)
    prior = (s + Y.sum(axis=1)) / (2 * s + m)

    nn = nearest_indices(X, X, k_nn, exclude_self=True)      # m x k_nn
    counts = Y[:, nn].sum(axis=2).astype(int)                 # c x m
    c = Y.shape[0]
    pos = np.zeros((c, k_nn + 1))
    neg = np.zeros((c, k_nn + 1))
    for r in range(c):
        has = Y[r] == 1
        pos[r] = np.bincount(counts[r, has], minlength=k_nn + 1)
        neg[r] = np.bincount(counts[r, ~has], minlength=k_nn + 1)
    like_pos = (s + pos) / (s * (k_nn + 1) + pos.sum(axis=1, keepdims=True))
    like_neg = (s + neg) / (s * (k_nn + 1) + neg.sum(axis=1, keepdims=True))
    return MLkNNModel(X, Y, k_nn, s, prior, like_pos, like_neg)


def mlknn_predict(model: MLkNNModel, test_fused):
    """Return ``(scores, predictions)``, both ``c x n_test``."""
    T = np.asarray(test_fused, dtype=np.float64)
    nn = nearest_indices(model.train, T, model.k_nn)
    counts = model.train_Y[:, nn].sum(axis=2).astype(int)     # c x n_test
    rows = np.arange(counts.shape[0])[:, None]
    joint_pos = model.prior[:, None] * model.like_pos[rows, counts]
    joint_neg = (1 - model.prior)[:, None] * model.like_neg[rows, counts]
    scores = joint_pos / (joint_pos + joint_neg)
    return scores, (joint_pos > joint_neg).astype(int)


class MLkNN(ClassifierMixin, BaseEstimator):
    """Estimator wrapper; ``X`` is ``(n_samples, n_features)`` and ``Y`` is
    an ``(n_samples, n_labels)`` indicator matrix."""

    def __init__(self, k_nn=10, smoothing=1.0):
        self.k_nn = k_nn
        self.smoothing = smoothing

    def fit(self, X, Y):
        X = check_samples(X)
        Y = check_label_matrix(Y, X.shape[0])
        self.model_ = mlknn_fit(X.T, Y.T, self.k_nn, self.smoothing)
        self.n_features_in_ = X.shape[1]
        return self

    def predict_proba(self, X):
        check_is_fitted(self)
        scores, _ = mlknn_predict(self.model_, check_samples(X).T)
        return scores.T

    def predict(self, X):
        check_is_fitted(self)
        _, pred = mlknn_predict(self.model_, check_samples(X).T)
        return pred.T
