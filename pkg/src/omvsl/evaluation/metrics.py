"""Multi-label ranking and classification metrics.

All matrices are ``c x n`` (labels by instances). Label ranks are 1-based,
descending by score, ties broken by label index.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

__all__ = ["MetricsReport", "multilabel_metrics", "label_ranks", "accuracy", "METRIC_DIRECTIONS"]

# +1: larger is better, -1: smaller is better
METRIC_DIRECTIONS = {
    "hamming_loss": -1,
    "ranking_loss": -1,
    "one_error": -1,
    "coverage": -1,
    "average_precision": 1,
}


@dataclass(frozen=True)
class MetricsReport:
    hamming_loss: float
    ranking_loss: float
    one_error: float
    coverage: float
    average_precision: float

    directions = METRIC_DIRECTIONS

    def as_dict(self) -> dict:
        return asdict(self)


def label_ranks(scores: np.ndarray) -> np.ndarray:
    """1-based rank of every label per instance (column)."""
    order = np.argsort(-scores, axis=0, kind="stable")
    ranks = np.empty_like(order)
    cols = np.arange(scores.shape[1])
    ranks[order, cols[None, :]] = np.arange(1, scores.shape[0] + 1)[:, None]
    return ranks


def accuracy(pred, truth) -> float:
    pred, truth = np.asarray(pred), np.asarray(truth)
    if pred.shape != truth.shape:
        raise ValueError("prediction and truth shapes differ")
    return float(np.mean(pred == truth))


def multilabel_metrics(scores, predictions, truth) -> MetricsReport:
    scores = np.asarray(scores, dtype=np.float64)
    predictions = np.asarray(predictions)
    truth = np.asarray(truth)
    if not (scores.shape == predictions.shape == truth.shape) or scores.ndim != 2:
        raise ValueError("scores, predictions and truth must share a c x n shape")
    if not np.all((truth == 0) | (truth == 1)):
        raise ValueError("truth must be binary")
    truth = truth.astype(bool)
    c, n = truth.shape

    hamming = float(np.mean(predictions.astype(bool) != truth))
    ranks = label_ranks(scores)

    coverage = np.zeros(n)
    has_rel = truth.any(axis=0)
    coverage[has_rel] = np.max(np.where(truth, ranks, 0), axis=0)[has_rel] - 1

    n_rel = truth.sum(axis=0)
    valid = (n_rel > 0) & (n_rel < c)
    if not valid.any():
        return MetricsReport(hamming, 0.0, 0.0, float(coverage.mean()), 1.0)

    S, T, R = scores[:, valid], truth[:, valid], ranks[:, valid]
    top = np.argmin(R, axis=0)
    one_error = float(np.mean(~T[top, np.arange(T.shape[1])]))

    # pairwise (relevant, irrelevant) comparisons per instance
    diff = S[:, None, :] - S[None, :, :]          # [r, r', i] = s_r - s_r'
    pair = T[:, None, :] & ~T[None, :, :]         # r relevant, r' irrelevant
    bad = np.where(pair, (diff < 0) + 0.5 * (diff == 0), 0.0).sum(axis=(0, 1))
    ranking_loss = float(np.mean(bad / (n_rel[valid] * (c - n_rel[valid]))))

    # precision at the rank of each relevant label
    above = T[None, :, :] & (R[None, :, :] <= R[:, None, :])   # [r, r', i]
    prec = above.sum(axis=1) / R
    ap = np.where(T, prec, 0.0).sum(axis=0) / n_rel[valid]
    return MetricsReport(hamming, ranking_loss, one_error, float(coverage.mean()),
                         float(np.mean(ap)))
