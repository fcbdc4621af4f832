"""Seeded synthetic multi-view data with shared latent class structure."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from ..models import MultiViewDataset

__all__ = ["synth_multiview", "synth_multilabel"]


def _noise_factor(rng, d, spread):
    # random rotation with log-uniform axis scales: view-specific, anisotropic
    Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    scales = np.exp(rng.uniform(np.log(1.0 / spread), np.log(spread), size=d))
    return Q * scales


def synth_multiview(seed: int, v: int, c: int, per_class: int, dims: Sequence[int],
                    noise, latent_dim: int | None = None, spread: float = 3.0) -> MultiViewDataset:
    """Multiclass data: latent class centers mapped into each view plus noise.

    Every sample's latent point is its class center; view ``s`` observes
    ``M_s z + noise_s * L_s e`` with a random map ``M_s`` and a random
    anisotropic factor ``L_s``. ``noise`` is a scalar or one level per view.
    Samples are ordered class by class.
    """
    if min(v, c, per_class) < 1 or len(dims) != v or min(dims) < 1:
        raise ValueError("sizes must be positive and dims must have one entry per view")
    rng = np.random.default_rng(seed)
    latent_dim = c if latent_dim is None else latent_dim
    levels = np.broadcast_to(np.asarray(noise, dtype=np.float64), (v,))
    centers = 3.0 * rng.standard_normal((latent_dim, c))
    y = np.repeat(np.arange(c), per_class)
    Z = centers[:, y]
    n = y.shape[0]
    views = []
    for s, d in enumerate(dims):
        M = rng.standard_normal((d, latent_dim)) / np.sqrt(latent_dim)
        L = _noise_factor(rng, d, spread)
        views.append(M @ Z + levels[s] * (L @ rng.standard_normal((d, n))))
    return MultiViewDataset.from_class_labels(views, y, c)


def synth_multilabel(seed: int, v: int, c: int, n: int, dims: Sequence[int], noise,
                     density: float = 0.3) -> MultiViewDataset:
    """Multi-label data: label vectors drive a latent code seen through each view."""
    rng = np.random.default_rng(seed)
    Y = (rng.random((c, n)) < density).astype(np.float64)
    empty = Y.sum(axis=0) == 0
    Y[rng.integers(0, c, size=int(empty.sum())), np.flatnonzero(empty)] = 1.0
    levels = np.broadcast_to(np.asarray(noise, dtype=np.float64), (v,))
    latent = 2.0 * rng.standard_normal((c, c)) @ Y
    views = []
    for s, d in enumerate(dims):
        M = rng.standard_normal((d, c)) / np.sqrt(c)
        views.append(M @ latent + levels[s] * rng.standard_normal((d, n)))
    return MultiViewDataset(tuple(views), Y, "multilabel")
