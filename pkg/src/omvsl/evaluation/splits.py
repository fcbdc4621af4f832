from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Split", "random_splits"]


@dataclass(frozen=True)
class Split:
    train_idx: np.ndarray
    test_idx: np.ndarray
    seed: int

    def __post_init__(self):
        if len(self.train_idx) == 0 or len(self.test_idx) == 0:
            raise ValueError("train and test parts must both be nonempty")
        if np.intersect1d(self.train_idx, self.test_idx).size:
            raise ValueError("train and test indices overlap")


def random_splits(n: int, train_ratio: float, n_splits: int, seed: int) -> list[Split]:
    """Seeded random train/test partitions; split ``i`` uses seed ``seed + i``."""
    if not 0 < train_ratio < 1:
        raise ValueError("train ratio must lie strictly between 0 and 1")
    n_train = int(round(train_ratio * n))
    if not 0 < n_train < n:
        raise ValueError(f"ratio {train_ratio} leaves an empty part for n={n}")
    out = []
    for i in range(n_splits):
        perm = np.random.default_rng(seed + i).permutation(n)
        out.append(Split(np.sort(perm[:n_train]), np.sort(perm[n_train:]), seed + i))
    return out
