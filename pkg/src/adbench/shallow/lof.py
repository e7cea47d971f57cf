"""Local Outlier Factor in novelty mode (fit on train, score new queries)."""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist


def _knn(dist: np.ndarray, k: int) -> np.ndarray:
    # stable sort so equal distances resolve to the lower train index
    return np.argsort(dist, axis=1, kind="stable")[:, :k]


def _lof_from_mean_reach(mean_reach_q: np.ndarray, mean_reach_nb: np.ndarray) -> np.ndarray:
    """LOF = mean over neighbours of lrd(o) / lrd(q), written with mean reach distances.

    Zero mean reach distance means infinite density. A query inside a cluster of
    duplicates whose neighbours are duplicates too gets LOF 1.
    """
    out = np.empty(len(mean_reach_q))
    for r, (mq, mo) in enumerate(zip(mean_reach_q, mean_reach_nb)):
        degenerate = mo == 0
        if mq == 0:
            out[r] = 1.0 if degenerate.all() else 0.0
        elif degenerate.any():
            out[r] = np.inf
        else:
            out[r] = mq * np.mean(1.0 / mo)
    return out


class LocalOutlierFactor:
    def __init__(self, k: int = 48, contamination: float = 0.1):
        if k < 1:
            raise ValueError("k must be >= 1")
        self.k = k
        self.contamination = contamination  # threshold only; unused for scoring

    def fit(self, x: np.ndarray) -> "LocalOutlierFactor":
        x = np.asarray(x, dtype=np.float64)
        if len(x) <= self.k:
            raise ValueError(f"LOF needs more than k={self.k} training points, got {len(x)}")
        dist = cdist(x, x)
        np.fill_diagonal(dist, np.inf)
        nn = _knn(dist, self.k)
        nn_dist = np.take_along_axis(dist, nn, axis=1)
        self.train_ = x
        self.k_distance_ = nn_dist[:, -1]
        reach = np.maximum(nn_dist, self.k_distance_[nn])
        self.mean_reach_ = reach.mean(axis=1)
        return self

    @property
    def lrd_(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return 1.0 / self.mean_reach_

    def score(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.train_.shape[1]:
            raise ValueError(f"expected {self.train_.shape[1]} features, got shape {x.shape}")
        dist = cdist(x, self.train_)
        nn = _knn(dist, self.k)
        nn_dist = np.take_along_axis(dist, nn, axis=1)
        reach = np.maximum(nn_dist, self.k_distance_[nn])
        return _lof_from_mean_reach(reach.mean(axis=1), self.mean_reach_[nn])
