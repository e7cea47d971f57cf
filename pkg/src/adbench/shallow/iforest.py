"""Isolation Forest with flat-array trees."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import digamma

from ..data import RngStream

EULER_GAMMA = 0.5772156649015329


def average_path_length(n) -> np.ndarray:
    """c(n) = 2 H(n-1) - 2 (n-1) / n, the mean unsuccessful-search path in a BST; c(n<=1) = 0."""
    n = np.asarray(n, dtype=np.float64)
    safe = np.maximum(n, 2.0)
    # H(n-1) = digamma(n) + Euler gamma
    c = 2.0 * (digamma(safe) + EULER_GAMMA) - 2.0 * (safe - 1.0) / safe
    return np.where(n <= 1, 0.0, c)


def anomaly_score(mean_path, n) -> np.ndarray:
    """s(x, n) = 2 ** (-E[h(x)] / c(n))."""
    return np.power(2.0, -np.asarray(mean_path, dtype=np.float64) / average_path_length(n))


@dataclass
class IsolationTree:
    """Nodes in flat arrays; ``feature == -1`` marks a leaf holding ``size`` samples."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    size: np.ndarray
    depth: np.ndarray

    @property
    def max_depth(self) -> int:
        return int(self.depth.max())

    def path_length(self, x: np.ndarray) -> np.ndarray:
        """Depth of the reached leaf plus c(leaf size) for every row of ``x``."""
        x = np.asarray(x, dtype=np.float64)
        node = np.zeros(len(x), dtype=np.int64)
        rows = np.arange(len(x))
        active = self.feature[node] >= 0
        while active.any():
            idx = rows[active]
            nd = node[idx]
            go_left = x[idx, self.feature[nd]] < self.threshold[nd]
            node[idx] = np.where(go_left, self.left[nd], self.right[nd])
            active = self.feature[node] >= 0
        return self.depth[node] + average_path_length(self.size[node])


def build_tree(x: np.ndarray, height_limit: int, rng: np.random.Generator) -> IsolationTree:
    feature, threshold, left, right, size, depth = [], [], [], [], [], []

    def new_node(n, d):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        size.append(n)
        depth.append(d)
        return len(feature) - 1

    stack = [(np.arange(len(x)), new_node(len(x), 0))]
    while stack:
        idx, node = stack.pop()
        d = depth[node]
        if idx.size <= 1 or d >= height_limit:
            continue
        sub = x[idx]
        lo, hi = sub.min(axis=0), sub.max(axis=0)
        candidates = np.flatnonzero(hi > lo)
        if candidates.size == 0:
            continue
        f = int(candidates[rng.integers(candidates.size)])
        t = float(rng.uniform(lo[f], hi[f]))
        mask = sub[:, f] < t
        li, ri = idx[mask], idx[~mask]
        feature[node], threshold[node] = f, t
        left[node] = new_node(li.size, d + 1)
        right[node] = new_node(ri.size, d + 1)
        stack.append((ri, right[node]))
        stack.append((li, left[node]))

    return IsolationTree(np.array(feature, dtype=np.int64), np.array(threshold),
                         np.array(left, dtype=np.int64), np.array(right, dtype=np.int64),
                         np.array(size, dtype=np.int64), np.array(depth, dtype=np.int64))


class IsolationForest:
    """Ensemble of isolation trees scored by ``2 ** (-E[h(x)] / c(psi))``.

    ``psi = min(subsample, n_train)`` is the number of points each tree is grown
    on. ``contamination`` only sets a binary threshold and is unused by
    :meth:`score`.
    """

    def __init__(self, n_trees: int = 100, subsample: int = 1024, contamination: float = 0.1,
                 rng: RngStream | int = 0):
        self.n_trees = n_trees
        self.subsample = subsample
        self.contamination = contamination
        self.rng = rng if isinstance(rng, RngStream) else RngStream(int(rng), ("iforest",))

    def fit(self, x: np.ndarray) -> "IsolationForest":
        x = np.asarray(x, dtype=np.float64)
        n = len(x)
        if n < 2:
            raise ValueError("Isolation Forest needs at least two training points")
        self.psi_ = min(self.subsample, n)
        self.height_limit_ = int(math.ceil(math.log2(self.psi_)))
        self.c_n_ = float(average_path_length(self.psi_))
        self.n_train_ = n
        self.n_features_ = x.shape[1]
        self.trees_ = []
        for t in range(self.n_trees):
            g = self.rng.child("tree", t).generator()
            rows = g.choice(n, size=self.psi_, replace=False)
            self.trees_.append(build_tree(x[rows], self.height_limit_, g))
        return self

    def mean_path_length(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.n_features_:
            raise ValueError(f"expected {self.n_features_} features, got shape {x.shape}")
        total = np.zeros(len(x))
        for tree in self.trees_:
            total += tree.path_length(x)
        return total / len(self.trees_)

    def score(self, x: np.ndarray) -> np.ndarray:
        return anomaly_score(self.mean_path_length(x), self.psi_)
