"""Random projection depth.

Outlyingness of ``x`` against a sample ``X`` over unit directions ``U``::

    O(x) = max_u |u.x - MED(u.X)| / MAD(u.X),    RPD(x) = 1 / (1 + O(x))

The anomaly score is ``O`` itself, a strictly increasing map of ``1 - RPD``.
"""

from __future__ import annotations

import numpy as np

from ..data import RngStream

MAD_FLOOR = 1e-12


def random_directions(p: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """``p`` directions uniform on the unit sphere in R^d, as rows."""
    u = rng.standard_normal((p, d))
    return u / np.linalg.norm(u, axis=1, keepdims=True)


class RandomProjectionDepth:
    def __init__(self, n_projections: int = 1000, rng: RngStream | int = 0, projections=None):
        if n_projections < 1:
            raise ValueError("n_projections must be >= 1")
        self.n_projections = n_projections
        self.rng = rng if isinstance(rng, RngStream) else RngStream(int(rng), ("rpd",))
        self.projections = None if projections is None else np.atleast_2d(np.asarray(projections, dtype=np.float64))

    def fit(self, x: np.ndarray) -> "RandomProjectionDepth":
        x = np.asarray(x, dtype=np.float64)
        if self.projections is not None:
            u = self.projections
        else:
            u = random_directions(self.n_projections, x.shape[1], self.rng.generator())
        proj = x @ u.T
        med = np.median(proj, axis=0)
        mad = np.median(np.abs(proj - med), axis=0)
        keep = mad >= MAD_FLOOR
        if not keep.any():
            raise ValueError("every projection has zero MAD")
        self.directions_ = u[keep]
        self.median_ = med[keep]
        self.mad_ = mad[keep]
        self.n_skipped_ = int((~keep).sum())
        return self

    def outlyingness(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.directions_.shape[1]:
            raise ValueError(f"expected {self.directions_.shape[1]} features, got shape {x.shape}")
        return np.max(np.abs(x @ self.directions_.T - self.median_) / self.mad_, axis=1)

    def depth(self, x: np.ndarray) -> np.ndarray:
        return 1.0 / (1.0 + self.outlyingness(x))

    def score(self, x: np.ndarray) -> np.ndarray:
        return self.outlyingness(x)
