"""Energy preselection, min-max scaling and variance-targeted PCA."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import CLASS_IDS, Dataset


def profile_energy(cells: np.ndarray) -> np.ndarray:
    return np.sum(np.asarray(cells, dtype=np.float64) ** 2, axis=-1)


def preselect_energy(dataset: Dataset, low_q: float = 0.05, high_q: float = 0.95) -> Dataset:
    """Keep profiles whose energy lies within the per-class ``[low_q, high_q]`` quantiles.

    Quantiles use linear interpolation; both bounds are inclusive.
    """
    if not 0.0 <= low_q < high_q <= 1.0:
        raise ValueError(f"need 0 <= low_q < high_q <= 1, got {low_q}, {high_q}")
    energy = profile_energy(dataset.cells)
    keep = np.zeros(len(dataset), dtype=bool)
    for c in CLASS_IDS:
        members = dataset.class_ids == c
        if not members.any():
            continue
        lo, hi = np.quantile(energy[members], [low_q, high_q])
        keep |= members & (energy >= lo) & (energy <= hi)
    return dataset.subset(np.flatnonzero(keep))


@dataclass(frozen=True)
class MinMaxStats:
    min: np.ndarray
    max: np.ndarray

    def apply(self, x: np.ndarray) -> np.ndarray:
        return apply_minmax(self, x)


def fit_minmax(train: np.ndarray) -> MinMaxStats:
    train = np.asarray(train, dtype=np.float64)
    if train.ndim != 2 or len(train) == 0:
        raise ValueError("fit_minmax needs a non-empty 2-D training matrix")
    return MinMaxStats(train.min(axis=0), train.max(axis=0))


def apply_minmax(stats: MinMaxStats, x: np.ndarray) -> np.ndarray:
    """Affine map of each cell onto [0, 1] for training data; no clipping, constant cells map to 0."""
    x = np.asarray(x, dtype=np.float64)
    span = stats.max - stats.min
    const = span <= 0
    out = (x - stats.min) / np.where(const, 1.0, span)
    return np.where(const, 0.0, out)


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray  # (d, k), orthonormal columns
    explained_variance: np.ndarray
    explained_variance_ratio: np.ndarray
    total_variance: float

    @property
    def k(self) -> int:
        return self.components.shape[1]

    def apply(self, x: np.ndarray) -> np.ndarray:
        return apply_pca(self, x)

    def inverse(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(z) @ self.components.T + self.mean


def fit_pca(train: np.ndarray, variance_target: float = 0.95) -> PcaModel:
    """PCA by SVD of the centred training matrix.

    Keeps the smallest number of components whose cumulative explained
    variance ratio reaches ``variance_target``, capped at the numerical rank.
    """
    x = np.asarray(train, dtype=np.float64)
    if x.ndim != 2 or len(x) == 0:
        raise ValueError("fit_pca needs a non-empty 2-D training matrix")
    if not 0 < variance_target <= 1:
        raise ValueError("variance_target must be in (0, 1]")
    mean = x.mean(axis=0)
    _, s, vt = np.linalg.svd(x - mean, full_matrices=False)
    var = s**2 / max(len(x) - 1, 1)
    total = float(var.sum())
    if total <= 0:
        # all samples identical: keep a single arbitrary direction
        return PcaModel(mean, vt[:1].T.copy(), var[:1], np.ones(1), 0.0)
    rank = int(np.sum(s > s[0] * max(x.shape) * np.finfo(np.float64).eps))
    ratio = var / total
    cum = np.cumsum(ratio)
    k = int(np.searchsorted(cum, variance_target - 1e-12) + 1)
    k = max(1, min(k, rank, len(s)))
    return PcaModel(mean, vt[:k].T.copy(), var[:k], ratio[:k], total)


def apply_pca(model: PcaModel, x: np.ndarray) -> np.ndarray:
    return (np.asarray(x, dtype=np.float64) - model.mean) @ model.components


class Preprocessor:
    """Train-fitted feature pipeline: ``raw``, ``minmax`` or ``minmax_pca``."""

    MODES = ("raw", "minmax", "minmax_pca")

    def __init__(self, mode: str = "raw", variance_target: float = 0.95):
        if mode not in self.MODES:
            raise ValueError(f"unknown preprocessing mode {mode!r}")
        self.mode = mode
        self.variance_target = variance_target
        self.minmax: MinMaxStats | None = None
        self.pca: PcaModel | None = None

    def fit(self, train: np.ndarray) -> "Preprocessor":
        if self.mode != "raw":
            self.minmax = fit_minmax(train)
        if self.mode == "minmax_pca":
            self.pca = fit_pca(apply_minmax(self.minmax, train), self.variance_target)
        return self

    def transform(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if self.minmax is not None:
            x = apply_minmax(self.minmax, x)
        if self.pca is not None:
            x = apply_pca(self.pca, x)
        return x
