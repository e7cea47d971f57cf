"""Synthetic four-class range-profile generator.

Each profile is a contiguous occupied span (a low "hull" plateau plus a few
Gaussian scatterer bumps) sitting on an additive noise floor, with per-cell
log-normal speckle. Some scatterers are anchored at class-typical positions
along the span (a ship type's superstructure layout); the rest fall anywhere.
Class 1 is short and trivially separable by length; the other three are long
with overlapping extents.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import N_CELLS, Dataset, RangeProfile, RngStream


@dataclass(frozen=True)
class ClassSpec:
    extent_cells: tuple[int, int]
    n_scatterers: tuple[int, int]
    amplitude_scale: tuple[float, float]
    noise_floor: float = 0.01
    jitter_cells: int = 10
    start_cell: int = 20
    width_cells: tuple[float, float] = (1.0, 4.0)
    speckle: float = 0.25
    hull_level: float = 0.2
    # (relative position in [0, 1], relative amplitude) of anchored scatterers
    anchors: tuple = ()
    anchor_jitter: float = 0.03
    scatter_amp: tuple[float, float] = (0.3, 1.0)

    def __post_init__(self):
        lo, hi = self.extent_cells
        if not 1 <= lo <= hi <= N_CELLS:
            raise ValueError(f"bad extent range {self.extent_cells}")
        if self.start_cell + self.jitter_cells + hi > N_CELLS or self.start_cell < 0:
            raise ValueError("span can leave the 200-cell window")
        if not 1 <= self.n_scatterers[0] <= self.n_scatterers[1]:
            raise ValueError(f"bad scatterer range {self.n_scatterers}")
        a0, a1 = self.amplitude_scale
        if not 0 < a0 <= a1:
            raise ValueError(f"bad amplitude range {self.amplitude_scale}")
        w0, w1 = self.width_cells
        if not 0 < w0 <= w1:
            raise ValueError(f"bad width range {self.width_cells}")
        if self.noise_floor < 0 or self.speckle < 0 or self.jitter_cells < 0 or self.hull_level < 0:
            raise ValueError("noise_floor, speckle, jitter_cells and hull_level must be >= 0")
        if len(self.anchors) > self.n_scatterers[0]:
            raise ValueError("more anchors than the minimum scatterer count")
        for pos, amp in self.anchors:
            if not (0 <= pos <= 1 and amp > 0):
                raise ValueError(f"bad anchor {(pos, amp)}")
        s0, s1 = self.scatter_amp
        if not 0 < s0 <= s1:
            raise ValueError(f"bad scatter_amp range {self.scatter_amp}")


DEFAULT_CLASSES: dict[int, ClassSpec] = {
    # cargo-like: dominant aft superstructure plus two midship returns
    0: ClassSpec(extent_cells=(80, 130), n_scatterers=(5, 9), amplitude_scale=(0.6, 1.2),
                 anchors=((0.85, 1.0), (0.35, 0.6), (0.55, 0.6)), scatter_amp=(0.1, 0.4)),
    # fishing-like: short, one wheelhouse return
    1: ClassSpec(extent_cells=(10, 25), n_scatterers=(1, 4), amplitude_scale=(0.5, 1.0),
                 anchors=((0.3, 1.0),), scatter_amp=(0.1, 0.4)),
    # passenger-like: tall continuous hull, widest extent spread
    2: ClassSpec(extent_cells=(60, 160), n_scatterers=(3, 12), amplitude_scale=(0.4, 1.6),
                 anchors=((0.5, 0.8),), hull_level=0.45, scatter_amp=(0.1, 0.4)),
    # tanker-like: strong stern return, low deck
    3: ClassSpec(extent_cells=(100, 160), n_scatterers=(8, 14), amplitude_scale=(0.7, 1.3),
                 anchors=((0.9, 1.2), (0.1, 0.5)), hull_level=0.15, scatter_amp=(0.1, 0.4)),
}


def _generator(rng) -> np.random.Generator:
    return rng.generator() if isinstance(rng, RngStream) else rng


def generate_cells(spec: ClassSpec, rng) -> np.ndarray:
    g = _generator(rng)
    extent = int(g.integers(spec.extent_cells[0], spec.extent_cells[1] + 1))
    start = spec.start_cell + int(g.integers(0, spec.jitter_cells + 1))
    n_sc = int(g.integers(spec.n_scatterers[0], spec.n_scatterers[1] + 1))
    gain = g.uniform(*spec.amplitude_scale)

    pos = np.arange(extent, dtype=np.float64)
    centers = g.uniform(0, extent - 1, size=n_sc) if extent > 1 else np.zeros(n_sc)
    widths = g.uniform(*spec.width_cells, size=n_sc)
    amps = gain * g.uniform(*spec.scatter_amp, size=n_sc)
    n_anchor = len(spec.anchors)
    if n_anchor:
        rel = np.array([a[0] for a in spec.anchors]) + spec.anchor_jitter * g.standard_normal(n_anchor)
        centers[:n_anchor] = np.clip(rel, 0.0, 1.0) * (extent - 1)
        amps[:n_anchor] = gain * np.array([a[1] for a in spec.anchors]) * g.uniform(0.8, 1.2, size=n_anchor)
    bumps = amps[:, None] * np.exp(-0.5 * ((pos[None, :] - centers[:, None]) / widths[:, None]) ** 2)
    signal = spec.hull_level * gain + bumps.sum(axis=0)
    if spec.speckle > 0:
        signal = signal * np.exp(spec.speckle * g.standard_normal(extent) - 0.5 * spec.speckle**2)

    cells = np.zeros(N_CELLS)
    cells[start:start + extent] = signal
    if spec.noise_floor > 0:
        cells += g.uniform(0.0, 2.0 * spec.noise_floor, size=N_CELLS)
    return cells


def generate_profile(spec: ClassSpec, rng, profile_id: int = 0, class_id: int = 0) -> RangeProfile:
    return RangeProfile(profile_id, generate_cells(spec, rng), class_id)


def occupied_extent(cells: np.ndarray, threshold: float) -> int:
    """Length from the first to the last cell strictly above ``threshold`` (0 if none)."""
    above = np.flatnonzero(np.asarray(cells) > threshold)
    return 0 if above.size == 0 else int(above[-1] - above[0] + 1)


def generate_benchmark(n_per_class: int = 1000, seed: int = 0,
                       classes: dict[int, ClassSpec] | None = None) -> Dataset:
    if n_per_class < 10:
        raise ValueError("n_per_class must be >= 10")
    classes = DEFAULT_CLASSES if classes is None else classes
    root = RngStream(seed, ("synth",))
    ids, labels, rows = [], [], []
    for c in sorted(classes):
        for i in range(n_per_class):
            rows.append(generate_cells(classes[c], root.child(c, i)))
            ids.append(len(ids))
            labels.append(c)
    return Dataset(ids, labels, np.stack(rows))
