import numpy as np
import pytest

from adbench.data import RngStream
from adbench.metrics import roc_auc
from adbench.synth import DEFAULT_CLASSES, ClassSpec, generate_benchmark, generate_profile, occupied_extent

BENCH = generate_benchmark(300, seed=5)


def _extents(ds, c, threshold=0.06):
    return np.array([occupied_extent(x, threshold) for x in ds.cells[ds.class_ids == c]])


def test_benchmark_shape():
    ds = generate_benchmark(100, seed=3)
    assert len(ds) == 400
    assert ds.class_counts() == {0: 100, 1: 100, 2: 100, 3: 100}
    assert np.all(ds.cells >= 0)


def test_benchmark_deterministic():
    a, b = generate_benchmark(20, seed=9), generate_benchmark(20, seed=9)
    assert a.cells.tobytes() == b.cells.tobytes()
    assert not np.array_equal(a.cells, generate_benchmark(20, seed=10).cells)


def test_small_benchmark_rejected():
    with pytest.raises(ValueError):
        generate_benchmark(9)


@pytest.mark.parametrize("kw", [
    dict(extent_cells=(20, 10)), dict(extent_cells=(10, 250)), dict(n_scatterers=(0, 2)),
    dict(amplitude_scale=(0.0, 1.0)), dict(noise_floor=-1.0),
    dict(anchors=((0.5, 1.0), (0.2, 1.0))), dict(anchors=((1.5, 1.0),)), dict(scatter_amp=(0.5, 0.1)),
])
def test_spec_validation(kw):
    base = dict(extent_cells=(10, 15), n_scatterers=(1, 3), amplitude_scale=(0.5, 1.0))
    with pytest.raises(ValueError):
        ClassSpec(**{**base, **kw})


def test_extent_and_floor():
    spec = ClassSpec(extent_cells=(10, 15), n_scatterers=(1, 3), amplitude_scale=(0.5, 1.0))
    for i in range(50):
        rng = RngStream(1, ("t", i)).generator()
        g = RngStream(1, ("t", i)).generator()
        # replay the draws to learn the span placed by the generator
        extent = int(g.integers(10, 16))
        start = spec.start_cell + int(g.integers(0, spec.jitter_cells + 1))
        cells = generate_profile(spec, rng).cells
        assert 10 <= extent <= 15
        outside = np.r_[cells[:start], cells[start + extent:]]
        assert outside.max() <= 3 * spec.noise_floor
        assert 10 <= occupied_extent(cells, 3 * spec.noise_floor) <= 15


def test_single_scatterer_single_peak():
    spec = ClassSpec(extent_cells=(10, 15), n_scatterers=(1, 1), amplitude_scale=(0.5, 1.0),
                     noise_floor=0.0, speckle=0.0)
    for i in range(30):
        x = generate_profile(spec, RngStream(2, ("p", i))).cells
        interior = (x[1:-1] > x[:-2]) & (x[1:-1] >= x[2:]) & (x[1:-1] > 0)
        assert int(interior.sum()) == 1


def test_distinct_streams_differ():
    spec = DEFAULT_CLASSES[0]
    a = generate_profile(spec, RngStream(0, ("s", 1))).cells
    b = generate_profile(spec, RngStream(0, ("s", 2))).cells
    assert np.any(a != b)


def test_class_extent_ordering():
    means = {c: _extents(BENCH, c).mean() for c in range(4)}
    assert means[1] < min(means[0], means[2], means[3])
    stds = {c: _extents(BENCH, c).std() for c in range(4)}
    assert stds[2] > stds[0] and stds[2] > stds[3]


def test_length_classifier_separates_short_class():
    ext = np.array([occupied_extent(x, 0.06) for x in BENCH.cells])
    labels = (BENCH.class_ids == 1).astype(int)
    assert roc_auc(-ext, labels) > 0.95


def test_anchor_sets_peak_position():
    spec = ClassSpec(extent_cells=(100, 100), n_scatterers=(1, 1), amplitude_scale=(1.0, 1.0),
                     noise_floor=0.0, speckle=0.0, hull_level=0.0, jitter_cells=0,
                     anchors=((0.75, 1.0),), anchor_jitter=0.0)
    for i in range(10):
        x = generate_profile(spec, RngStream(3, ("a", i))).cells
        assert int(np.argmax(x)) == spec.start_cell + round(0.75 * 99)


def test_anchor_amplitude_relative_to_gain():
    spec = ClassSpec(extent_cells=(60, 60), n_scatterers=(1, 1), amplitude_scale=(2.0, 2.0),
                     noise_floor=0.0, speckle=0.0, hull_level=0.0, width_cells=(1.0, 1.0),
                     anchors=((0.5, 0.5),), anchor_jitter=0.0)
    peaks = [generate_profile(spec, RngStream(4, ("b", i))).cells.max() for i in range(20)]
    # gain 2 times relative amplitude 0.5 times U(0.8, 1.2), sampled off-center by at most half a cell
    assert all(2.0 * 0.5 * 0.8 * np.exp(-0.125) <= p <= 2.0 * 0.5 * 1.2 for p in peaks)
