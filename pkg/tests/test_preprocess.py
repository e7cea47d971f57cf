import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from adbench.data import N_CELLS, Dataset, make_split
from adbench.preprocess import (
    Preprocessor, apply_minmax, apply_pca, fit_minmax, fit_pca, preselect_energy, profile_energy,
)
from adbench.synth import generate_benchmark


def _energy_dataset(n_per_class=100, seed=0):
    rng = np.random.default_rng(seed)
    n = 4 * n_per_class
    cells = rng.random((n, N_CELLS)) * rng.uniform(0.1, 3.0, size=(n, 1))
    return Dataset(np.arange(n), np.repeat([0, 1, 2, 3], n_per_class), cells)


def test_preselect_identity():
    ds = _energy_dataset()
    out = preselect_energy(ds, 0.0, 1.0)
    assert np.array_equal(out.ids, ds.ids)


def test_preselect_counts_match_sort_oracle():
    ds = _energy_dataset()
    out = preselect_energy(ds, 0.05, 0.95)
    energy = profile_energy(ds.cells)
    for c in range(4):
        e = np.sort(energy[ds.class_ids == c])
        # linear-interpolation quantile at q over 100 sorted values sits at position q * 99
        lo = e[4] + 0.95 * (e[5] - e[4])
        hi = e[94] + 0.05 * (e[95] - e[94])
        expected = int(np.sum((e >= lo) & (e <= hi)))
        kept = int(np.sum(out.class_ids == c))
        assert kept == expected
        assert kept in (90, 91)


def test_preselect_drops_zero_profile():
    ds = _energy_dataset()
    cells = ds.cells.copy()
    cells[0] = 0.0
    ds = Dataset(ds.ids, ds.class_ids, cells)
    out = preselect_energy(ds, 0.05, 1.0)
    assert 0 not in set(out.ids.tolist())


def test_preselect_bad_quantiles():
    with pytest.raises(ValueError):
        preselect_energy(_energy_dataset(), 0.6, 0.4)


def test_minmax_examples():
    # per-cell training values: cell 0 takes {0, 2}, cell 1 takes {1, 4}
    stats = fit_minmax(np.array([[0.0, 2.0], [1.0, 4.0]]).T)
    assert stats.min.tolist() == [0.0, 1.0] and stats.max.tolist() == [2.0, 4.0]
    assert apply_minmax(stats, np.array([2.0, 4.0])).tolist() == [1.0, 1.0]
    assert apply_minmax(stats, stats.min).tolist() == [0.0, 0.0]
    assert apply_minmax(stats, np.array([0.0, 6.0]))[1] == pytest.approx(5 / 3)


def test_minmax_constant_cell_maps_to_zero():
    stats = fit_minmax(np.array([[1.0, 3.0], [1.0, 5.0]]))
    assert apply_minmax(stats, np.array([[7.0, 4.0]])).tolist() == [[0.0, 0.5]]


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (6, 3), elements=st.floats(-100, 100)),
       arrays(np.float64, (2, 3), elements=st.floats(-100, 100)))
def test_minmax_order_preserving_and_train_in_unit_box(train, x):
    stats = fit_minmax(train)
    t = apply_minmax(stats, train)
    assert np.all(t >= -1e-12) and np.all(t <= 1 + 1e-12)
    a, b = apply_minmax(stats, x[0]), apply_minmax(stats, x[1])
    live = stats.max > stats.min
    assert np.all(((x[0] <= x[1]) <= (a <= b + 1e-12))[live])


def test_pca_on_line():
    t = np.linspace(-1, 1, 20)
    m = fit_pca(np.c_[t, 2 * t + 1])
    assert m.k == 1
    assert m.explained_variance_ratio[0] == pytest.approx(1.0)


def test_pca_isotropic_keeps_all():
    x = np.random.default_rng(0).standard_normal((2000, 3))
    assert fit_pca(x, 0.95).k == 3


def test_pca_orthonormal_and_reconstruction_bound():
    x = np.random.default_rng(1).standard_normal((300, 10)) @ np.random.default_rng(2).standard_normal((10, 10))
    m = fit_pca(x, 0.95)
    c = m.components
    assert np.max(np.abs(c.T @ c - np.eye(m.k))) < 1e-10
    assert np.all(np.diff(m.explained_variance) <= 0)
    assert np.sum(m.explained_variance_ratio) >= 0.95 - 1e-12
    assert m.k == 1 or np.sum(m.explained_variance_ratio[:-1]) < 0.95
    err = np.sum((m.inverse(apply_pca(m, x)) - x) ** 2, axis=1).mean()
    # per-sample mean squared error uses 1/n while variances use 1/(n-1)
    assert err <= (1 - 0.95) * m.total_variance * (len(x) - 1) / len(x) + 1e-9


def test_pca_rank_cap():
    x = np.zeros((5, 4))
    x[:, 0] = np.arange(5)
    m = fit_pca(x, 1.0)
    assert m.k == 1


def test_pca_differs_per_normal_class():
    ds = generate_benchmark(60, seed=0)
    pcas = []
    for normal in (0, 3):
        split = make_split(ds, normal, seed=0)
        pcas.append(Preprocessor("minmax_pca").fit(split.train_matrix()).pca)
    assert pcas[0].mean.shape == pcas[1].mean.shape
    assert not np.allclose(pcas[0].mean, pcas[1].mean)


def test_preprocessor_modes():
    x = np.random.default_rng(3).random((50, 8))
    assert np.array_equal(Preprocessor("raw").fit(x).transform(x), x)
    mm = Preprocessor("minmax").fit(x).transform(x)
    assert mm.min() == 0.0 and mm.max() == 1.0
    z = Preprocessor("minmax_pca").fit(x).transform(x)
    assert z.shape[0] == 50 and z.shape[1] <= 8
    with pytest.raises(ValueError):
        Preprocessor("pca")
