import numpy as np
import pytest

from adbench.data import RngStream, make_split
from adbench.deep import ConvAutoencoder, DeepSAD, DeepSVDD, batch_plan, hypersphere_loss, init_center
from adbench.nn import Dense, NonFiniteError, OptimizerState, Sequential, load_params, save_params, sgd_step
from adbench.preprocess import Preprocessor
from adbench.synth import generate_benchmark

SMALL = dict(batch_size=32, arch={"latent_dim": 8, "channels": (4, 2)})


@pytest.fixture(scope="module")
def bench_split():
    ds = generate_benchmark(150, seed=1)
    split = make_split(ds, 1, seed=0)
    pp = Preprocessor("minmax").fit(split.train_matrix())
    return pp.transform(split.train_matrix()), pp.transform(split.test_matrix()), split.test_labels


def test_cae_trains_and_scores(bench_split):
    xtr, xte, y = bench_split
    cae = ConvAutoencoder(epochs=3, rng=RngStream(0, ("cae",)), **SMALL).fit(xtr)
    assert cae.reconstruct(xte).shape == xte.shape
    assert cae.objective_end_ < cae.objective_start_
    s = cae.score(xte)
    assert np.all(s >= 0)
    assert np.median(s[y == 1]) > np.median(s[y == 0])


def test_cae_zero_input_zero_score():
    cae = ConvAutoencoder(epochs=1, **SMALL).fit(np.random.default_rng(0).random((40, 200)))
    assert cae.score(np.zeros((1, 200)))[0] == 0.0


def test_init_center_examples():
    net = Sequential([Dense(4)], (3,), np.float64)
    params = net.init_params(np.random.default_rng(0))
    x = np.array([[0.3, -1.0, 2.0]])
    assert np.array_equal(init_center(net, params, x), net.forward(params, x)[0])
    assert np.all(init_center(net, params, np.r_[x, -x]) == 0)
    xs = np.random.default_rng(1).random((50, 3))
    perm = np.random.default_rng(2).permutation(50)
    assert np.max(np.abs(init_center(net, params, xs) - init_center(net, params, xs[perm]))) < 1e-12


def test_dsvdd_training_and_center(bench_split):
    xtr, xte, y = bench_split
    m = DeepSVDD(epochs=4, rng=RngStream(0, ("h",)), **SMALL).fit(xtr)
    assert m.objective_end_ < m.objective_start_
    assert not m.center_.flags.writeable
    c0 = init_center(m.net, m.initial_params_, xtr)
    assert c0.tobytes() == m.center_.tobytes()
    s = m.score(xte)
    assert np.all(s >= 0) and np.array_equal(s, m.score(xte))
    assert s[y == 1].mean() > s[y == 0].mean()


def test_dsvdd_score_zero_at_center():
    x0 = np.random.default_rng(0).random((1, 200))
    m = DeepSVDD(epochs=1, **SMALL).fit(x0)
    m.params_ = m.initial_params_
    assert m.score(x0)[0] == pytest.approx(0.0, abs=1e-12)


def test_single_point_distance_decreases():
    # fitted on its own, a single point defines the center and sits at distance 0
    x0 = np.random.default_rng(1).random((1, 200))
    with pytest.warns(RuntimeWarning, match="collapse"):
        m = DeepSVDD(epochs=3, weight_decay=0.0, record_trajectory=True, **SMALL).fit(x0)
    assert m.mean_train_distance_ == 0.0
    # against an offset center the same loss contracts the embedding step by step
    net, params = m.net, m.initial_params_
    center = net.forward(params, x0)[0].astype(np.float64) + 0.5
    state = OptimizerState(learning_rate=1e-3, weight_decay=0.0, method="sgd")
    dist = []
    for _ in range(10):
        z, caches = net.forward(params, x0, keep_cache=True)
        loss, g = hypersphere_loss(z, center, np.zeros(1, dtype=int))
        dist.append(loss)
        params = sgd_step(state, params, net.backward(params, caches, g)[1])
    assert np.all(np.diff(dist) < 0)


def test_pretrained_transfer_exact(bench_split, tmp_path):
    xtr, _, _ = bench_split
    cae = ConvAutoencoder(epochs=1, rng=3, **SMALL).fit(xtr)
    m = DeepSVDD(epochs=1, pretrained=cae, **SMALL).fit(xtr)
    assert all(a.tobytes() == b.tobytes() for a, b in zip(m.initial_params_, cae.encoder_params()))
    path = tmp_path / "enc.json"
    save_params(path, cae.encoder_params())
    m2 = DeepSVDD(epochs=1, pretrained=load_params(path), **SMALL).fit(xtr)
    assert all(a.tobytes() == b.tobytes() for a, b in zip(m2.initial_params_, m.initial_params_))
    assert np.array_equal(m2.score(xtr), m.score(xtr))


def test_pretrained_shape_mismatch():
    with pytest.raises(ValueError):
        DeepSVDD(epochs=1, pretrained=[np.zeros((2, 2))], **SMALL).fit(np.random.default_rng(0).random((10, 200)))


def test_sad_without_labels_matches_svdd_trajectory(bench_split):
    xtr, _, _ = bench_split
    kw = dict(epochs=2, record_trajectory=True, rng=RngStream(4, ("h",)), **SMALL)
    a = DeepSVDD(**kw).fit(xtr)
    b = DeepSAD(eta=1.0, **kw).fit(xtr, np.zeros(len(xtr), dtype=int))
    assert len(a.trajectory_) == len(b.trajectory_)
    for pa, pb in zip(a.trajectory_, b.trajectory_):
        assert all(u.tobytes() == v.tobytes() for u, v in zip(pa, pb))
    assert a.history_ == b.history_


def test_sad_pushes_labeled_away(bench_split):
    ds = generate_benchmark(150, seed=1)
    split = make_split(ds, 0, labeled_anomaly_class=2, labeled_ratio=0.1, seed=0)
    pp = Preprocessor("minmax").fit(split.train_matrix()[split.semi_labels() == 0])
    x, semi = pp.transform(split.train_matrix()), split.semi_labels()
    m = DeepSAD(eta=1.0, epochs=4, rng=5, **SMALL).fit(x, semi)
    d = m.score(x)
    assert d[semi == -1].mean() > d[semi == 0].mean()


def test_sad_label_validation():
    x = np.random.default_rng(0).random((10, 200))
    with pytest.raises(ValueError):
        DeepSAD(**SMALL).fit(x, np.ones(10))
    with pytest.raises(ValueError):
        DeepSAD(**SMALL).fit(x, np.zeros(9))
    with pytest.raises(ValueError):
        DeepSAD(**SMALL).fit(x, -np.ones(10))


def test_batch_plan_mixes_proportionally():
    plan = batch_plan(100, 10, 32, RngStream(0), epoch=0)
    assert len(plan) == 4
    assert sorted(np.concatenate([u for u, _ in plan]).tolist()) == list(range(100))
    assert sorted(np.concatenate([lab for _, lab in plan]).tolist()) == list(range(10))
    assert all(len(lab) in (2, 3) for _, lab in plan)


def test_divergence_reports_epoch():
    x = np.random.default_rng(0).random((64, 200))
    with pytest.raises(NonFiniteError, match="epoch"), np.errstate(all="ignore"):
        ConvAutoencoder(epochs=3, lr=1e37, **SMALL).fit(x)


def test_collapse_warning():
    with pytest.warns(RuntimeWarning, match="collapse"):
        DeepSVDD(epochs=1, **SMALL).fit(np.zeros((20, 200)))
