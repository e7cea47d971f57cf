import json

import numpy as np
import pytest

from adbench.deep import hypersphere_loss, reconstruction_loss
from adbench.nn import (
    Conv1D, Dense, LeakyReLU, MaxPool1D, NonFiniteError, OptimizerState, Reshape, Sequential,
    TransposeConv1D, Upsample1D, frobenius_grad, frobenius_penalty, load_params, make_autoencoder,
    make_encoder, save_params, sgd_step,
)
from adbench.nn.checkpoint import dump_params, load_params_dict

EPS = 1e-5
TOL = 1e-4


def _rel_err(num, ana):
    return np.abs(num - ana) / np.maximum(np.abs(num) + np.abs(ana), 1e-7)


def _numeric_grad(f, arr):
    g = np.zeros_like(arr)
    it = np.nditer(arr, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        old = arr[idx]
        arr[idx] = old + EPS
        fp = f()
        arr[idx] = old - EPS
        fm = f()
        arr[idx] = old
        g[idx] = (fp - fm) / (2 * EPS)
    return g


def check_gradients(net, x, loss_and_grad, extra=None):
    """Compare analytic parameter and input gradients with central differences."""
    params = net.init_params(np.random.default_rng(0))
    x = np.array(x, dtype=np.float64)

    def total():
        out = net.forward(params, x)
        loss = loss_and_grad(out)[0]
        return loss + (extra[0](params) if extra else 0.0)

    out, caches = net.forward(params, x, keep_cache=True)
    _, gout = loss_and_grad(out)
    gx, grads = net.backward(params, caches, gout)
    if extra:
        grads = [g + e for g, e in zip(grads, extra[1](params))]
    worst = 0.0
    for p, g in zip(params, grads):
        worst = max(worst, float(_rel_err(_numeric_grad(total, p), g).max()))
    worst = max(worst, float(_rel_err(_numeric_grad(total, x), gx.reshape(x.shape)).max()))
    return worst


def _weighted_sum(shape, seed=1):
    r = np.random.default_rng(seed).standard_normal(shape)

    def f(out):
        return float(np.sum(r * out)), r.copy()
    return f


LAYER_CASES = [
    ("conv", [Conv1D(3, 3)], (2, 9)),
    ("conv_stride_pad_bias", [Conv1D(3, 3, stride=2, padding=1, bias=True)], (2, 9)),
    ("transpose_conv", [TransposeConv1D(2, 3, stride=2, padding=1, bias=True)], (3, 5)),
    ("leaky_relu", [LeakyReLU(0.1)], (2, 7)),
    ("maxpool2", [MaxPool1D(2)], (2, 8)),
    ("maxpool3", [MaxPool1D(3)], (2, 9)),
    ("upsample", [Upsample1D(3)], (2, 4)),
    ("dense", [Dense(4)], (6,)),
    ("dense_bias_from_signal", [Dense(4, bias=True)], (2, 5)),
    ("reshape", [Reshape((2, 3)), Conv1D(2, 3, padding=1), Reshape((6,))], (6,)),
]


@pytest.mark.parametrize("name, layers, shape", LAYER_CASES, ids=[c[0] for c in LAYER_CASES])
def test_layer_gradients(name, layers, shape):
    net = Sequential(layers, shape, np.float64)
    x = np.random.default_rng(2).standard_normal((3,) + shape)
    assert check_gradients(net, x, _weighted_sum((3,) + net.output_shape)) < TOL


def _tiny_encoder():
    return make_encoder(16, np.float64, latent_dim=4, channels=(2, 2))


def test_tiny_encoder_weighted_sum_gradient():
    x = np.random.default_rng(3).random((3, 16))
    assert check_gradients(_tiny_encoder(), x, _weighted_sum((3, 4))) < TOL


def test_autoencoder_reconstruction_gradient():
    net = make_autoencoder(16, np.float64, latent_dim=4, channels=(2, 2))
    x = np.random.default_rng(4).random((3, 16))
    lam = 1e-2
    extra = (lambda p: frobenius_penalty(p, lam), lambda p: frobenius_grad(p, lam))
    assert check_gradients(net, x, lambda out: reconstruction_loss(out, x), extra) < TOL


def test_deep_svdd_objective_gradient():
    net = _tiny_encoder()
    x = np.random.default_rng(5).random((3, 16))
    center = np.random.default_rng(6).standard_normal(4) * 0.1
    semi = np.zeros(3, dtype=int)
    lam = 1e-2
    extra = (lambda p: frobenius_penalty(p, lam), lambda p: frobenius_grad(p, lam))
    assert check_gradients(net, x, lambda z: hypersphere_loss(z, center, semi, 0.0), extra) < TOL


def test_deep_sad_objective_gradient():
    net = _tiny_encoder()
    x = np.random.default_rng(7).random((6, 16))
    center = np.random.default_rng(8).standard_normal(4) * 0.1
    semi = np.array([0, 0, 0, 0, -1, -1])
    assert check_gradients(net, x, lambda z: hypersphere_loss(z, center, semi, 1.0)) < TOL


def test_sad_loss_reduces_to_svdd():
    z = np.random.default_rng(9).standard_normal((5, 4))
    c = np.zeros(4)
    semi = np.zeros(5, dtype=int)
    sad, g_sad = hypersphere_loss(z, c, semi, eta=1.0)
    svdd, g_svdd = hypersphere_loss(z, c, semi, eta=0.0)
    assert abs(sad - svdd) < 1e-12 and np.array_equal(g_sad, g_svdd)
    assert sad == pytest.approx(np.mean(np.sum(z**2, axis=1)))


def test_labeled_term_inverse_square_law():
    c = np.zeros(2)
    semi = np.array([-1])
    near, _ = hypersphere_loss(np.array([[1.0, 0.0]]), c, semi, eta=1.0, eps=0.0)
    far, _ = hypersphere_loss(np.array([[2.0, 0.0]]), c, semi, eta=1.0, eps=0.0)
    assert near == 1.0 and far == 0.25
    guarded, g = hypersphere_loss(np.zeros((1, 2)), c, semi, eta=1.0)
    assert np.isfinite(guarded) and np.all(np.isfinite(g))


def test_zero_input_gives_zero_latent():
    net = make_encoder()
    params = net.init_params(np.random.default_rng(0))
    assert np.all(net.forward(params, np.zeros((2, 200))) == 0)


def test_leaky_relu_values():
    y, _ = LeakyReLU(0.01).forward([], np.array([[[-1.0, 2.0]]]))
    assert y.ravel().tolist() == pytest.approx([-0.01, 2.0])


def test_batch_independence():
    net = make_autoencoder(dtype=np.float64)
    params = net.init_params(np.random.default_rng(1))
    x = np.random.default_rng(2).random((2, 200))
    both = net.forward(params, x)
    single = np.concatenate([net.forward(params, x[:1]), net.forward(params, x[1:])])
    assert np.max(np.abs(both - single)) < 1e-12
    assert np.array_equal(net.forward(params, x), both)


def test_zero_output_gradient_gives_zero_param_grads():
    net = _tiny_encoder()
    params = net.init_params(np.random.default_rng(0))
    out, caches = net.forward(params, np.random.default_rng(1).random((3, 16)), keep_cache=True)
    _, grads = net.backward(params, caches, np.zeros_like(out))
    assert all(np.all(g == 0) for g in grads)


def test_frobenius_grad_exact():
    w = [np.random.default_rng(0).standard_normal((3, 4))]
    assert np.array_equal(frobenius_grad(w, 1e-3)[0], w[0] * 1e-3)
    assert frobenius_penalty(w, 2.0) == pytest.approx(np.sum(w[0] ** 2))


def test_default_parameter_counts():
    enc, ae = make_encoder(), make_autoencoder()
    assert enc.n_params() == 8 * 1 * 5 + 4 * 8 * 5 + 32 * 4 * 50 == 6600
    assert ae.n_params() == 6600 + 200 * 32 + 8 * 4 * 5 + 1 * 8 * 5 == 13200
    assert enc.output_shape == (32,) and ae.output_shape == (200,)
    assert [tuple(s) for s in enc.param_shapes()] == [(8, 1, 5), (4, 8, 5), (32, 200)]


def test_shape_mismatch():
    net = make_encoder()
    with pytest.raises(ValueError):
        net.forward(net.init_params(np.random.default_rng(0)), np.zeros((2, 150)))


def test_optimizer_zero_gradient_keeps_params():
    p = [np.array([1.0, -2.0])]
    for method in ("adam", "sgd"):
        state = OptimizerState(weight_decay=0.0, method=method)
        assert np.array_equal(sgd_step(state, p, [np.zeros(2)])[0], p[0])


def test_sgd_hand_step():
    state = OptimizerState(learning_rate=0.1, weight_decay=0.0, method="sgd")
    w = [np.array([1.0])]
    assert sgd_step(state, w, [2 * w[0]])[0][0] == pytest.approx(0.8)


def test_weight_decay_modes():
    w = [np.array([2.0])]
    coupled = sgd_step(OptimizerState(0.1, 0.5, method="sgd"), w, [np.zeros(1)])[0]
    assert coupled[0] == pytest.approx(2.0 - 0.1 * 0.5 * 2.0)
    decoupled = sgd_step(OptimizerState(0.1, 0.5, method="sgd", decoupled=True), w, [np.zeros(1)])[0]
    assert decoupled[0] == pytest.approx(2.0 - 0.1 * 0.5 * 2.0)


def test_nonfinite_step_raises():
    with pytest.raises(NonFiniteError):
        sgd_step(OptimizerState(method="sgd"), [np.ones(2)], [np.array([np.nan, 0.0])])


def test_training_loss_decreases():
    net = _tiny_encoder()
    params = net.init_params(np.random.default_rng(0))
    x = np.random.default_rng(1).random((8, 16))
    c = net.forward(params, x).mean(axis=0)
    state = OptimizerState(learning_rate=1e-2)
    semi = np.zeros(8, dtype=int)
    losses = []
    for _ in range(50):
        z, caches = net.forward(params, x, keep_cache=True)
        loss, g = hypersphere_loss(z, c, semi)
        losses.append(loss)
        params = sgd_step(state, params, net.backward(params, caches, g)[1])
    assert losses[-1] < losses[0]


def test_checkpoint_round_trip(tmp_path):
    net = make_autoencoder()
    params = net.init_params(np.random.default_rng(3))
    path = tmp_path / "w.json"
    save_params(path, params, meta={"arch": "default"})
    back = load_params(path)
    assert all(a.dtype == b.dtype and a.tobytes() == b.tobytes() for a, b in zip(params, back))
    doc = json.loads(path.read_text())
    assert doc["tensors"][0]["dtype"] == "<f4" and doc["tensors"][0]["shape"] == [8, 1, 5]
    w64 = [np.arange(3.0)]
    assert np.array_equal(load_params_dict(dump_params(w64))[0], w64[0])
    with pytest.raises(ValueError):
        load_params_dict({"format": "other"})
