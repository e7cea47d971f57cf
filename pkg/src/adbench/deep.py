"""Convolutional autoencoder, Deep SVDD and Deep SAD detectors."""

from __future__ import annotations

import math
import warnings

import numpy as np

from .data import RngStream
from .nn.network import Sequential, make_autoencoder, make_encoder
from .nn.optim import NonFiniteError, OptimizerState, frobenius_penalty, sgd_step

DEFAULT_ARCH = {"latent_dim": 32, "channels": (8, 4), "kernel_size": 5, "slope": 0.1, "bias": False}
SAD_EPS = 1e-6


def _as_stream(rng, name) -> RngStream:
    return rng if isinstance(rng, RngStream) else RngStream(int(rng), (name,))


def batch_plan(n_unlabeled: int, n_labeled: int, batch_size: int, rng: RngStream, epoch: int):
    """Split shuffled unlabeled and labeled indices into the same number of batches.

    Every batch receives a proportional share of both pools, so the labeled
    term is estimated on every step.
    """
    n_batches = max(1, math.ceil((n_unlabeled + n_labeled) / batch_size))
    perm_u = rng.child("shuffle", epoch, "unlabeled").generator().permutation(n_unlabeled)
    if n_labeled:
        perm_l = rng.child("shuffle", epoch, "labeled").generator().permutation(n_labeled)
    else:
        perm_l = np.empty(0, dtype=np.int64)
    return list(zip(np.array_split(perm_u, n_batches), np.array_split(perm_l, n_batches)))


def hypersphere_loss(z, center, semi, eta: float = 1.0, eps: float = SAD_EPS):
    """Deep SAD data term on a batch and its gradient with respect to ``z``.

    Unlabeled rows (``semi == 0``) contribute ``||z - c||^2``; labeled anomalies
    (``semi == -1``) contribute ``eta / (||z - c||^2 + eps)``. The sum is divided
    by the batch size. With no labeled rows this is the Deep SVDD term.
    """
    diff = np.asarray(z, dtype=np.float64) - center
    d2 = np.sum(diff * diff, axis=1)
    unl = np.asarray(semi) == 0
    n = len(d2)
    inv = 1.0 / (d2 + eps)
    terms = np.where(unl, d2, eta * inv)
    coef = np.where(unl, 1.0, -eta * inv * inv)
    loss = float(terms.sum() / n)
    grad = (2.0 / n) * coef[:, None] * diff
    return loss, grad


def reconstruction_loss(xhat, x):
    diff = np.asarray(xhat, dtype=np.float64) - np.asarray(x, dtype=np.float64)
    n = len(diff)
    return float(np.sum(diff * diff) / n), (2.0 / n) * diff


def _train(net: Sequential, params, x, semi, loss_fn, epochs, state: OptimizerState, rng: RngStream,
           objective_fn, trajectory: list | None = None):
    n_lab = int(np.sum(semi != 0))
    unl_rows = np.flatnonzero(semi == 0)
    lab_rows = np.flatnonzero(semi != 0)
    objective_start = objective_fn(params)
    history = []
    for epoch in range(epochs):
        total, count = 0.0, 0
        for b, (iu, il) in enumerate(batch_plan(unl_rows.size, n_lab, state.batch_size, rng, epoch)):
            rows = np.concatenate([unl_rows[iu], lab_rows[il]])
            out, caches = net.forward(params, x[rows], keep_cache=True)
            loss, g = loss_fn(out, rows)
            if not math.isfinite(loss):
                raise NonFiniteError(f"non-finite loss at epoch {epoch}, batch {b}")
            total += loss * len(rows)
            count += len(rows)
            _, grads = net.backward(params, caches, g)
            try:
                params = sgd_step(state, params, grads)
            except NonFiniteError as exc:
                raise NonFiniteError(f"epoch {epoch}, batch {b}: {exc}") from None
            if trajectory is not None:
                trajectory.append([p.copy() for p in params])
        history.append(total / max(count, 1))
    return params, history, objective_start, objective_fn(params)


def _forward_batched(net, params, x, chunk=1024):
    x = np.asarray(x, dtype=net.dtype)
    if len(x) == 0:
        return np.empty((0,) + net.output_shape, dtype=net.dtype)
    return np.concatenate([net.forward(params, x[i:i + chunk]) for i in range(0, len(x), chunk)])


class ConvAutoencoder:
    """Anomaly score: squared reconstruction error ``||x - x_hat||^2``."""

    def __init__(self, epochs: int = 10, batch_size: int = 128, lr: float = 1e-3,
                 weight_decay: float = 1e-6, arch: dict | None = None, rng=0, dtype=np.float32,
                 n_cells: int = 200):
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr = lr
        self.weight_decay = weight_decay
        self.arch = {**DEFAULT_ARCH, **(arch or {})}
        self.rng = _as_stream(rng, "cae")
        self.dtype = np.dtype(dtype)
        self.net = make_autoencoder(n_cells, self.dtype, **self.arch)
        self.encoder = make_encoder(n_cells, self.dtype, **self.arch)

    def objective(self, params, x) -> float:
        xhat = _forward_batched(self.net, params, x)
        return reconstruction_loss(xhat, x)[0] + frobenius_penalty(params, self.weight_decay)

    def fit(self, x) -> "ConvAutoencoder":
        x = np.asarray(x, dtype=self.dtype)
        params = self.net.init_params(self.rng.child("init").generator())
        state = OptimizerState(self.lr, self.weight_decay, self.batch_size)
        semi = np.zeros(len(x), dtype=np.int64)
        self.params_, self.history_, self.objective_start_, self.objective_end_ = _train(
            self.net, params, x, semi, lambda out, rows: reconstruction_loss(out, x[rows]),
            self.epochs, state, self.rng, lambda p: self.objective(p, x))
        return self

    def reconstruct(self, x):
        return _forward_batched(self.net, self.params_, x)

    def score(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        diff = self.reconstruct(x).astype(np.float64) - x
        return np.sum(diff * diff, axis=1)

    def encoder_params(self) -> list[np.ndarray]:
        return [p.copy() for p in self.params_[:self.encoder.n_tensors]]


def init_center(encoder: Sequential, params, x) -> np.ndarray:
    """Mean embedding of the training data under the given (initial) weights."""
    z = _forward_batched(encoder, params, x)
    return np.mean(z, axis=0, dtype=np.float64)


class DeepSVDD:
    """One-class hypersphere embedding; score ``||phi(x) - c||^2``.

    ``pretrained`` may be a fitted :class:`ConvAutoencoder` (its encoder weights
    are copied) or a parameter list for the encoder.
    """

    def __init__(self, epochs: int = 20, batch_size: int = 128, lr: float = 1e-3,
                 weight_decay: float = 1e-6, arch: dict | None = None, rng=0, dtype=np.float32,
                 pretrained=None, n_cells: int = 200, record_trajectory: bool = False):
        self.epochs = epochs
        self.record_trajectory = record_trajectory
        self.batch_size = batch_size
        self.lr = lr
        self.weight_decay = weight_decay
        self.arch = {**DEFAULT_ARCH, **(arch or {})}
        self.rng = _as_stream(rng, "hypersphere")
        self.dtype = np.dtype(dtype)
        self.pretrained = pretrained
        self.net = make_encoder(n_cells, self.dtype, **self.arch)

    eta = 0.0
    eps = SAD_EPS

    def _initial_params(self):
        if self.pretrained is None:
            return self.net.init_params(self.rng.child("init").generator())
        src = self.pretrained.encoder_params() if isinstance(self.pretrained, ConvAutoencoder) else self.pretrained
        shapes = self.net.param_shapes()
        if [tuple(p.shape) for p in src] != [tuple(s) for s in shapes]:
            raise ValueError("pretrained encoder shapes do not match this network")
        return [np.array(p, dtype=self.dtype) for p in src]

    def objective(self, params, x, semi=None) -> float:
        semi = np.zeros(len(x), dtype=np.int64) if semi is None else semi
        z = _forward_batched(self.net, params, x)
        return hypersphere_loss(z, self.center_, semi, self.eta, self.eps)[0] + \
            frobenius_penalty(params, self.weight_decay)

    def _fit(self, x, semi):
        x = np.asarray(x, dtype=self.dtype)
        params = self._initial_params()
        self.initial_params_ = [p.copy() for p in params]
        self.center_ = init_center(self.net, params, x[semi == 0])
        self.center_.setflags(write=False)
        state = OptimizerState(self.lr, self.weight_decay, self.batch_size)
        self.trajectory_ = [] if self.record_trajectory else None

        def loss_fn(out, rows):
            return hypersphere_loss(out, self.center_, semi[rows], self.eta, self.eps)

        self.params_, self.history_, self.objective_start_, self.objective_end_ = _train(self.net, params, x, semi, loss_fn, self.epochs, state,
                                             self.rng, lambda p: self.objective(p, x, semi),
                                             self.trajectory_)
        dist = self.score(x[semi == 0])
        self.mean_train_distance_ = float(dist.mean()) if dist.size else 0.0
        if self.mean_train_distance_ < 1e-8:
            warnings.warn("hypersphere collapse suspected: mean training distance to the center "
                          f"is {self.mean_train_distance_:.3g}", RuntimeWarning, stacklevel=3)
        return self

    def fit(self, x) -> "DeepSVDD":
        return self._fit(x, np.zeros(len(x), dtype=np.int64))

    def embed(self, x):
        return _forward_batched(self.net, self.params_, x)

    def score(self, x) -> np.ndarray:
        diff = self.embed(x).astype(np.float64) - self.center_
        return np.sum(diff * diff, axis=1)


class DeepSAD(DeepSVDD):
    """Deep SVDD with an inverse-distance term pushing labeled anomalies away from ``c``."""

    def __init__(self, eta: float = 1.0, eps: float = SAD_EPS, **kw):
        super().__init__(**kw)
        self.eta = eta
        self.eps = eps

    def fit(self, x, semi=None) -> "DeepSAD":
        semi = np.zeros(len(x), dtype=np.int64) if semi is None else np.asarray(semi, dtype=np.int64)
        if semi.shape != (len(x),):
            raise ValueError("semi labels must align with x")
        if not np.all(np.isin(semi, (0, -1))):
            raise ValueError("semi labels must be 0 (unlabeled) or -1 (labeled anomaly)")
        if not np.any(semi == 0):
            raise ValueError("Deep SAD needs unlabeled training samples")
        return self._fit(x, semi)
