"""Sequential networks, parameter containers and the default LeNet-type 1-D architectures.

Default architecture (input 200 cells, latent 32, no biases)::

    layer                          output       params
    encoder  Conv1D(8, k5, pad2)   (8, 200)     40
             LeakyReLU(0.1)
             MaxPool1D(2)          (8, 100)
             Conv1D(4, k5, pad2)   (4, 100)     160
             LeakyReLU(0.1)
             MaxPool1D(2)          (4, 50)
             Dense(32)             (32,)        6400
    decoder  Dense(200)            (200,)       6400
             Reshape(4, 50)        (4, 50)
             LeakyReLU(0.1)
             Upsample1D(2)         (4, 100)
             Conv1D(8, k5, pad2)   (8, 100)     160
             LeakyReLU(0.1)
             Upsample1D(2)         (8, 200)
             Conv1D(1, k5, pad2)   (1, 200)     40
             Reshape(200)          (200,)

Encoder 6600 parameters, autoencoder 13200.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .layers import Conv1D, Dense, Layer, LeakyReLU, MaxPool1D, Reshape, Upsample1D, from_flat, to_flat

NetParams = list  # ordered list of parameter tensors, one or two per parametric layer


class Sequential:
    def __init__(self, layers: Sequence[Layer], input_shape: tuple, dtype=np.float32):
        self.layers = list(layers)
        self.input_shape = tuple(input_shape)
        self.dtype = np.dtype(dtype)
        shapes = [self.input_shape]
        for layer in self.layers:
            shapes.append(layer.out_shape(shapes[-1]))
        self.shapes = shapes
        self.output_shape = shapes[-1]
        self.n_tensors = sum(layer.n_tensors for layer in self.layers)

    def init_params(self, rng: np.random.Generator) -> NetParams:
        params = []
        for layer, shape in zip(self.layers, self.shapes):
            params.extend(layer.init(shape, rng, self.dtype))
        return params

    def _split(self, params):
        if len(params) != self.n_tensors:
            raise ValueError(f"expected {self.n_tensors} parameter tensors, got {len(params)}")
        out, i = [], 0
        for layer in self.layers:
            out.append(params[i:i + layer.n_tensors])
            i += layer.n_tensors
        return out

    def param_shapes(self) -> list[tuple]:
        return [p.shape for p in self.init_params(np.random.default_rng(0))]

    def n_params(self) -> int:
        return int(sum(int(np.prod(s)) for s in self.param_shapes()))

    def forward(self, params: NetParams, x, keep_cache: bool = False):
        """Run the batch ``x`` of shape ``(B, *input_shape)`` or ``(B, prod(input_shape))``."""
        x = np.asarray(x, dtype=self.dtype)
        want = int(np.prod(self.input_shape))
        if x.ndim < 2 or int(np.prod(x.shape[1:])) != want:
            raise ValueError(f"expected batch of width {want}, got shape {x.shape}")
        h = x.reshape(len(x), -1)
        if len(self.input_shape) == 2:
            h = from_flat(h, *self.input_shape)
        caches = []
        for layer, p in zip(self.layers, self._split(params)):
            h, cache = layer.forward(p, h)
            if keep_cache:
                caches.append(cache)
        if h.ndim == 3:
            h = to_flat(h).reshape((h.shape[1],) + self.output_shape)
        return (h, caches) if keep_cache else h

    def backward(self, params: NetParams, caches, gy):
        """Return ``(grad_input, grads)`` with ``grads`` aligned to ``params``."""
        per_layer = self._split(params)
        grads_rev = []
        g = np.asarray(gy, dtype=self.dtype).reshape(len(gy), -1)
        if len(self.output_shape) == 2:
            g = from_flat(g, *self.output_shape)
        for layer, p, cache in zip(reversed(self.layers), reversed(per_layer), reversed(caches)):
            g, gp = layer.backward(p, cache, g)
            grads_rev.append(gp)
        grads = [t for gp in reversed(grads_rev) for t in gp]
        if g.ndim == 3:
            g = to_flat(g)
        return g.reshape((len(g),) + self.input_shape), grads


def encoder_layers(latent_dim: int = 32, channels=(8, 4), kernel_size: int = 5,
                   slope: float = 0.1, bias: bool = False) -> list[Layer]:
    pad = kernel_size // 2
    layers: list[Layer] = []
    for ch in channels:
        layers += [Conv1D(ch, kernel_size, padding=pad, bias=bias), LeakyReLU(slope), MaxPool1D(2)]
    layers.append(Dense(latent_dim, bias=bias))
    return layers


def decoder_layers(n_cells: int = 200, latent_dim: int = 32, channels=(8, 4), kernel_size: int = 5,
                   slope: float = 0.1, bias: bool = False) -> list[Layer]:
    pad = kernel_size // 2
    n_pool = len(channels)
    if n_cells % (2**n_pool):
        raise ValueError(f"n_cells={n_cells} not divisible by {2**n_pool}")
    low_len = n_cells // 2**n_pool
    rev = list(reversed(channels))  # e.g. (4, 8)
    layers: list[Layer] = [Dense(rev[0] * low_len, bias=bias), Reshape((rev[0], low_len)), LeakyReLU(slope)]
    outs = rev[1:] + [1]
    for i, ch in enumerate(outs):
        layers += [Upsample1D(2), Conv1D(ch, kernel_size, padding=pad, bias=bias)]
        if i < len(outs) - 1:
            layers.append(LeakyReLU(slope))
    layers.append(Reshape((n_cells,)))
    return layers


def make_encoder(n_cells: int = 200, dtype=np.float32, **kw) -> Sequential:
    return Sequential(encoder_layers(**kw), (1, n_cells), dtype)


def make_autoencoder(n_cells: int = 200, dtype=np.float32, latent_dim: int = 32, channels=(8, 4),
                     kernel_size: int = 5, slope: float = 0.1, bias: bool = False) -> Sequential:
    enc = encoder_layers(latent_dim, channels, kernel_size, slope, bias)
    dec = decoder_layers(n_cells, latent_dim, channels, kernel_size, slope, bias)
    return Sequential(enc + dec, (1, n_cells), dtype)
