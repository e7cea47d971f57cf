"""Layer types for 1-D signals.

Signal tensors are stored channel-major, ``(channels, batch, length)``, which
keeps the im2col buffers contiguous; flat tensors are ``(batch, features)``.
:class:`~adbench.nn.network.Sequential` converts from and to the usual
batch-major layout at its boundaries.

Each layer is a frozen spec object. ``forward`` returns the output and a cache
that ``backward`` consumes to produce the input gradient and one gradient per
parameter tensor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def _uniform(rng, shape, fan_in, dtype):
    bound = 1.0 / math.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


def to_flat(x: np.ndarray) -> np.ndarray:
    """Channel-major ``(C, B, L)`` to batch-major ``(B, C * L)``."""
    c, b, length = x.shape
    return x.transpose(1, 0, 2).reshape(b, c * length)


def from_flat(x: np.ndarray, c: int, length: int) -> np.ndarray:
    return np.ascontiguousarray(x.reshape(len(x), c, length).transpose(1, 0, 2))


class Layer:
    @property
    def n_tensors(self) -> int:
        return 0

    def out_shape(self, in_shape: tuple) -> tuple:
        return in_shape

    def init(self, in_shape: tuple, rng: np.random.Generator, dtype) -> list[np.ndarray]:
        return []

    def forward(self, params, x):
        raise NotImplementedError

    def backward(self, params, cache, gy):
        raise NotImplementedError


def _shifted_cols(xp: np.ndarray, k: int, stride: int, lout: int) -> np.ndarray:
    """im2col buffer ``(C, k, B, Lout)`` with ``cols[c, j, b, l] = xp[c, b, l * stride + j]``."""
    c, b, _ = xp.shape
    cols = np.empty((c, k, b, lout), dtype=xp.dtype)
    span = stride * (lout - 1) + 1
    for j in range(k):
        cols[:, j] = xp[:, :, j:j + span:stride]
    return cols


def _scatter_cols(dcols: np.ndarray, stride: int, full_len: int) -> np.ndarray:
    """Adjoint of :func:`_shifted_cols`."""
    c, k, b, lout = dcols.shape
    out = np.zeros((c, b, full_len), dtype=dcols.dtype)
    span = stride * (lout - 1) + 1
    for j in range(k):
        out[:, :, j:j + span:stride] += dcols[:, j]
    return out


def _pad(x, p):
    return np.pad(x, ((0, 0), (0, 0), (p, p))) if p else x


@dataclass(frozen=True)
class Conv1D(Layer):
    out_channels: int
    kernel_size: int
    stride: int = 1
    padding: int = 0
    bias: bool = False

    @property
    def n_tensors(self) -> int:
        return 2 if self.bias else 1

    def out_shape(self, in_shape):
        c, length = in_shape
        lout = (length + 2 * self.padding - self.kernel_size) // self.stride + 1
        if lout < 1:
            raise ValueError(f"Conv1D output length {lout} for input {in_shape}")
        return (self.out_channels, lout)

    def init(self, in_shape, rng, dtype):
        c = in_shape[0]
        fan_in = c * self.kernel_size
        params = [_uniform(rng, (self.out_channels, c, self.kernel_size), fan_in, dtype)]
        if self.bias:
            params.append(_uniform(rng, (self.out_channels,), fan_in, dtype))
        return params

    def forward(self, params, x):
        c, b, length = x.shape
        k, s, p, o = self.kernel_size, self.stride, self.padding, self.out_channels
        lout = (length + 2 * p - k) // s + 1
        cols = _shifted_cols(_pad(x, p), k, s, lout).reshape(c * k, b * lout)
        y = (params[0].reshape(o, c * k) @ cols).reshape(o, b, lout)
        if self.bias:
            y += params[1][:, None, None]
        return y, (cols, x.shape)

    def backward(self, params, cache, gy):
        cols, (c, b, length) = cache
        k, s, p, o = self.kernel_size, self.stride, self.padding, self.out_channels
        lout = gy.shape[2]
        g2 = gy.reshape(o, b * lout)
        w2 = params[0].reshape(o, c * k)
        grads = [(g2 @ cols.T).reshape(params[0].shape)]
        if self.bias:
            grads.append(gy.sum(axis=(1, 2)))
        dcols = (w2.T @ g2).reshape(c, k, b, lout)
        dxp = _scatter_cols(dcols, s, length + 2 * p)
        return dxp[:, :, p:p + length], grads


@dataclass(frozen=True)
class TransposeConv1D(Layer):
    """Adjoint of a strided convolution; weights shaped ``(in_channels, out_channels, k)``."""

    out_channels: int
    kernel_size: int
    stride: int = 1
    padding: int = 0
    bias: bool = False

    @property
    def n_tensors(self) -> int:
        return 2 if self.bias else 1

    def out_shape(self, in_shape):
        c, length = in_shape
        lout = (length - 1) * self.stride + self.kernel_size - 2 * self.padding
        if lout < 1:
            raise ValueError(f"TransposeConv1D output length {lout} for input {in_shape}")
        return (self.out_channels, lout)

    def init(self, in_shape, rng, dtype):
        c = in_shape[0]
        fan_in = self.out_channels * self.kernel_size
        params = [_uniform(rng, (c, self.out_channels, self.kernel_size), fan_in, dtype)]
        if self.bias:
            params.append(_uniform(rng, (self.out_channels,), fan_in, dtype))
        return params

    def _wt(self, w):
        # (C, O, k) -> (O, k, C) flattened to (O * k, C)
        c, o, k = w.shape
        return w.transpose(1, 2, 0).reshape(o * k, c)

    def forward(self, params, x):
        c, b, length = x.shape
        k, s, p, o = self.kernel_size, self.stride, self.padding, self.out_channels
        t = (self._wt(params[0]) @ x.reshape(c, b * length)).reshape(o, k, b, length)
        lfull = (length - 1) * s + k
        y = _scatter_cols(t, s, lfull)[:, :, p:lfull - p]
        if self.bias:
            y = y + params[1][:, None, None]
        return np.ascontiguousarray(y), (x.reshape(c, b * length), x.shape)

    def backward(self, params, cache, gy):
        x2, (c, b, length) = cache
        k, s, p, o = self.kernel_size, self.stride, self.padding, self.out_channels
        gt = _shifted_cols(_pad(gy, p), k, s, length).reshape(o * k, b * length)
        gw = (gt @ x2.T).reshape(o, k, c).transpose(2, 0, 1)
        grads = [np.ascontiguousarray(gw)]
        if self.bias:
            grads.append(gy.sum(axis=(1, 2)))
        dx = (self._wt(params[0]).T @ gt).reshape(c, b, length)
        return dx, grads


@dataclass(frozen=True)
class LeakyReLU(Layer):
    slope: float = 0.01

    def forward(self, params, x):
        dt = x.dtype.type
        factor = (x > 0).astype(x.dtype)
        factor *= dt(1.0 - self.slope)
        factor += dt(self.slope)
        return x * factor, factor

    def backward(self, params, cache, gy):
        return gy * cache, []


@dataclass(frozen=True)
class MaxPool1D(Layer):
    """Non-overlapping max pooling; ties route the gradient to the first maximum."""

    width: int = 2

    def out_shape(self, in_shape):
        c, length = in_shape
        if length < self.width:
            raise ValueError(f"MaxPool1D width {self.width} exceeds length {length}")
        return (c, length // self.width)

    def forward(self, params, x):
        w = self.width
        lout = x.shape[2] // w
        best = x[:, :, 0:lout * w:w]
        winners = []  # winners[j-1]: offset j beat every earlier offset
        for j in range(1, w):
            cand = x[:, :, j:lout * w:w]
            better = cand > best
            winners.append(better)
            best = np.maximum(best, cand)
        return best, (winners, x.shape)

    def backward(self, params, cache, gy):
        winners, shape = cache
        w = self.width
        lout = gy.shape[2]
        dx = np.zeros(shape, dtype=gy.dtype)
        zero = gy.dtype.type(0)
        remaining = gy
        # the last offset that improved on the running max holds the maximum
        for j in range(w - 1, 0, -1):
            dx[:, :, j:lout * w:w] = np.where(winners[j - 1], remaining, zero)
            remaining = np.where(winners[j - 1], zero, remaining)
        dx[:, :, 0:lout * w:w] = remaining
        return dx, []


@dataclass(frozen=True)
class Upsample1D(Layer):
    """Nearest-neighbour upsampling along the length axis."""

    factor: int = 2

    def out_shape(self, in_shape):
        c, length = in_shape
        return (c, length * self.factor)

    def forward(self, params, x):
        return np.repeat(x, self.factor, axis=2), None

    def backward(self, params, cache, gy):
        f = self.factor
        dx = gy[:, :, 0::f].copy()
        for j in range(1, f):
            dx += gy[:, :, j::f]
        return dx, []


@dataclass(frozen=True)
class Dense(Layer):
    out_dim: int
    bias: bool = False

    @property
    def n_tensors(self) -> int:
        return 2 if self.bias else 1

    def out_shape(self, in_shape):
        return (self.out_dim,)

    def init(self, in_shape, rng, dtype):
        d = int(np.prod(in_shape))
        params = [_uniform(rng, (self.out_dim, d), d, dtype)]
        if self.bias:
            params.append(_uniform(rng, (self.out_dim,), d, dtype))
        return params

    def forward(self, params, x):
        xf = to_flat(x) if x.ndim == 3 else x
        y = xf @ params[0].T
        if self.bias:
            y = y + params[1]
        return y, (xf, x.shape)

    def backward(self, params, cache, gy):
        xf, shape = cache
        grads = [gy.T @ xf]
        if self.bias:
            grads.append(gy.sum(axis=0))
        dx = gy @ params[0]
        if len(shape) == 3:
            dx = from_flat(dx, shape[0], shape[2])
        return dx, grads


@dataclass(frozen=True)
class Reshape(Layer):
    """Reshape the per-sample shape; ``(n,)`` is flat, ``(C, L)`` a signal."""

    shape: tuple

    def out_shape(self, in_shape):
        if len(self.shape) not in (1, 2):
            raise ValueError("Reshape supports flat (n,) or signal (C, L) shapes")
        if int(np.prod(in_shape)) != int(np.prod(self.shape)):
            raise ValueError(f"cannot reshape {in_shape} to {self.shape}")
        return tuple(self.shape)

    def forward(self, params, x):
        flat = to_flat(x) if x.ndim == 3 else x
        if len(self.shape) == 2:
            return from_flat(flat, *self.shape), x.shape
        return flat.reshape((len(flat),) + tuple(self.shape)), x.shape

    def backward(self, params, cache, gy):
        flat = to_flat(gy) if gy.ndim == 3 else gy.reshape(len(gy), -1)
        if len(cache) == 3:
            return from_flat(flat, cache[0], cache[2]), []
        return flat.reshape(cache), []
