"""Gradient-based optimisers and the Frobenius weight penalty."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class NonFiniteError(FloatingPointError):
    """A parameter or loss became NaN or infinite during training."""


def frobenius_penalty(params, weight_decay: float) -> float:
    """``weight_decay / 2 * sum_l ||W_l||_F^2``."""
    return 0.5 * weight_decay * float(sum(np.sum(np.asarray(p, dtype=np.float64) ** 2) for p in params))


def frobenius_grad(params, weight_decay: float) -> list[np.ndarray]:
    return [p * p.dtype.type(weight_decay) for p in params]


@dataclass
class OptimizerState:
    """Adam (default) or plain SGD.

    With ``decoupled=False`` the weight decay enters as the gradient of the
    Frobenius penalty (``grad + weight_decay * W``); with ``decoupled=True`` it
    shrinks weights directly after the adaptive step.
    """

    learning_rate: float = 1e-3
    weight_decay: float = 1e-6
    batch_size: int = 128
    method: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    decoupled: bool = False
    t: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    def __post_init__(self):
        if self.method not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.method!r}")


def sgd_step(state: OptimizerState, params, grads) -> list[np.ndarray]:
    """Apply one update and return the new parameter list (inputs are not modified)."""
    if len(params) != len(grads):
        raise ValueError("params and grads differ in length")
    for p, g in zip(params, grads):
        if p.shape != g.shape:
            raise ValueError(f"gradient shape {g.shape} does not match parameter {p.shape}")
    lr, wd = state.learning_rate, state.weight_decay
    if wd and not state.decoupled:
        grads = [g + d for g, d in zip(grads, frobenius_grad(params, wd))]

    if state.method == "sgd":
        new = [p - p.dtype.type(lr) * g for p, g in zip(params, grads)]
    else:
        if not state.m:
            state.m = [np.zeros_like(p) for p in params]
            state.v = [np.zeros_like(p) for p in params]
        state.t += 1
        b1, b2 = state.beta1, state.beta2
        corr1 = 1.0 - b1**state.t
        corr2 = 1.0 - b2**state.t
        step = lr * np.sqrt(corr2) / corr1
        new = []
        for i, (p, g) in enumerate(zip(params, grads)):
            dt = p.dtype.type
            state.m[i] = dt(b1) * state.m[i] + dt(1 - b1) * g
            state.v[i] = dt(b2) * state.v[i] + dt(1 - b2) * g * g
            new.append(p - dt(step) * state.m[i] / (np.sqrt(state.v[i]) + dt(state.eps * np.sqrt(corr2))))
    if wd and state.decoupled:
        new = [p - p.dtype.type(lr * wd) * p for p in new]

    for i, p in enumerate(new):
        if not np.all(np.isfinite(p)):
            raise NonFiniteError(f"non-finite values in parameter tensor {i} after step {state.t}")
    return new
