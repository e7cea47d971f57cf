"""One-class SVM with an RBF kernel, solved by SMO on the dual.

Dual problem::

    min_a  0.5 * a^T K a   s.t.  0 <= a_i <= 1 / (nu * n),  sum(a) = 1

The decision function is ``sum_i a_i k(x_i, x) - rho``; the anomaly score is
its negation, so positive scores lie outside the learned boundary.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist


class ConvergenceError(RuntimeError):
    def __init__(self, message, violation):
        super().__init__(message)
        self.violation = violation


def rbf_kernel(a: np.ndarray, b: np.ndarray, gamma: float) -> np.ndarray:
    return np.exp(-gamma * cdist(a, b, "sqeuclidean"))


def default_gamma(x: np.ndarray) -> float:
    var = float(np.var(x))
    return 1.0 / (x.shape[1] * var) if var > 0 else 1.0


def dual_objective(alpha: np.ndarray, kernel: np.ndarray) -> float:
    return 0.5 * float(alpha @ kernel @ alpha)


def smo_solve(kernel: np.ndarray, nu: float, tol: float = 1e-4, max_iter: int = 100_000):
    """Return ``(alpha, rho, violation, n_iter)`` for a precomputed kernel matrix."""
    n = kernel.shape[0]
    c = 1.0 / (nu * n)
    alpha = np.zeros(n)
    n_full = int(np.floor(nu * n + 1e-12))
    alpha[:n_full] = c
    if n_full < n:
        alpha[n_full] = 1.0 - c * n_full
    grad = kernel @ alpha
    diag = np.diag(kernel).copy()
    eps_bound = 1e-12 * c

    violation = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        up = alpha < c - eps_bound      # may increase
        low = alpha > eps_bound         # may decrease
        g_up = np.where(up, grad, np.inf)
        i = int(np.argmin(g_up))
        g_low = np.where(low, grad, -np.inf)
        violation = float(g_low.max() - g_up[i])
        if violation <= tol:
            break
        # second-order choice of j among decreasable coordinates
        diff = grad - grad[i]
        curv = np.maximum(diag[i] + diag - 2.0 * kernel[i], 1e-12)
        gain = np.where(low & (diff > 0), diff * diff / curv, -np.inf)
        j = int(np.argmax(gain))
        t = diff[j] / curv[j]
        t = min(t, c - alpha[i], alpha[j])
        alpha[i] += t
        alpha[j] -= t
        grad += t * (kernel[i] - kernel[j])  # kernel is symmetric
    else:
        raise ConvergenceError(f"SMO did not converge in {max_iter} iterations "
                               f"(KKT violation {violation:.3g})", violation)

    free = (alpha > eps_bound) & (alpha < c - eps_bound)
    if free.any():
        rho = float(grad[free].mean())
    else:
        at_upper = alpha >= c - eps_bound
        lo = grad[at_upper].max() if at_upper.any() else -np.inf
        hi = grad[~at_upper].min() if (~at_upper).any() else np.inf
        rho = float((lo + hi) / 2) if np.isfinite(lo) and np.isfinite(hi) else float(lo if np.isfinite(lo) else hi)
    return alpha, rho, violation, it


class OneClassSVM:
    def __init__(self, nu: float = 0.1, gamma="auto", tol: float = 1e-4, max_iter: int = 100_000):
        if not 0 < nu <= 1:
            raise ValueError("nu must be in (0, 1]")
        self.nu = nu
        self.gamma = gamma
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, x: np.ndarray) -> "OneClassSVM":
        x = np.asarray(x, dtype=np.float64)
        if len(x) < 2:
            raise ValueError("OC-SVM needs at least two training points")
        self.gamma_ = default_gamma(x) if self.gamma in (None, "auto") else float(self.gamma)
        kernel = rbf_kernel(x, x, self.gamma_)
        alpha, self.rho_, self.violation_, self.n_iter_ = smo_solve(kernel, self.nu, self.tol, self.max_iter)
        self.objective_ = dual_objective(alpha, kernel)
        sv = alpha > 1e-12 / (self.nu * len(x))
        self.support_vectors_ = x[sv]
        self.dual_coef_ = alpha[sv]
        self.support_ = np.flatnonzero(sv)
        self.alpha_ = alpha
        self.n_features_ = x.shape[1]
        self.train_scores_ = self.rho_ - kernel @ alpha
        return self

    def score(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.n_features_:
            raise ValueError(f"expected {self.n_features_} features, got shape {x.shape}")
        return self.rho_ - rbf_kernel(x, self.support_vectors_, self.gamma_) @ self.dual_coef_
