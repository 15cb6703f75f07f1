"""Closed-form proximal kernels used by the saddle-point solver.

Dual kernels evaluate ``prox`` of a convex conjugate at step ``sigma``;
primal kernels evaluate ``prox`` of the functional itself at step ``tau``.
Steps may be scalars or per-element vectors, which is what the diagonal
preconditioning feeds in.  Pointwise group kernels treat the input as
``groups`` stacked blocks of equal length and couple the g-th entry of
every block.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "prox_dual_clamp",
    "prox_dual_ball_pointwise",
    "prox_dual_ball_global",
    "prox_dual_quadratic",
    "prox_dual_kl",
    "prox_dual_huber",
    "prox_primal_l2_data",
    "prox_primal_l1_data",
    "prox_simplex_linear",
    "prox_primal_free",
]


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if alpha <= 0.0:
        raise ValueError(f"weight must be positive, got {alpha}")
    return alpha


def _group_view(y: np.ndarray, groups: int) -> np.ndarray:
    if groups < 1:
        raise ValueError(f"group count must be positive, got {groups}")
    if y.shape[0] % groups != 0:
        raise ValueError(
            f"vector of length {y.shape[0]} is not divisible into {groups} groups"
        )
    return y.reshape(groups, y.shape[0] // groups)


def prox_dual_clamp(y_t, sigma, alpha, b=None):
    """Conjugate prox of a weighted shifted 1-norm: clamp(y - sigma*b) to [-alpha, alpha]."""
    alpha = _check_alpha(alpha)
    y_t = np.asarray(y_t, dtype=np.float64)
    shifted = y_t - sigma * b if b is not None else y_t
    return np.clip(shifted, -alpha, alpha)


def prox_dual_ball_pointwise(y_t, alpha, groups):
    """Per-group Euclidean ball projection: q -> alpha*q / max(alpha, ||q||)."""
    alpha = _check_alpha(alpha)
    q = _group_view(np.asarray(y_t, dtype=np.float64), groups)
    norms = np.sqrt((q * q).sum(axis=0))
    scale = alpha / np.maximum(alpha, norms)
    return (q * scale).reshape(-1)


def prox_dual_ball_global(y_t, alpha):
    """Projection onto the global Euclidean ball of radius alpha."""
    alpha = _check_alpha(alpha)
    y_t = np.asarray(y_t, dtype=np.float64)
    norm = np.sqrt((y_t * y_t).sum())
    return y_t * (alpha / max(alpha, norm))


def prox_dual_quadratic(y_t, sigma, alpha, b=None):
    """Conjugate prox of a weighted shifted squared 2-norm: (y - sigma*b) / (1 + sigma/alpha)."""
    alpha = _check_alpha(alpha)
    y_t = np.asarray(y_t, dtype=np.float64)
    shifted = y_t - sigma * b if b is not None else y_t
    return shifted / (1.0 + sigma / alpha)


def prox_dual_kl(y_t, sigma, f):
    """Conjugate prox of the Kullback-Leibler data fit against f >= 0."""
    y_t = np.asarray(y_t, dtype=np.float64)
    f = np.asarray(f, dtype=np.float64)
    if f.size and f.min() < 0.0:
        raise ValueError("KL data must be nonnegative")
    root = np.sqrt((y_t - 1.0) ** 2 + 4.0 * sigma * f)
    out = (1.0 + y_t - root) / 2.0
    return np.minimum(out, 1.0)


def prox_dual_huber(y_t, sigma, alpha, epsilon, groups):
    """Conjugate prox of the per-group Huber norm: shrink by the smoothing, then project."""
    alpha = _check_alpha(alpha)
    epsilon = float(epsilon)
    if epsilon < 0.0:
        raise ValueError(f"Huber smoothing must be nonnegative, got {epsilon}")
    y_t = np.asarray(y_t, dtype=np.float64)
    scaled = y_t / (1.0 + sigma * epsilon / alpha)
    return prox_dual_ball_pointwise(scaled, alpha, groups)


def prox_primal_l2_data(x_t, tau, alpha, f):
    """Prox of (alpha/2)*||x - f||^2: averaged pull toward the data."""
    alpha = _check_alpha(alpha)
    x_t = np.asarray(x_t, dtype=np.float64)
    f = np.asarray(f, dtype=np.float64)
    return (x_t + tau * alpha * f) / (1.0 + tau * alpha)


def prox_primal_l1_data(x_t, tau, alpha, f):
    """Prox of alpha*||x - f||_1: soft shrinkage toward the data."""
    alpha = _check_alpha(alpha)
    x_t = np.asarray(x_t, dtype=np.float64)
    f = np.asarray(f, dtype=np.float64)
    z = x_t - f
    return f + np.sign(z) * np.maximum(np.abs(z) - tau * alpha, 0.0)


def prox_simplex_linear(x_t, tau, alpha, costs, labels):
    """Prox of a linear label cost restricted to the per-pixel probability simplex.

    Shifts by the cost gradient, then projects every pixel's label vector
    onto the simplex with the sort-and-threshold rule.
    """
    alpha = _check_alpha(alpha)
    x_t = np.asarray(x_t, dtype=np.float64)
    costs = np.asarray(costs, dtype=np.float64)
    if costs.shape != x_t.shape:
        raise ValueError(
            f"costs of shape {costs.shape} do not match input {x_t.shape}"
        )
    z = _group_view(x_t - tau * alpha * costs, labels)
    k = z.shape[0]
    a = -np.sort(-z, axis=0)
    lambdas = (np.cumsum(a, axis=0) - 1.0) / np.arange(1, k + 1)[:, None]
    # positivity of a - lambdas holds on a prefix; its length locates the threshold
    rho = np.count_nonzero(a > lambdas, axis=0) - 1
    theta = lambdas[rho, np.arange(z.shape[1])]
    return np.maximum(z - theta, 0.0).reshape(-1)


def prox_primal_free(x_t, tau=None):
    """Prox of the zero functional: identity."""
    return np.asarray(x_t, dtype=np.float64)
