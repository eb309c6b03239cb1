"""Huber loss kernel: scalar loss, clipped derivative, per-round vector loss.

The per-round loss acts on the normalized residual z = (r - x'theta) / sigma;
its gradient in theta is -psi(z) * x / sigma where psi clips z to
[-tau, tau].  Both scalar functions also accept numpy arrays.
"""

from __future__ import annotations

import numpy as np


def _check_tau(tau):
    if not tau > 0.0:
        raise ValueError(f"robustification threshold must be positive, got {tau}")


def huber_value(x, tau):
    """Quadratic inside [-tau, tau], linear outside; continuous at the kink."""
    _check_tau(tau)
    ax = np.abs(x)
    return np.where(ax <= tau, 0.5 * x * x, tau * ax - 0.5 * tau * tau)


def huber_derivative(x, tau):
    """Derivative of huber_value: x clipped to [-tau, tau].

    Odd, 1-Lipschitz, monotone; |huber_derivative(x)| = min(|x|, tau).
    At |x| == tau both branches agree, so the clip form is unambiguous.
    """
    _check_tau(tau)
    return np.clip(x, -tau, tau)


def residual_loss_value(theta, x, reward, sigma, tau):
    """Huber loss of the normalized residual (reward - x'theta) / sigma."""
    if not sigma > 0.0:
        raise ValueError(f"normalization factor must be positive, got {sigma}")
    z = (reward - float(x @ theta)) / sigma
    return float(huber_value(z, tau))


def residual_loss_grad(theta, x, reward, sigma, tau):
    """Gradient in theta of the per-round loss: -clip(z, tau) * x / sigma.

    The gradient norm is bounded by tau * ||x|| / sigma regardless of the
    residual, which is what tames heavy-tailed rewards.
    """
    if not sigma > 0.0:
        raise ValueError(f"normalization factor must be positive, got {sigma}")
    z = (reward - float(x @ theta)) / sigma
    return (-float(huber_derivative(z, tau)) / sigma) * np.asarray(x, dtype=float)
