"""Finite-difference gradient verification.

Compares an analytic gradient against central differences on float64.
Used as the independent oracle for every closed-form loss gradient in
the package.
"""

from __future__ import annotations

from typing import Callable

import numpy as np


def central_diff_grad(
    loss_fn: Callable[[np.ndarray], float], x: np.ndarray, h: float = 1e-4
) -> np.ndarray:
    """Central-difference gradient of a scalar function, coordinate by coordinate."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = grad.reshape(-1)
    xf = x.reshape(-1)
    for i in range(xf.size):
        orig = xf[i]
        xf[i] = orig + h
        up = loss_fn(x)
        xf[i] = orig - h
        down = loss_fn(x)
        xf[i] = orig
        flat[i] = (up - down) / (2.0 * h)
    return grad


def max_rel_error(a: np.ndarray, b: np.ndarray) -> float:
    """Max over coordinates of |a-b| / max(|a|, |b|, 1)."""
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1.0)
    return float(np.max(np.abs(a - b) / denom)) if a.size else 0.0


def grad_check(
    loss_fn: Callable[[np.ndarray], float],
    grad_fn: Callable[[np.ndarray], np.ndarray],
    x: np.ndarray,
    h: float = 1e-4,
) -> float:
    """Max relative error between analytic and central-difference gradients."""
    analytic = np.asarray(grad_fn(x), dtype=np.float64)
    numeric = central_diff_grad(loss_fn, np.array(x, dtype=np.float64), h=h)
    return max_rel_error(analytic, numeric)
