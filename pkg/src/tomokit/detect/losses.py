"""Focal and smooth-L1 losses with analytic logit/delta gradients.

Conventions:

* focal loss on sigmoid probabilities, FL = -alpha_t (1 - p_t)^gamma log p_t
  with alpha_t = alpha for positives and 1 - alpha for negatives; label
  smoothing replaces the hard target y by y (1 - s) + s / 2 inside the
  cross-entropy while the modulating factor keeps the hard label.
* smooth L1 per coordinate: 0.5 x^2 / beta for |x| < beta else |x| - 0.5 beta,
  summed over the four coordinates and averaged over positive anchors.
* combined loss: focal mean over selected anchors plus box term weighted by
  1 / cls_box_ratio, so a larger ratio weights classification more.
"""

from __future__ import annotations

import numpy as np

from .assign import NEGATIVE


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def focal_loss(
    logits,
    targets,
    alpha: float = 0.25,
    gamma: float = 2.0,
    smoothing: float = 0.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-element focal loss and its gradient w.r.t. the logits.

    targets hold hard labels in {0, 1}; with smoothing s the cross-entropy
    target becomes y (1 - s) + s / 2.
    """
    z = np.asarray(logits, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    p = _sigmoid(z)
    t = y * (1.0 - smoothing) + smoothing / 2.0
    # stable log p and log(1-p): log(p) = -softplus(-z), log(1-p) = -softplus(z)
    log_p = -np.logaddexp(0.0, -z)
    log_1p = -np.logaddexp(0.0, z)
    ce = -(t * log_p + (1.0 - t) * log_1p)
    p_t = np.where(y > 0.5, p, 1.0 - p)
    alpha_t = np.where(y > 0.5, alpha, 1.0 - alpha)
    weight = (1.0 - p_t) ** gamma
    loss = alpha_t * weight * ce

    dce = p - t
    # d(1-p_t)/dz = -(2y-1) p (1-p); the modulating term vanishes in the
    # limit p_t -> 1 even for gamma < 1, so guard the 0^(gamma-1) rounding
    one_minus = 1.0 - p_t
    base = np.where(one_minus > 0.0, one_minus, 1.0) ** (gamma - 1.0)
    dweight = np.where(
        one_minus > 0.0, -gamma * base * (2.0 * y - 1.0) * p * (1.0 - p), 0.0
    )
    grad = alpha_t * (dweight * ce + weight * dce)
    return loss, grad


def smooth_l1(pred, target, beta: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Per-element smooth L1 loss and gradient w.r.t. pred."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    x = pred - target
    small = np.abs(x) < beta
    loss = np.where(small, 0.5 * x * x / beta, np.abs(x) - 0.5 * beta)
    grad = np.where(small, x / beta, np.sign(x))
    return loss, grad


def detection_loss(
    cls_logits: np.ndarray,
    box_deltas: np.ndarray,
    labels: np.ndarray,
    target_deltas: np.ndarray,
    alpha: float = 0.25,
    gamma: float = 2.0,
    smoothing: float = 0.0,
    beta: float = 1.0,
    cls_box_ratio: float = 1.0,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Combined per-slice objective.

    labels follow assign_anchors (-2 ignore, -1 negative, >= 0 positive
    gt index); target_deltas give the encoded regression target per anchor
    (only rows with labels >= 0 are read).  Returns (total loss,
    dloss/dlogits, dloss/ddeltas).
    """
    cls_logits = np.asarray(cls_logits, dtype=np.float64)
    box_deltas = np.asarray(box_deltas, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    selected = labels >= NEGATIVE
    positive = labels >= 0
    grad_logits = np.zeros_like(cls_logits)
    grad_deltas = np.zeros_like(box_deltas)
    total = 0.0

    n_sel = int(selected.sum())
    if n_sel:
        y = positive[selected].astype(np.float64)
        losses, grads = focal_loss(cls_logits[selected], y, alpha, gamma, smoothing)
        total += float(losses.mean())
        grad_logits[selected] = grads / n_sel

    n_pos = int(positive.sum())
    if n_pos:
        losses, grads = smooth_l1(
            box_deltas[positive], np.asarray(target_deltas, dtype=np.float64)[positive], beta
        )
        box_weight = 1.0 / cls_box_ratio
        total += box_weight * float(losses.sum(axis=1).mean())
        grad_deltas[positive] = box_weight * grads / n_pos
    return total, grad_logits, grad_deltas
