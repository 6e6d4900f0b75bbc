"""Linear prediction head with closed-form loss gradients.

All head arithmetic runs in float64; there is no autodiff, each loss
returns its gradient explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimMismatch
from ..validation import check_matrix


@dataclass
class LinearHead:
    """y = W x + b with W of shape (out, in)."""

    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weights.ndim != 2 or self.bias.ndim != 1:
            raise DimMismatch("weights must be 2-d and bias 1-d")
        if self.weights.shape[0] != self.bias.shape[0]:
            raise DimMismatch("weights rows must match bias length")
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.bias))):
            raise ValueError("parameters must be finite")

    @property
    def n_out(self) -> int:
        return self.weights.shape[0]

    @property
    def n_in(self) -> int:
        return self.weights.shape[1]

    @classmethod
    def zeros(cls, n_out: int, n_in: int) -> "LinearHead":
        return cls(np.zeros((n_out, n_in)), np.zeros(n_out))

    @classmethod
    def seeded(cls, n_out: int, n_in: int, seed: int, scale: float | None = None) -> "LinearHead":
        rng = np.random.default_rng(seed)
        scale = scale if scale is not None else 1.0 / np.sqrt(n_in)
        return cls(rng.normal(0.0, scale, size=(n_out, n_in)), np.zeros(n_out))

    def copy(self) -> "LinearHead":
        return LinearHead(self.weights.copy(), self.bias.copy())


def forward_linear(head: LinearHead, x: np.ndarray) -> np.ndarray:
    """Logits for one sample (1-d x) or a batch (2-d x, rows = samples)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        if x.shape[0] != head.n_in:
            raise DimMismatch(f"input dim {x.shape[0]} != head dim {head.n_in}")
        return head.weights @ x + head.bias
    x = check_matrix(x, "x", cols=head.n_in)
    return x @ head.weights.T + head.bias


def softmax(logits: np.ndarray) -> np.ndarray:
    """Numerically stable softmax along the last axis."""
    z = np.asarray(logits, dtype=np.float64)
    z = z - np.max(z, axis=-1, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=-1, keepdims=True)


def softmax_ce(logits: np.ndarray, target: int) -> tuple[float, np.ndarray]:
    """Cross-entropy of one sample; returns (loss, dloss/dlogits)."""
    logits = np.asarray(logits, dtype=np.float64)
    if not 0 <= target < logits.shape[-1]:
        raise IndexError(f"target {target} out of range for {logits.shape[-1]} classes")
    z = logits - np.max(logits)
    log_norm = np.log(np.sum(np.exp(z)))
    loss = float(log_norm - z[target])
    grad = np.exp(z - log_norm)
    grad[target] -= 1.0
    return loss, grad


def softmax_ce_batch(
    logits: np.ndarray, targets: np.ndarray
) -> tuple[float, np.ndarray]:
    """Mean cross-entropy over a batch; gradient is w.r.t. the logits."""
    logits = np.asarray(logits, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.int64)
    n = logits.shape[0]
    z = logits - np.max(logits, axis=1, keepdims=True)
    log_norm = np.log(np.sum(np.exp(z), axis=1))
    loss = float(np.mean(log_norm - z[np.arange(n), targets]))
    grad = np.exp(z - log_norm[:, None])
    grad[np.arange(n), targets] -= 1.0
    return loss, grad / n
