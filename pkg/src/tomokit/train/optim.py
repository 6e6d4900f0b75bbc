"""AdamW with decoupled weight decay, plus the cosine learning-rate schedule."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import DimMismatch


@dataclass
class ScheduleConfig:
    lr_max: float
    total_steps: int
    lr_min: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.lr_min <= self.lr_max:
            raise ValueError("require 0 <= lr_min <= lr_max")
        if self.total_steps < 1:
            raise ValueError("total_steps must be >= 1")


def cosine_lr(cfg: ScheduleConfig, step: int) -> float:
    """Annealed rate at step t in [0, T]: lr_min + (lr_max-lr_min)(1+cos(pi t/T))/2."""
    t = min(max(step, 0), cfg.total_steps)
    return cfg.lr_min + 0.5 * (cfg.lr_max - cfg.lr_min) * (
        1.0 + math.cos(math.pi * t / cfg.total_steps)
    )


@dataclass
class OptimState:
    """Per-parameter Adam moments; one entry per named parameter."""

    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0


def adamw_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: OptimState,
    lr: float,
) -> None:
    """One decoupled-weight-decay Adam update, in place.

    theta <- theta - lr * m_hat / (sqrt(v_hat) + eps) - lr * wd * theta
    """
    state.t += 1
    bc1 = 1.0 - state.beta1 ** state.t
    bc2 = 1.0 - state.beta2 ** state.t
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise DimMismatch(f"grad shape {g.shape} != param shape {p.shape} for {name}")
        if name not in state.m:
            state.m[name] = np.zeros_like(p)
            state.v[name] = np.zeros_like(p)
        m = state.m[name]
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        m_hat = m / bc1
        v_hat = v / bc2
        p -= lr * (m_hat / (np.sqrt(v_hat) + state.eps))
        if state.weight_decay != 0.0:
            p -= lr * state.weight_decay * p
