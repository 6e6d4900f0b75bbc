"""Deterministic minibatch training loop for linear heads.

One loop serves every probe: the task supplies a batch-loss callback
mapping logits to (mean loss, dloss/dlogits) and a per-epoch validation
callback.  Data order comes from the named PRNG, so two runs with the
same seed produce identical weights.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .linear import LinearHead, forward_linear
from .optim import OptimState, ScheduleConfig, adamw_step, cosine_lr
from .rng import epoch_permutation


@dataclass
class TrainConfig:
    lr: float = 1e-3
    epochs: int = 75
    batch_size: int = 64
    weight_decay: float = 1e-4
    lr_min: float = 0.0
    seed: int = 0


@dataclass
class FitResult:
    best: dict[str, LinearHead]
    train_loss: list[float] = field(default_factory=list)
    val_history: list[dict[str, float]] = field(default_factory=list)
    best_epoch: dict[str, int] = field(default_factory=dict)


BatchLoss = Callable[[np.ndarray, np.ndarray], tuple[float, np.ndarray]]
ValMetrics = Callable[[LinearHead], dict[str, float]]


def fit_linear_head(
    head: LinearHead,
    features: np.ndarray,
    batch_loss: BatchLoss,
    cfg: TrainConfig,
    val_metrics: ValMetrics,
    selection: Sequence[tuple[str, str]] = (("loss", "min"),),
) -> FitResult:
    """Optimize a linear head with AdamW + cosine annealing.

    batch_loss(logits, idx) must return the mean loss over the batch and
    the gradient w.r.t. the logits (already divided by the batch size).
    selection lists (metric name, "min"|"max") pairs; the best head per
    criterion is kept as a checkpoint copy.
    """
    X = np.asarray(features, dtype=np.float64)
    n = X.shape[0]
    batch = min(cfg.batch_size, n)
    steps_per_epoch = max(1, (n + batch - 1) // batch)
    schedule = ScheduleConfig(
        lr_max=cfg.lr, lr_min=cfg.lr_min, total_steps=cfg.epochs * steps_per_epoch
    )
    params = {"W": head.weights, "b": head.bias}
    state = OptimState(weight_decay=cfg.weight_decay)
    result = FitResult(best={})
    best_value: dict[str, float] = {}
    step = 0
    for epoch in range(cfg.epochs):
        order = np.asarray(epoch_permutation(cfg.seed, epoch, n), dtype=np.int64)
        epoch_loss = 0.0
        for start in range(0, n, batch):
            idx = order[start : start + batch]
            xb = X[idx]
            logits = forward_linear(head, xb)
            loss, dlogits = batch_loss(logits, idx)
            grads = {"W": dlogits.T @ xb, "b": dlogits.sum(axis=0)}
            adamw_step(params, grads, state, cosine_lr(schedule, step))
            step += 1
            epoch_loss += loss * len(idx)
        result.train_loss.append(epoch_loss / n)
        metrics = val_metrics(head)
        result.val_history.append(metrics)
        for name, mode in selection:
            value = metrics[name]
            better = (
                name not in best_value
                or (mode == "min" and value < best_value[name])
                or (mode == "max" and value > best_value[name])
            )
            if better:
                best_value[name] = value
                result.best[name] = head.copy()
                result.best_epoch[name] = epoch
    return result
