"""Four-class breast-density linear probe and its evaluation metrics.

Logit order is fixed to the ordinal class order A, B, C, D; argmax ties
resolve toward the lower rank.  Training optimizes only the linear layer
with AdamW + cosine annealing and keeps the minimum-validation-loss
checkpoint.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .errors import EmptyClass, EmptyTestSet
from .studies import DensityCategory
from .train import (
    LinearHead,
    TrainConfig,
    fit_linear_head,
    forward_linear,
    softmax,
    softmax_ce_batch,
)
from .train.rng import Xoshiro256, derive_seed

N_CLASSES = 4


# --- confusion matrix and derived metrics --------------------------------------


@dataclass(frozen=True)
class ConfusionMatrix:
    """counts[reference, predicted] over the four ordinal classes."""

    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.shape != (N_CLASSES, N_CLASSES) or (counts < 0).any():
            raise ValueError("confusion matrix must be 4 x 4 with counts >= 0")
        object.__setattr__(self, "counts", counts)

    @classmethod
    def from_predictions(cls, refs, preds) -> "ConfusionMatrix":
        refs = np.asarray(refs, dtype=np.int64)
        preds = np.asarray(preds, dtype=np.int64)
        if len(refs) == 0:
            raise EmptyTestSet("need at least one prediction")
        counts = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
        np.add.at(counts, (refs, preds), 1)
        return cls(counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def accuracy(self) -> float:
        return float(np.trace(self.counts) / self.total)

    def macro_f1(self) -> tuple[float, list[int]]:
        """Unweighted mean F1 over classes with support; returns (f1, excluded)."""
        excluded = []
        scores = []
        for c in range(N_CLASSES):
            support = self.counts[c].sum()
            if support == 0:
                excluded.append(c)
                continue
            tp = self.counts[c, c]
            predicted = self.counts[:, c].sum()
            precision = tp / predicted if predicted else 0.0
            recall = tp / support
            f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
            scores.append(f1)
        return float(np.mean(scores)), excluded


def binary_collapse(cm: ConfusionMatrix) -> float:
    """Accuracy after merging {A,B} vs {C,D} into a 2 x 2 matrix."""
    c = cm.counts
    merged = np.array(
        [
            [c[:2, :2].sum(), c[:2, 2:].sum()],
            [c[2:, :2].sum(), c[2:, 2:].sum()],
        ]
    )
    return float(np.trace(merged) / merged.sum())


def adjacent_error_rate(cm: ConfusionMatrix) -> float:
    """Fraction of all predictions off by more than one ordinal rank."""
    c = cm.counts
    idx = np.arange(N_CLASSES)
    far = np.abs(idx[:, None] - idx[None, :]) > 1
    return float(c[far].sum() / c.sum())


# --- stratified fraction sampling ----------------------------------------------


def stratified_fraction(labels, fraction: float, seed: int) -> np.ndarray:
    """Per-class subset of indices with counts round(fraction * support).

    Seeded independently of any training seed so the same subset is reused
    across configurations being compared.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if not 0 < fraction <= 1:
        raise ValueError("fraction must lie in (0, 1]")
    picked: list[int] = []
    for c in sorted(set(labels.tolist())):
        pool = np.where(labels == c)[0]
        k = int(round(fraction * len(pool)))
        if k < 1:
            raise EmptyClass(f"fraction {fraction} leaves class {c} empty")
        rng = Xoshiro256(derive_seed(seed, 0xF2AC, c))
        take = rng.sample_without_replacement(len(pool), k)
        picked.extend(pool[take].tolist())
    return np.sort(np.asarray(picked, dtype=np.int64))


# --- probe ----------------------------------------------------------------------


class DensityProbe(BaseEstimator, ClassifierMixin):
    """Single linear layer over study features, softmax cross-entropy loss."""

    def __init__(
        self,
        lr: float = 1e-2,
        epochs: int = 75,
        batch_size: int = 64,
        weight_decay: float = 1e-4,
        seed: int = 0,
        val_fraction: float = 0.2,
    ):
        self.lr = lr
        self.epochs = epochs
        self.batch_size = batch_size
        self.weight_decay = weight_decay
        self.seed = seed
        self.val_fraction = val_fraction

    def fit(self, X, y, val_data=None):
        """y holds ordinal ranks 0..3; val_data optionally gives (X_val, y_val)."""
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        present = set(y.tolist())
        if len(present) < 2:
            raise EmptyClass("training requires at least two classes present")
        if val_data is None:
            rng = Xoshiro256(derive_seed(self.seed, 0xDE5))
            order = np.asarray(rng.shuffle(list(range(len(y)))))
            n_val = max(1, int(round(len(y) * self.val_fraction)))
            val_idx, train_idx = np.sort(order[:n_val]), np.sort(order[n_val:])
            X_train, y_train = X[train_idx], y[train_idx]
            X_val, y_val = X[val_idx], y[val_idx]
        else:
            X_train, y_train = X, y
            X_val = np.asarray(val_data[0], dtype=np.float64)
            y_val = np.asarray(val_data[1], dtype=np.int64)

        head = LinearHead.zeros(N_CLASSES, X.shape[1])
        cfg = TrainConfig(
            lr=self.lr,
            epochs=self.epochs,
            batch_size=self.batch_size,
            weight_decay=self.weight_decay,
            seed=derive_seed(self.seed, 0x7A1),
        )

        def batch_loss(logits, idx):
            return softmax_ce_batch(logits, y_train[idx])

        def val_metrics(h: LinearHead) -> dict[str, float]:
            loss, _ = softmax_ce_batch(forward_linear(h, X_val), y_val)
            return {"loss": loss}

        result = fit_linear_head(head, X_train, batch_loss, cfg, val_metrics)
        self.head_ = result.best["loss"]
        self.fit_result_ = result
        self.classes_ = np.arange(N_CLASSES)
        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X) -> np.ndarray:
        return forward_linear(self.head_, np.asarray(X, dtype=np.float64))

    def predict_proba(self, X) -> np.ndarray:
        return softmax(self.decision_function(X))

    def predict(self, X) -> np.ndarray:
        # np.argmax returns the first maximum, i.e. ties go to the lower rank
        return np.argmax(self.decision_function(X), axis=-1)


# --- run container + evaluation ---------------------------------------------------


@dataclass
class DensityRun:
    """One training run: configuration, probe and loss curves."""

    mode: str
    fraction: float
    seed: int
    probe: DensityProbe
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)


def train_density(
    features: np.ndarray,
    labels,
    mode: str = "patch-mean-std",
    fraction: float = 1.0,
    seed: int = 0,
    fraction_seed: int = 17,
    probe: DensityProbe | None = None,
    val_data=None,
) -> DensityRun:
    """Train a probe on a stratified fraction of the given training data."""
    labels = np.asarray(
        [y.rank if isinstance(y, DensityCategory) else int(y) for y in labels],
        dtype=np.int64,
    )
    X = np.asarray(features, dtype=np.float64)
    if fraction < 1.0:
        idx = stratified_fraction(labels, fraction, fraction_seed)
        X, labels = X[idx], labels[idx]
    model = probe if probe is not None else DensityProbe(seed=seed)
    model.set_params(seed=seed)
    model.fit(X, labels, val_data=val_data)
    return DensityRun(
        mode=mode,
        fraction=fraction,
        seed=seed,
        probe=model,
        train_loss=model.fit_result_.train_loss,
        val_loss=[m["loss"] for m in model.fit_result_.val_history],
    )


def evaluate_density(probe: DensityProbe, X, y) -> dict:
    """Accuracy, macro-F1, confusion counts and the ordinal error summaries."""
    y = np.asarray(
        [t.rank if isinstance(t, DensityCategory) else int(t) for t in y],
        dtype=np.int64,
    )
    if len(y) == 0:
        raise EmptyTestSet("evaluation requires a nonempty test set")
    preds = probe.predict(np.asarray(X, dtype=np.float64))
    cm = ConfusionMatrix.from_predictions(y, preds)
    macro_f1, excluded = cm.macro_f1()
    return {
        "accuracy": cm.accuracy(),
        "macro_f1": macro_f1,
        "excluded_classes": excluded,
        "confusion": cm.counts.tolist(),
        "binary_accuracy": binary_collapse(cm),
        "adjacent_error_rate": adjacent_error_rate(cm),
    }
