"""Discrete-time 5-year cumulative risk head.

A linear head emits five raw outputs z_1..z_5 per exam.  Softplus makes
them nonnegative yearly hazards, an upper-triangular cumulative sum turns
hazards into cumulative exposure, and 1 - exp(-cumsum) maps to cumulative
probabilities, which are monotone non-decreasing by construction.

Censored follow-up is handled by per-year masks: the binary cross-entropy
is computed only over observed years and normalized per sample by the
number of valid years.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator

from .errors import AllMasked, DegenerateSplit, InvalidEventYear, UnusableRecord
from .stats import BootstrapConfig, auroc, bootstrap_ci_indexed
from .train import LinearHead, TrainConfig, fit_linear_head, forward_linear
from .train.rng import Xoshiro256, derive_seed

N_YEARS = 5
PROB_FLOOR = 1e-7


@dataclass(frozen=True)
class SurvivalRecord:
    """Outcome of one exam: event flag plus per-year labels and masks."""

    exam_id: str
    event: bool
    event_year: Optional[int]
    followup_years: float
    labels: np.ndarray = field(repr=False)
    mask: np.ndarray = field(repr=False)


def build_record(
    exam_id: str,
    event: bool,
    event_year: Optional[int] = None,
    followup_years: float = 0.0,
) -> SurvivalRecord:
    """Labels and masks from a (possibly censored) outcome.

    An event at year t marks labels 1 from year t on with all years
    observed.  Without an event, year k is observed iff k <= floor of the
    follow-up in years; fewer than 1 observed year makes the record
    unusable.
    """
    y = np.zeros(N_YEARS, dtype=np.int8)
    m = np.zeros(N_YEARS, dtype=np.int8)
    if event:
        if event_year is None or not 1 <= event_year <= N_YEARS:
            raise InvalidEventYear(f"{exam_id}: event year {event_year}")
        y[event_year - 1 :] = 1
        m[:] = 1
    else:
        observed = min(N_YEARS, int(np.floor(followup_years)))
        if observed < 1:
            raise UnusableRecord(f"{exam_id}: {followup_years} years of follow-up")
        m[:observed] = 1
    return SurvivalRecord(
        exam_id=exam_id,
        event=event,
        event_year=event_year if event else None,
        followup_years=float(followup_years),
        labels=y,
        mask=m,
    )


def _softplus(z: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, z)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def hazards_to_risk(z) -> np.ndarray:
    """Cumulative risk curve(s) from raw outputs; rows are monotone in year.

    Accepts shape (5,) or (n, 5); hazards are softplus(z), risk is
    1 - exp(-cumsum(hazards)).
    """
    z = np.asarray(z, dtype=np.float64)
    hazards = _softplus(z)
    return -np.expm1(-np.cumsum(hazards, axis=-1))


def _bce_terms_and_grad(z, y, m):
    """Shared core: per-year loss terms and d(loss)/dH, unnormalized.

    Works in cumulative-hazard space, where both BCE terms have exact
    closed forms: -log(1 - R) = H identically, and -log(R) =
    -log(-expm1(-H)).  This keeps the gradient finite and exact even when
    risks saturate numerically; the event term floors R at 1e-7 (where
    the floor is active the term is constant, so its gradient is zero).
    """
    hazards = _softplus(z)
    cumulative = np.cumsum(hazards, axis=-1)
    risk = -np.expm1(-cumulative)
    floored = np.maximum(risk, PROB_FLOOR)
    terms = y * -np.log(floored) + (1.0 - y) * cumulative
    g_cum = m * (
        y * np.where(risk > PROB_FLOOR, -np.exp(-cumulative) / floored, 0.0)
        + (1.0 - y)
    )
    return terms, g_cum


def masked_bce(z, y, m) -> tuple[float, np.ndarray]:
    """Per-sample normalized masked BCE through the cumulative-risk chain.

    Returns (loss, gradient w.r.t. z).  Masked years contribute nothing
    to either the loss or the gradient, bit-exactly.
    """
    z = np.asarray(z, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    m = np.asarray(m, dtype=np.float64)
    valid = m.sum()
    if valid < 1:
        raise AllMasked("need at least one unmasked year")
    terms, g_cum = _bce_terms_and_grad(z, y, m)
    loss = float(np.sum(m * terms) / valid)
    # reverse cumulative sum: dH_k/dh_j = 1 for j <= k
    g_haz = np.flip(np.cumsum(np.flip(g_cum / valid, axis=-1), axis=-1), axis=-1)
    return loss, g_haz * _sigmoid(z)


def masked_bce_batch(z, y, m) -> tuple[float, np.ndarray]:
    """Mean masked BCE over a batch; gradient includes the 1/batch factor."""
    z = np.atleast_2d(np.asarray(z, dtype=np.float64))
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    m = np.atleast_2d(np.asarray(m, dtype=np.float64))
    valid = m.sum(axis=1)
    if np.any(valid < 1):
        raise AllMasked("every record needs at least one unmasked year")
    terms, g_cum = _bce_terms_and_grad(z, y, m)
    per_sample = (m * terms).sum(axis=1) / valid
    loss = float(per_sample.mean())
    g_haz = np.flip(np.cumsum(np.flip(g_cum / valid[:, None], axis=1), axis=1), axis=1)
    return loss, g_haz * _sigmoid(z) / z.shape[0]


# --- estimator ---------------------------------------------------------------


class CumulativeHazardModel(BaseEstimator):
    """Linear cumulative-hazard head trained with masked BCE.

    fit expects study features X of shape (n, d), per-year labels y of
    shape (n, 5) and masks of the same shape (both as produced by
    build_record).  Two checkpoints are tracked during training, minimum
    validation loss and maximum mean validation AUROC; `select` chooses
    which one predictions use.
    """

    def __init__(
        self,
        lr: float = 0.05,
        epochs: int = 100,
        batch_size: int = 64,
        weight_decay: float = 1e-4,
        seed: int = 0,
        val_fraction: float = 0.2,
        select: str = "auroc",
    ):
        self.lr = lr
        self.epochs = epochs
        self.batch_size = batch_size
        self.weight_decay = weight_decay
        self.seed = seed
        self.val_fraction = val_fraction
        self.select = select

    def _balanced_val(self, pool: np.ndarray, events: np.ndarray) -> np.ndarray:
        """Equal numbers of positive and negative exams from the pool."""
        pos = pool[events[pool]]
        neg = pool[~events[pool]]
        k = min(len(pos), len(neg))
        rng = Xoshiro256(derive_seed(self.seed, 0xBA1))
        pos = pos[rng.sample_without_replacement(len(pos), k)] if len(pos) > k else pos
        neg = neg[rng.sample_without_replacement(len(neg), k)] if len(neg) > k else neg
        return np.sort(np.concatenate([pos, neg]))

    def fit(self, X, y, mask, val_data=None):
        """Train the head; val_data optionally gives (X_val, y_val, mask_val)."""
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        mask = np.asarray(mask, dtype=np.float64)
        events = y[:, N_YEARS - 1] > 0
        if val_data is None:
            n = X.shape[0]
            rng = Xoshiro256(derive_seed(self.seed, 0x591))
            order = np.asarray(rng.shuffle(list(range(n))))
            n_val = max(1, int(round(n * self.val_fraction)))
            val_pool, train_idx = order[:n_val], np.sort(order[n_val:])
            val_idx = self._balanced_val(np.sort(val_pool), events)
            X_train, y_train, m_train = X[train_idx], y[train_idx], mask[train_idx]
            X_val, y_val, m_val = X[val_idx], y[val_idx], mask[val_idx]
        else:
            X_train, y_train, m_train = X, y, mask
            X_val, y_val, m_val = (np.asarray(a, dtype=np.float64) for a in val_data)
            pool = np.arange(len(X_val))
            keep = self._balanced_val(pool, y_val[:, N_YEARS - 1] > 0)
            X_val, y_val, m_val = X_val[keep], y_val[keep], m_val[keep]
        if not (y_train[:, N_YEARS - 1] > 0).any() or (y_train[:, N_YEARS - 1] > 0).all():
            raise DegenerateSplit("training needs both an event and a censored record")

        head = LinearHead.zeros(N_YEARS, X.shape[1])
        cfg = TrainConfig(
            lr=self.lr,
            epochs=self.epochs,
            batch_size=self.batch_size,
            weight_decay=self.weight_decay,
            seed=derive_seed(self.seed, 0xF17),
        )

        def batch_loss(logits, idx):
            return masked_bce_batch(logits, y_train[idx], m_train[idx])

        def val_metrics(h: LinearHead) -> dict[str, float]:
            z = forward_linear(h, X_val)
            loss, _ = masked_bce_batch(z, y_val, m_val)
            risk = hazards_to_risk(z)
            aucs = []
            for k in range(N_YEARS):
                seen = m_val[:, k] > 0
                lbl = y_val[seen, k]
                if seen.sum() and 0 < lbl.sum() < seen.sum():
                    aucs.append(auroc(risk[seen, k], lbl))
            return {"loss": loss, "auroc": float(np.mean(aucs)) if aucs else 0.5}

        result = fit_linear_head(
            head,
            X_train,
            batch_loss,
            cfg,
            val_metrics,
            selection=(("loss", "min"), ("auroc", "max")),
        )
        self.heads_ = result.best
        self.fit_result_ = result
        self.n_features_in_ = X.shape[1]
        return self

    @property
    def head_(self) -> LinearHead:
        return self.heads_[self.select]

    def decision_function(self, X) -> np.ndarray:
        return forward_linear(self.head_, np.asarray(X, dtype=np.float64))

    def predict_risk(self, X) -> np.ndarray:
        """Cumulative risk curves, shape (n, 5), monotone per row."""
        return hazards_to_risk(self.decision_function(X))


def train_risk(
    features: np.ndarray,
    records: Sequence[SurvivalRecord],
    cfg: CumulativeHazardModel | None = None,
    val_data=None,
) -> CumulativeHazardModel:
    """Fit a hazard head on aligned (features, records)."""
    model = cfg if cfg is not None else CumulativeHazardModel()
    y = np.stack([r.labels for r in records])
    m = np.stack([r.mask for r in records])
    return model.fit(features, y, m, val_data=val_data)


# --- evaluation ----------------------------------------------------------------


def eval_risk(
    risk_scores: np.ndarray,
    records: Sequence[SurvivalRecord],
    bootstrap: BootstrapConfig | None = None,
) -> dict:
    """Per-year AUROC (with CIs) plus the unweighted macro average.

    Year k uses records observed at year k (mask 1) with the cumulative
    label y_k and score R_k.  Years with a single class are reported as
    null.  risk_scores may come from predict_risk or any monotone
    transform of it.
    """
    risk_scores = np.asarray(risk_scores, dtype=np.float64)
    y = np.stack([r.labels for r in records]).astype(np.float64)
    m = np.stack([r.mask for r in records]).astype(np.float64)
    cfg = bootstrap or BootstrapConfig()
    years = []
    macro_parts = []
    for k in range(N_YEARS):
        seen = np.where(m[:, k] > 0)[0]
        labels = y[seen, k]
        scores = risk_scores[seen, k]
        if len(seen) == 0 or labels.sum() == 0 or labels.sum() == len(seen):
            years.append({"year": k + 1, "auroc": None, "ci_lo": None, "ci_hi": None,
                          "n": int(len(seen)), "n_pos": int(labels.sum())})
            continue

        def metric(idx, scores=scores, labels=labels):
            lbl = labels[idx]
            if lbl.sum() in (0, len(idx)):
                return float("nan")
            return auroc(scores[idx], lbl)

        point, lo, hi = _bootstrap_auroc(metric, len(seen), cfg)
        years.append({"year": k + 1, "auroc": point, "ci_lo": lo, "ci_hi": hi,
                      "n": int(len(seen)), "n_pos": int(labels.sum())})
        macro_parts.append(point)
    macro = float(np.mean(macro_parts)) if macro_parts else None
    return {"years": years, "macro_auroc": macro}


def _bootstrap_auroc(metric, n, cfg):
    # nan values mark degenerate (single-class) resamples and are skipped
    # by the quantile computation inside bootstrap_ci_indexed
    return bootstrap_ci_indexed(metric, n, cfg)


def subgroup_risk(
    risk_scores: np.ndarray,
    records: Sequence[SurvivalRecord],
    groups: Sequence[str],
    bootstrap: BootstrapConfig | None = None,
    min_positives: int = 5,
) -> dict:
    """eval_risk restricted to each group; sparse-positive groups are flagged."""
    risk_scores = np.asarray(risk_scores, dtype=np.float64)
    if not (len(risk_scores) == len(records) == len(groups)):
        raise ValueError("scores, records and groups must align")
    out = {}
    for name in sorted(set(groups)):
        idx = [i for i, g in enumerate(groups) if g == name]
        sub_records = [records[i] for i in idx]
        report = eval_risk(risk_scores[idx], sub_records, bootstrap)
        n_pos = sum(1 for r in sub_records if r.event)
        report["n"] = len(idx)
        report["n_pos"] = n_pos
        report["low_positive_count"] = n_pos < min_positives
        out[str(name)] = report
    return out
