"""Evaluation statistics.

Implements the exact conventions used throughout the package so results
reproduce across platforms and languages:

* AUROC is the Mann-Whitney statistic with midrank tie handling.
* DeLong's test compares correlated AUCs through structural components
  (V10/V01) with sample covariance (ddof=1).
* McNemar's test is an exact two-sided binomial on the discordant counts
  when b + c < 25, else the continuity-corrected chi-square with 1 dof.
* Tail probabilities derive from the C library's erfc, which is a
  documented rational approximation accurate to well below 1e-7, so
  p-values agree across implementations:
      P(|Z| > z)      = erfc(z / sqrt(2))
      P(chi2_1 > x)   = erfc(sqrt(x / 2))
* Bootstrap intervals are percentile intervals over resamples drawn with
  per-repetition derived seeds, so repetitions can run in any order or in
  parallel without changing the result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import EmptyInput, LengthMismatch, SingleClass
from .train.rng import derive_seed

AGE_BANDS = ("<50", "50-60", "60-70", "70+")
KNOWN_RACE_GROUPS = ("White", "Black", "Asian", "Hispanic")


def normal_two_sided_p(z: float) -> float:
    return math.erfc(abs(z) / math.sqrt(2.0))


def chi2_sf_1df(x: float) -> float:
    return math.erfc(math.sqrt(max(x, 0.0) / 2.0))


# --- AUROC --------------------------------------------------------------------


def midranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties sharing the average rank of their run."""
    values = np.asarray(values, dtype=np.float64)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def auroc(scores, labels) -> float:
    """Probability a random positive outscores a random negative (ties count 1/2)."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    if scores.shape != labels.shape:
        raise LengthMismatch("scores and labels must align")
    m = int(labels.sum())
    n = int((~labels).sum())
    if m == 0 or n == 0:
        raise SingleClass("AUROC requires both classes")
    ranks = midranks(scores)
    return float((ranks[labels].sum() - m * (m + 1) / 2.0) / (m * n))


# --- DeLong -------------------------------------------------------------------


def _structural_components(scores: np.ndarray, labels: np.ndarray):
    pos = scores[labels]
    neg = scores[~labels]
    m, n = len(pos), len(neg)
    t_all = midranks(np.concatenate([pos, neg]))
    t_pos = midranks(pos)
    t_neg = midranks(neg)
    v10 = (t_all[:m] - t_pos) / n
    v01 = 1.0 - (t_all[m:] - t_neg) / m
    auc = (t_all[:m].sum() - m * (m + 1) / 2.0) / (m * n)
    return auc, v10, v01


@dataclass(frozen=True)
class DeLongResult:
    auc_a: float
    auc_b: float
    z: float
    p: float


def delong_test(scores_a, scores_b, labels) -> DeLongResult:
    """Two-sided DeLong comparison of two correlated AUCs on paired scores."""
    scores_a = np.asarray(scores_a, dtype=np.float64)
    scores_b = np.asarray(scores_b, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    if not (len(scores_a) == len(scores_b) == len(labels)):
        raise LengthMismatch("paired scores must align with labels")
    if labels.all() or not labels.any():
        raise SingleClass("DeLong requires both classes")
    auc_a, v10_a, v01_a = _structural_components(scores_a, labels)
    auc_b, v10_b, v01_b = _structural_components(scores_b, labels)
    m, n = len(v10_a), len(v01_a)
    s10 = np.cov(np.stack([v10_a, v10_b]), ddof=1) if m > 1 else np.zeros((2, 2))
    s01 = np.cov(np.stack([v01_a, v01_b]), ddof=1) if n > 1 else np.zeros((2, 2))
    s = s10 / m + s01 / n
    var = float(s[0, 0] + s[1, 1] - 2.0 * s[0, 1])
    diff = auc_a - auc_b
    if var <= 0.0:
        z = 0.0 if diff == 0.0 else math.copysign(math.inf, diff)
    else:
        z = diff / math.sqrt(var)
    p = 1.0 if z == 0.0 else normal_two_sided_p(z)
    return DeLongResult(auc_a=float(auc_a), auc_b=float(auc_b), z=float(z), p=float(p))


# --- McNemar ------------------------------------------------------------------


@dataclass(frozen=True)
class PairedOutcomes:
    """Per-sample correctness of two models, aligned by sample id."""

    correct_a: np.ndarray
    correct_b: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.correct_a).astype(bool)
        b = np.asarray(self.correct_b).astype(bool)
        if a.shape != b.shape or a.ndim != 1:
            raise LengthMismatch("paired outcomes must be equal-length 1-d arrays")
        object.__setattr__(self, "correct_a", a)
        object.__setattr__(self, "correct_b", b)


def mcnemar_test(paired: PairedOutcomes) -> float:
    """Two-sided p for equal marginal error rates of two paired classifiers."""
    a, b = paired.correct_a, paired.correct_b
    disc_b = int(np.sum(a & ~b))  # A correct, B wrong
    disc_c = int(np.sum(~a & b))  # B correct, A wrong
    n = disc_b + disc_c
    if n == 0:
        return 1.0
    if n < 25:
        k = min(disc_b, disc_c)
        tail = sum(math.comb(n, i) for i in range(k + 1))
        return min(1.0, 2.0 * tail / 2.0 ** n)
    chi2 = (abs(disc_b - disc_c) - 1.0) ** 2 / n
    return chi2_sf_1df(chi2)


# --- Benjamini-Hochberg ---------------------------------------------------------


def benjamini_hochberg(pvalues, alpha: float = 0.05) -> tuple[np.ndarray, np.ndarray]:
    """Step-up FDR control; returns (reject flags, adjusted p) in input order."""
    p = np.asarray(pvalues, dtype=np.float64)
    if np.any((p < 0) | (p > 1)):
        raise ValueError("p-values must lie in [0, 1]")
    m = len(p)
    order = np.argsort(p, kind="stable")
    adjusted_sorted = p[order] * m / np.arange(1, m + 1)
    adjusted_sorted = np.minimum.accumulate(adjusted_sorted[::-1])[::-1]
    adjusted_sorted = np.minimum(adjusted_sorted, 1.0)
    adjusted = np.empty(m)
    adjusted[order] = adjusted_sorted
    return adjusted <= alpha, adjusted


# --- bootstrap -------------------------------------------------------------------


@dataclass
class BootstrapConfig:
    repetitions: int = 1000
    seed: int = 0
    level: float = 0.95

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if not 0.0 < self.level < 1.0:
            raise ValueError("level must lie in (0, 1)")


def resample_indices(n: int, cfg: BootstrapConfig, repetition: int) -> np.ndarray:
    """The repetition-th with-replacement resample, independent of schedule."""
    rng = np.random.default_rng(derive_seed(cfg.seed, 0xB007, repetition))
    return rng.integers(0, n, size=n)


def bootstrap_ci(
    metric: Callable[[Sequence], float], samples: Sequence, cfg: BootstrapConfig
) -> tuple[float, float, float]:
    """Percentile bootstrap interval: (point estimate, lo, hi)."""
    if len(samples) == 0:
        raise EmptyInput("bootstrap requires at least one sample")
    n = len(samples)
    point = float(metric(samples))
    values = np.empty(cfg.repetitions)
    items = list(samples)
    for rep in range(cfg.repetitions):
        idx = resample_indices(n, cfg, rep)
        values[rep] = metric([items[i] for i in idx])
    alpha = (1.0 - cfg.level) / 2.0
    lo, hi = np.nanquantile(values, [alpha, 1.0 - alpha])
    return point, float(lo), float(hi)


def bootstrap_ci_indexed(
    metric: Callable[[np.ndarray], float], n: int, cfg: BootstrapConfig
) -> tuple[float, float, float]:
    """Bootstrap where the metric consumes index arrays (faster for ndarrays)."""
    if n == 0:
        raise EmptyInput("bootstrap requires at least one sample")
    point = float(metric(np.arange(n)))
    values = np.empty(cfg.repetitions)
    for rep in range(cfg.repetitions):
        values[rep] = metric(resample_indices(n, cfg, rep))
    alpha = (1.0 - cfg.level) / 2.0
    lo, hi = np.nanquantile(values, [alpha, 1.0 - alpha])
    return point, float(lo), float(hi)


# --- demographic subgroup tables ---------------------------------------------------


def age_band(age_years: float) -> str:
    if age_years < 50:
        return AGE_BANDS[0]
    if age_years < 60:
        return AGE_BANDS[1]
    if age_years < 70:
        return AGE_BANDS[2]
    return AGE_BANDS[3]


def race_group(race: str | None, known: Sequence[str] = KNOWN_RACE_GROUPS) -> str:
    if race is not None:
        for name in known:
            if race.strip().lower() == name.lower():
                return name
    return "Other"


def subgroup_table(
    predictions,
    refs,
    demographics: Sequence[Mapping],
    key: str,
    cfg: BootstrapConfig | None = None,
) -> list[dict]:
    """Per-group accuracy with bootstrap CIs, stratified by reference label.

    key is "age_band" (bands <50, 50-60, 60-70, 70+, by age at acquisition)
    or "race" (manifest categories with an Other catch-all).  Returns one
    row per group with an overall cell and one cell per reference class.
    """
    predictions = np.asarray(predictions)
    refs = np.asarray(refs)
    if not (len(predictions) == len(refs) == len(demographics)):
        raise LengthMismatch("predictions, refs and demographics must align")
    if key not in ("age_band", "race"):
        raise ValueError("key must be 'age_band' or 'race'")
    cfg = cfg or BootstrapConfig()
    groups: dict[str, list[int]] = {}
    for i, demo in enumerate(demographics):
        if key == "age_band":
            age = demo.get("age_years")
            if age is None:
                continue
            name = age_band(float(age))
        else:
            name = race_group(demo.get("race"))
        groups.setdefault(name, []).append(i)

    def cell(indices: list[int]) -> dict:
        correct = (predictions[indices] == refs[indices]).astype(np.float64)
        point, lo, hi = bootstrap_ci_indexed(
            lambda idx: float(correct[idx].mean()), len(correct), cfg
        )
        return {"n": len(indices), "accuracy": point, "ci_lo": lo, "ci_hi": hi}

    rows = []
    for name in sorted(groups):
        indices = groups[name]
        by_ref = {}
        for label in sorted({str(r) for r in refs[indices]}):
            sub = [i for i in indices if str(refs[i]) == label]
            by_ref[label] = cell(sub)
        rows.append({"group": name, **cell(indices), "by_reference": by_ref})
    return rows
