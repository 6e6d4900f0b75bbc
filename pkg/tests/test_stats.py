import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tomokit.errors import EmptyInput, LengthMismatch, SingleClass
from tomokit.stats import (
    BootstrapConfig,
    PairedOutcomes,
    age_band,
    auroc,
    benjamini_hochberg,
    bootstrap_ci,
    chi2_sf_1df,
    delong_test,
    mcnemar_test,
    midranks,
    race_group,
    subgroup_table,
)


# --- AUROC ----------------------------------------------------------------------


def auroc_allpairs(scores, labels):
    pos = [s for s, l in zip(scores, labels) if l]
    neg = [s for s, l in zip(scores, labels) if not l]
    wins = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p in pos for n in neg)
    return wins / (len(pos) * len(neg))


def test_auroc_trivial_cases():
    assert auroc([0.9, 0.1], [1, 0]) == 1.0
    assert auroc([0.5, 0.5, 0.5], [1, 0, 1]) == 0.5
    assert auroc([0.8, 0.4, 0.6, 0.2], [1, 1, 0, 0]) == 0.75


def test_auroc_matches_allpairs_oracle():
    rng = np.random.default_rng(21)
    for _ in range(200):
        n = int(rng.integers(2, 60))
        labels = rng.integers(0, 2, size=n)
        if labels.sum() in (0, n):
            labels[0] = 1 - labels[0]
        scores = np.round(rng.random(n), 2)  # force ties
        assert auroc(scores, labels) == pytest.approx(
            auroc_allpairs(scores, labels), abs=1e-12
        )


def test_auroc_single_class_raises():
    with pytest.raises(SingleClass):
        auroc([0.1, 0.2], [1, 1])


def test_midranks_tie_handling():
    np.testing.assert_array_equal(midranks(np.array([3.0, 1.0, 3.0])), [2.5, 1.0, 2.5])


# --- DeLong ----------------------------------------------------------------------


def test_delong_identical_scores():
    scores = np.array([0.1, 0.4, 0.35, 0.8, 0.7, 0.2])
    labels = np.array([0, 0, 1, 1, 1, 0])
    res = delong_test(scores, scores, labels)
    assert res.z == 0.0
    assert res.p == 1.0


def test_delong_hand_case_matches_structural_components():
    scores_a = np.array([0.9, 0.7, 0.45, 0.55, 0.5, 0.4, 0.3, 0.2])
    scores_b = np.array([0.6, 0.45, 0.8, 0.5, 0.55, 0.7, 0.35, 0.2])
    labels = np.array([1, 1, 1, 0, 0, 0, 0, 0], dtype=bool)

    def components(scores):
        pos = scores[labels]
        neg = scores[~labels]
        v10 = np.array([
            np.mean([1.0 if p > n else 0.5 if p == n else 0.0 for n in neg]) for p in pos
        ])
        v01 = np.array([
            np.mean([1.0 if p > n else 0.5 if p == n else 0.0 for p in pos]) for n in neg
        ])
        return v10, v01

    v10a, v01a = components(scores_a)
    v10b, v01b = components(scores_b)
    auc_a, auc_b = v10a.mean(), v10b.mean()
    m, n = len(v10a), len(v01a)
    s10 = np.cov(np.stack([v10a, v10b]), ddof=1)
    s01 = np.cov(np.stack([v01a, v01b]), ddof=1)
    var = (s10 / m + s01 / n)[0, 0] + (s10 / m + s01 / n)[1, 1] - 2 * (s10 / m + s01 / n)[0, 1]
    z = (auc_a - auc_b) / math.sqrt(var)

    res = delong_test(scores_a, scores_b, labels)
    assert res.auc_a == pytest.approx(auc_a, abs=1e-12)
    assert res.auc_b == pytest.approx(auc_b, abs=1e-12)
    assert res.z == pytest.approx(z, abs=1e-12)
    assert res.p == pytest.approx(math.erfc(abs(z) / math.sqrt(2.0)), abs=1e-12)


def test_delong_antisymmetric():
    rng = np.random.default_rng(3)
    labels = np.array([1] * 10 + [0] * 12)
    a = rng.random(22)
    b = rng.random(22)
    r1 = delong_test(a, b, labels)
    r2 = delong_test(b, a, labels)
    assert r1.z == pytest.approx(-r2.z, abs=1e-12)
    assert r1.p == pytest.approx(r2.p, abs=1e-12)


def test_delong_rejects_mismatched_and_single_class():
    with pytest.raises(LengthMismatch):
        delong_test([0.1], [0.1, 0.2], [1, 0])
    with pytest.raises(SingleClass):
        delong_test([0.1, 0.2], [0.3, 0.4], [1, 1])


# --- McNemar -----------------------------------------------------------------------


def paired(b, c, both=10):
    a = np.array([True] * b + [False] * c + [True] * both)
    bb = np.array([False] * b + [True] * c + [True] * both)
    return PairedOutcomes(a, bb)


def test_mcnemar_no_discordance():
    assert mcnemar_test(paired(0, 0)) == 1.0


def test_mcnemar_exact_binomial_case():
    assert mcnemar_test(paired(5, 1)) == pytest.approx(14.0 / 64.0, abs=1e-15)


def test_mcnemar_chi_square_case():
    p = mcnemar_test(paired(40, 20))
    chi2 = (abs(40 - 20) - 1.0) ** 2 / 60.0
    assert chi2 == pytest.approx(361.0 / 60.0)
    assert p == pytest.approx(chi2_sf_1df(chi2), abs=1e-15)
    assert p == pytest.approx(0.0142, abs=2e-4)


def test_mcnemar_symmetric_in_models():
    assert mcnemar_test(paired(7, 3)) == mcnemar_test(paired(3, 7))


# --- Benjamini-Hochberg ------------------------------------------------------------


def test_bh_worked_example():
    reject, adjusted = benjamini_hochberg([0.01, 0.02, 0.04], alpha=0.05)
    np.testing.assert_allclose(adjusted, [0.03, 0.03, 0.04], atol=1e-12)
    assert reject.tolist() == [True, True, True]


def test_bh_single_p_passthrough():
    _, adjusted = benjamini_hochberg([0.2])
    assert adjusted[0] == pytest.approx(0.2)


def test_bh_all_ones_rejects_nothing():
    reject, adjusted = benjamini_hochberg([1.0, 1.0, 1.0])
    assert not reject.any()
    np.testing.assert_array_equal(adjusted, [1.0, 1.0, 1.0])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=20))
def test_bh_matches_classical_stepup(pvalues):
    reject, adjusted = benjamini_hochberg(pvalues, alpha=0.05)
    p = np.asarray(pvalues)
    order = np.argsort(p, kind="stable")
    m = len(p)
    # adjusted p monotone along the sorted order
    assert np.all(np.diff(adjusted[order]) >= -1e-15)
    # classical step-up: largest k with p_(k) <= k/m * alpha, reject 1..k
    k_star = 0
    for k in range(1, m + 1):
        if p[order][k - 1] <= 0.05 * k / m:
            k_star = k
    classical = np.zeros(m, dtype=bool)
    classical[order[:k_star]] = True
    np.testing.assert_array_equal(reject, classical)


# --- bootstrap -------------------------------------------------------------------------


def accuracy_metric(samples):
    return float(np.mean([s for s in samples]))


def test_bootstrap_degenerate_all_correct():
    cfg = BootstrapConfig(repetitions=100, seed=0)
    point, lo, hi = bootstrap_ci(accuracy_metric, [1.0] * 20, cfg)
    assert (point, lo, hi) == (1.0, 1.0, 1.0)


def test_bootstrap_interval_contains_point_for_accuracy():
    cfg = BootstrapConfig(repetitions=200, seed=5)
    samples = [1.0] * 70 + [0.0] * 30
    point, lo, hi = bootstrap_ci(accuracy_metric, samples, cfg)
    assert lo <= point <= hi


def test_bootstrap_width_shrinks_with_n():
    cfg = BootstrapConfig(repetitions=300, seed=7)

    def width(n):
        samples = ([1.0, 0.0] * (n // 2))[:n]
        _, lo, hi = bootstrap_ci(accuracy_metric, samples, cfg)
        return hi - lo

    assert width(400) < width(100)


def test_bootstrap_deterministic_per_seed():
    samples = list(np.random.default_rng(0).random(50))
    cfg = BootstrapConfig(repetitions=150, seed=9)
    assert bootstrap_ci(accuracy_metric, samples, cfg) == bootstrap_ci(
        accuracy_metric, samples, cfg
    )


def test_bootstrap_empty_raises():
    with pytest.raises(EmptyInput):
        bootstrap_ci(accuracy_metric, [], BootstrapConfig())


# --- demographic tables --------------------------------------------------------------


def test_age_bands():
    assert [age_band(a) for a in (49.9, 50, 59.9, 60, 69.9, 70, 85)] == [
        "<50", "50-60", "50-60", "60-70", "60-70", "70+", "70+",
    ]


def test_race_groups_catch_all():
    assert race_group("White") == "White"
    assert race_group("white ") == "White"
    assert race_group("Declined") == "Other"
    assert race_group(None) == "Other"


def test_subgroup_single_group_equals_overall():
    preds = [0, 1, 2, 2, 1]
    refs = [0, 1, 2, 1, 1]
    demo = [{"age_years": 55.0, "race": "White"}] * 5
    rows = subgroup_table(preds, refs, demo, key="race",
                          cfg=BootstrapConfig(repetitions=50, seed=0))
    assert len(rows) == 1
    assert rows[0]["group"] == "White"
    assert rows[0]["accuracy"] == pytest.approx(np.mean(np.array(preds) == np.array(refs)))


def test_subgroup_planted_split():
    preds = [1] * 10 + [0] * 10
    refs = [1] * 10 + [1] * 10
    demo = [{"age_years": 45.0}] * 10 + [{"age_years": 75.0}] * 10
    rows = subgroup_table(preds, refs, demo, key="age_band",
                          cfg=BootstrapConfig(repetitions=50, seed=1))
    by_group = {r["group"]: r for r in rows}
    assert by_group["<50"]["accuracy"] == 1.0
    assert by_group["70+"]["accuracy"] == 0.0
    assert by_group["<50"]["by_reference"]["1"]["n"] == 10
