import numpy as np
import pytest

from tomokit.density import (
    ConfusionMatrix,
    DensityProbe,
    adjacent_error_rate,
    binary_collapse,
    evaluate_density,
    stratified_fraction,
    train_density,
)
from tomokit.errors import EmptyClass, EmptyTestSet


def separable_features(n, seed, dim=16, separation=5.0, direction_seed=99):
    rng = np.random.default_rng(seed)
    dirs = np.random.default_rng(direction_seed).normal(size=(4, dim))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    labels = np.arange(n) % 4
    X = rng.normal(size=(n, dim)) + separation * dirs[labels]
    return X, labels


# --- confusion-derived metrics ------------------------------------------------


def test_all_correct_metrics():
    cm = ConfusionMatrix.from_predictions([0, 1, 2, 3], [0, 1, 2, 3])
    assert cm.accuracy() == 1.0
    f1, excluded = cm.macro_f1()
    assert f1 == 1.0 and excluded == []
    assert binary_collapse(cm) == 1.0
    assert adjacent_error_rate(cm) == 0.0


def test_cyclic_shift_has_zero_accuracy():
    refs = [0, 1, 2, 3] * 3
    preds = [(r + 1) % 4 for r in refs]
    cm = ConfusionMatrix.from_predictions(refs, preds)
    assert cm.accuracy() == 0.0


def test_hand_computed_ten_sample_case():
    refs = [0, 0, 0, 1, 1, 2, 2, 2, 3, 3]
    preds = [0, 1, 0, 1, 2, 2, 2, 3, 3, 3]
    cm = ConfusionMatrix.from_predictions(refs, preds)
    expected = np.array([
        [2, 1, 0, 0],
        [0, 1, 1, 0],
        [0, 0, 2, 1],
        [0, 0, 0, 2],
    ])
    np.testing.assert_array_equal(cm.counts, expected)
    assert cm.accuracy() == pytest.approx(0.7)
    # per-class F1 by hand: precision/recall per class
    f1_a = 2 * (2 / 2) * (2 / 3) / ((2 / 2) + (2 / 3))
    f1_b = 2 * (1 / 2) * (1 / 2) / 1.0
    f1_c = 2 * (2 / 3) * (2 / 3) / (4 / 3)
    f1_d = 2 * (2 / 3) * (2 / 2) / ((2 / 3) + 1.0)
    f1, excluded = cm.macro_f1()
    assert excluded == []
    assert f1 == pytest.approx(np.mean([f1_a, f1_b, f1_c, f1_d]), abs=1e-12)


def test_zero_support_class_excluded_from_macro_f1():
    cm = ConfusionMatrix.from_predictions([0, 0, 1], [0, 0, 1])
    f1, excluded = cm.macro_f1()
    assert excluded == [2, 3]
    assert f1 == 1.0


def test_binary_collapse_within_group_confusions_vanish():
    refs = [0, 0, 1, 1, 2, 2, 3, 3]
    preds = [1, 1, 0, 0, 3, 3, 2, 2]  # all confusions stay within {A,B} / {C,D}
    cm = ConfusionMatrix.from_predictions(refs, preds)
    assert cm.accuracy() == 0.0
    assert binary_collapse(cm) == 1.0


def test_binary_collapse_counts_cross_group_error():
    refs = [0] * 1 + [1] * 3 + [2] * 3 + [3] * 3
    preds = [2] + [1] * 3 + [2] * 3 + [3] * 3  # one A->C error in 10
    cm = ConfusionMatrix.from_predictions(refs, preds)
    assert binary_collapse(cm) == pytest.approx(0.9)


def test_adjacent_error_rate_paper_structure():
    # 3 of 997 predictions off by more than one rank
    counts = np.zeros((4, 4), dtype=int)
    counts[0, 0] = 994
    counts[0, 2] = 2
    counts[3, 1] = 1
    cm = ConfusionMatrix(counts)
    assert adjacent_error_rate(cm) == pytest.approx(3 / 997)
    assert adjacent_error_rate(cm) == pytest.approx(0.0030, abs=2e-4)


def test_single_far_error_among_997():
    counts = np.zeros((4, 4), dtype=int)
    counts[0, 0] = 996
    counts[0, 2] = 1
    cm = ConfusionMatrix(counts)
    assert adjacent_error_rate(cm) == pytest.approx(1 / 997, abs=1e-6)


# --- stratified fractions -------------------------------------------------------


def test_stratified_fraction_counts_within_one():
    rng = np.random.default_rng(0)
    labels = rng.integers(0, 4, size=203)
    for fraction in (0.05, 0.25, 0.5, 1.0):
        idx = stratified_fraction(labels, fraction, seed=5)
        assert len(set(idx.tolist())) == len(idx)
        for c in range(4):
            support = int((labels == c).sum())
            got = int((labels[idx] == c).sum())
            assert abs(got - fraction * support) <= 1


def test_stratified_fraction_same_seed_same_subset():
    labels = np.arange(40) % 4
    a = stratified_fraction(labels, 0.5, seed=3)
    b = stratified_fraction(labels, 0.5, seed=3)
    np.testing.assert_array_equal(a, b)


def test_stratified_fraction_empty_class_raises():
    with pytest.raises(EmptyClass):
        stratified_fraction(np.array([0] * 50 + [1]), 0.05, seed=1)


# --- probe training ----------------------------------------------------------------


def test_probe_reaches_high_accuracy_on_separable_data():
    X_train, y_train = separable_features(400, seed=1)
    X_test, y_test = separable_features(200, seed=2)
    probe = DensityProbe(epochs=30, seed=0).fit(X_train, y_train)
    report = evaluate_density(probe, X_test, y_test)
    assert report["accuracy"] >= 0.95
    assert report["binary_accuracy"] >= report["accuracy"]


def test_training_is_seed_deterministic():
    X, y = separable_features(120, seed=3)
    a = DensityProbe(epochs=10, seed=7).fit(X, y)
    b = DensityProbe(epochs=10, seed=7).fit(X, y)
    np.testing.assert_array_equal(a.head_.weights, b.head_.weights)
    np.testing.assert_array_equal(a.head_.bias, b.head_.bias)


def test_argmax_ties_break_toward_lower_rank():
    probe = DensityProbe()
    from tomokit.train import LinearHead

    probe.head_ = LinearHead(np.zeros((4, 2)), np.zeros(4))
    probe.classes_ = np.arange(4)
    assert probe.predict(np.ones((3, 2))).tolist() == [0, 0, 0]


def test_train_density_fraction_and_curves():
    X, y = separable_features(160, seed=4)
    run = train_density(X, y, fraction=0.5, seed=1, fraction_seed=2,
                        probe=DensityProbe(epochs=8, seed=1))
    assert run.fraction == 0.5
    assert len(run.train_loss) == 8
    assert len(run.val_loss) == 8


def test_evaluate_empty_test_set_raises():
    X, y = separable_features(40, seed=5)
    probe = DensityProbe(epochs=3, seed=0).fit(X, y)
    with pytest.raises(EmptyTestSet):
        evaluate_density(probe, np.zeros((0, X.shape[1])), [])


def test_single_class_training_raises():
    X = np.random.default_rng(0).normal(size=(30, 4))
    with pytest.raises(EmptyClass):
        DensityProbe(epochs=2).fit(X, np.zeros(30, dtype=int))
