import numpy as np
import pytest

from tomokit.detect import GroundTruthBox, LesionDetector, froc
from tomokit.embeddings import volume_token_grids
from tomokit.errors import NoAnnotations
from tomokit.ingest import PhantomSpec, generate_phantom


def make_volume(seed, n_lesions=1, n_slices=3):
    spec = PhantomSpec(n_slices=n_slices, n_lesions=n_lesions, density_rank=seed % 4)
    phantom = generate_phantom(seed, spec)
    grids = volume_token_grids(phantom.pixels)
    gts = [GroundTruthBox(b.x, b.y, b.w, b.h, b.slice_index) for b in phantom.lesions]
    return grids, gts


def annotated_slices(volumes):
    out = []
    for grids, gts in volumes:
        by_slice = {}
        for b in gts:
            by_slice.setdefault(b.slice_index, []).append([b.x, b.y, b.w, b.h])
        for s, boxes in sorted(by_slice.items()):
            out.append((grids[s], np.asarray(boxes)))
    return out


@pytest.fixture(scope="module")
def trained_detector():
    train = [make_volume(s, n_lesions=1 + s % 2) for s in range(8)]
    val = [make_volume(50 + s) for s in range(3)]
    det = LesionDetector(seed=0, epochs=40, lr=0.05, eval_every=10)
    det.fit(annotated_slices(train), val)
    return det


def test_phantom_training_reaches_high_sensitivity(trained_detector):
    det = trained_detector
    assert det.val_sensitivity_ is not None and det.val_sensitivity_ >= 0.8
    test = [make_volume(90 + s) for s in range(5)]
    gt = {f"v{i}": gts for i, (_, gts) in enumerate(test)}
    preds = {f"v{i}": det.predict_volume(grids) for i, (grids, _) in enumerate(test)}
    result = froc(gt, preds, (1.0, 2.0, 3.0, 4.0))
    assert result.average_sensitivity >= 0.8


def test_detections_carry_originating_slice(trained_detector):
    grids, gts = make_volume(123, n_lesions=1, n_slices=3)
    dets = trained_detector.predict_volume(grids)
    assert dets, "expected at least one detection"
    assert all(0 <= d.slice_index < 3 for d in dets)
    assert all(0.0 <= d.score <= 1.0 for d in dets)
    top = dets[0]
    gx, gy = gts[0].center
    cx, cy = top.center
    assert np.hypot(cx - gx, cy - gy) <= 25.0


def test_same_seed_identical_params():
    train = [make_volume(s) for s in range(4)]
    annotated = annotated_slices(train)
    a = LesionDetector(seed=3, epochs=6).fit(annotated)
    b = LesionDetector(seed=3, epochs=6).fit(annotated)
    np.testing.assert_array_equal(a.head_.cls_weight, b.head_.cls_weight)
    np.testing.assert_array_equal(a.head_.box_weight, b.head_.box_weight)


def random_boxes(rng, count):
    return np.column_stack([
        rng.uniform(40, 400, count), rng.uniform(40, 400, count),
        rng.uniform(28, 64, count), rng.uniform(28, 64, count),
    ])


def test_randomized_labels_drop_sensitivity_to_chance():
    # permutation null: every annotation in the dataset is replaced by a
    # random box, for training and for the test-split ground truth alike
    rng = np.random.default_rng(0)
    train = [make_volume(s) for s in range(6)]
    shuffled = []
    for grids, gts in train:
        for b, f in zip(gts, random_boxes(rng, len(gts))):
            shuffled.append((grids[b.slice_index], f[None, :]))
    det = LesionDetector(seed=1, epochs=30, lr=0.05)
    det.fit(shuffled)
    test = [make_volume(300 + s) for s in range(5)]
    gt = {
        f"v{i}": [GroundTruthBox(*row) for row in random_boxes(rng, len(gts))]
        for i, (_, gts) in enumerate(test)
    }
    preds = {f"v{i}": det.predict_volume(grids) for i, (grids, _) in enumerate(test)}
    result = froc(gt, preds, (1.0, 2.0, 3.0, 4.0))
    assert result.average_sensitivity <= 0.2


def test_no_annotations_rejected():
    with pytest.raises(NoAnnotations):
        LesionDetector().fit([])
    grids, _ = make_volume(7)
    with pytest.raises(NoAnnotations):
        LesionDetector().fit([(grids[0], np.zeros((0, 4)))])
