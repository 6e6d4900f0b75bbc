import numpy as np
import pytest

from tomokit.detect import (
    AugmentConfig,
    augment_geometry,
    clip_boxes,
    coarse_dropout,
    flip_horizontal,
    flip_vertical,
    gamma_contrast,
    gaussian_noise,
    zoom_boxes,
    zoom_factor_ok,
    zoom_image,
)
from tomokit.studies import FRAME_SIZE


def checker_image(seed=0):
    rng = np.random.default_rng(seed)
    return rng.random((FRAME_SIZE, FRAME_SIZE))


def test_horizontal_flip_mirror_formula():
    img = checker_image()
    boxes = np.array([[100.0, 50.0, 40.0, 30.0]])
    flipped, fboxes = flip_horizontal(img, boxes)
    assert fboxes[0].tolist() == [FRAME_SIZE - 100 - 40, 50.0, 40.0, 30.0]
    np.testing.assert_array_equal(flipped, img[:, ::-1])


def test_flips_are_involutions():
    img = checker_image(1)
    boxes = np.array([[10.0, 20.0, 30.0, 40.0], [200.0, 300.0, 50.0, 60.0]])
    for flip in (flip_horizontal, flip_vertical):
        img2, boxes2 = flip(*flip(img, boxes))
        np.testing.assert_array_equal(img2, img)
        np.testing.assert_allclose(boxes2, boxes, atol=1e-12)


def test_zoom_boxes_scale_about_center():
    boxes = np.array([[259.0 - 20.0, 259.0 - 10.0, 40.0, 20.0]])  # centered box
    scaled = zoom_boxes(boxes, 1.5)
    np.testing.assert_allclose(scaled[0], [259 - 30, 259 - 15, 60, 30], atol=1e-9)


def test_zoom_constraint_window():
    small = np.array([[100.0, 100.0, 16.0, 10.0]])
    assert zoom_factor_ok(small, 1.0)
    assert not zoom_factor_ok(small, 0.85)  # height drops below 9 px
    large = np.array([[100.0, 100.0, 150.0, 150.0]])
    assert not zoom_factor_ok(large, 1.5)  # width above 206 px


def test_zoom_image_identity_at_factor_one():
    img = checker_image(2)
    np.testing.assert_allclose(zoom_image(img, 1.0), img, atol=1e-12)


def test_zoom_image_tracks_boxes():
    img = np.zeros((FRAME_SIZE, FRAME_SIZE))
    img[250:270, 100:120] = 1.0  # bright square, box (100, 250, 20, 20)
    boxes = np.array([[100.0, 250.0, 20.0, 20.0]])
    factor = 1.3
    zoomed = zoom_image(img, factor)
    zb = zoom_boxes(boxes, factor)[0]
    ys, xs = np.nonzero(zoomed > 0.5)
    assert xs.min() == pytest.approx(zb[0], abs=2.0)
    assert xs.max() == pytest.approx(zb[0] + zb[2], abs=2.0)
    assert ys.min() == pytest.approx(zb[1], abs=2.0)
    assert ys.max() == pytest.approx(zb[1] + zb[3], abs=2.0)


def test_clip_boxes_drops_empty_rows():
    boxes = np.array([
        [-10.0, 5.0, 20.0, 20.0],
        [600.0, 5.0, 20.0, 20.0],  # fully outside
    ])
    clipped = clip_boxes(boxes)
    assert clipped.shape == (1, 4)
    assert clipped[0, 0] == 0.0 and clipped[0, 2] == 10.0


def rect_intersects(rect, box):
    rx, ry, rw, rh = rect
    x, y, w, h = box
    return rx < x + w and x < rx + rw and ry < y + h and y < ry + rh


def test_dropout_rectangles_never_touch_boxes():
    img = np.ones((FRAME_SIZE, FRAME_SIZE))
    boxes = np.array([[120.0, 140.0, 60.0, 50.0], [350.0, 300.0, 40.0, 40.0]])
    for seed in range(50):
        out = coarse_dropout(img, boxes, np.random.default_rng(seed))
        # zeroed pixels must avoid both boxes entirely
        for x, y, w, h in boxes:
            region = out[int(y) : int(y + h), int(x) : int(x + w)]
            assert region.min() == 1.0
        assert (out == 0).sum() > 0


def test_photometric_ops_preserve_range():
    img = checker_image(3)
    assert gamma_contrast(img, 1.2).max() <= 1.0
    noisy = gaussian_noise(img, np.random.default_rng(0))
    assert noisy.min() >= 0.0 and noisy.max() <= 1.0


def test_full_pipeline_deterministic_and_boxes_valid():
    img = checker_image(4)
    boxes = np.array([[100.0, 100.0, 50.0, 40.0]])
    cfg = AugmentConfig()
    out1 = augment_geometry(img, boxes, cfg, seed=77)
    out2 = augment_geometry(img, boxes, cfg, seed=77)
    np.testing.assert_array_equal(out1[0], out2[0])
    np.testing.assert_array_equal(out1[1], out2[1])
    for _ in range(10):
        _, bxs = augment_geometry(img, boxes, cfg, seed=np.random.randint(10 ** 6))
        if len(bxs):
            assert np.all(bxs[:, 2] > 0) and np.all(bxs[:, 3] > 0)
            assert np.all(bxs[:, 0] >= 0) and np.all(bxs[:, 0] + bxs[:, 2] <= FRAME_SIZE)
