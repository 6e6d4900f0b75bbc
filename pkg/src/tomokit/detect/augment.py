"""Box-aware training augmentations on 518 x 518 slices.

Flips mirror box coordinates, zoom rescales about the image center and
rejects factor draws whose post-zoom box sizes leave the allowed range,
coarse dropout rectangles are rejection-sampled so they never intersect a
ground-truth box, and the photometric ops (gamma contrast, Gaussian
noise) leave boxes untouched.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..studies import FRAME_SIZE

ZOOM_RANGE = (0.8, 1.5)
ZOOM_W_RANGE = (15.0, 206.0)
ZOOM_H_RANGE = (9.0, 182.0)
DROPOUT_COUNT = (15, 20)
DROPOUT_SIZE = (20, 40)


def flip_horizontal(image: np.ndarray, boxes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    boxes = np.asarray(boxes, dtype=np.float64).reshape(-1, 4).copy()
    boxes[:, 0] = FRAME_SIZE - boxes[:, 0] - boxes[:, 2]
    return image[:, ::-1].copy(), boxes


def flip_vertical(image: np.ndarray, boxes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    boxes = np.asarray(boxes, dtype=np.float64).reshape(-1, 4).copy()
    boxes[:, 1] = FRAME_SIZE - boxes[:, 1] - boxes[:, 3]
    return image[::-1].copy(), boxes


def zoom_boxes(boxes: np.ndarray, factor: float) -> np.ndarray:
    """Boxes rescaled about the frame center by the zoom factor."""
    boxes = np.asarray(boxes, dtype=np.float64).reshape(-1, 4)
    c = FRAME_SIZE / 2.0
    out = np.empty_like(boxes)
    out[:, 0] = c + factor * (boxes[:, 0] - c)
    out[:, 1] = c + factor * (boxes[:, 1] - c)
    out[:, 2] = factor * boxes[:, 2]
    out[:, 3] = factor * boxes[:, 3]
    return out


def zoom_factor_ok(boxes: np.ndarray, factor: float) -> bool:
    """Post-zoom sizes must stay within the allowed width/height windows."""
    if len(boxes) == 0:
        return True
    scaled = zoom_boxes(boxes, factor)
    return bool(
        np.all((scaled[:, 2] >= ZOOM_W_RANGE[0]) & (scaled[:, 2] <= ZOOM_W_RANGE[1]))
        and np.all((scaled[:, 3] >= ZOOM_H_RANGE[0]) & (scaled[:, 3] <= ZOOM_H_RANGE[1]))
    )


def zoom_image(image: np.ndarray, factor: float) -> np.ndarray:
    """Bilinear resample about the center; out-of-frame source reads clamp."""
    image = np.asarray(image, dtype=np.float64)
    h, w = image.shape
    c = FRAME_SIZE / 2.0
    # output pixel center (i + 0.5) maps back to c + (i + 0.5 - c) / factor
    coords = c + (np.arange(FRAME_SIZE) + 0.5 - c) / factor - 0.5
    sy = np.clip(coords, 0.0, h - 1.0)
    sx = np.clip(coords, 0.0, w - 1.0)
    y0 = np.floor(sy).astype(np.int64)
    x0 = np.floor(sx).astype(np.int64)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = (sy - y0)[:, None]
    fx = (sx - x0)[None, :]
    top = (1.0 - fx) * image[np.ix_(y0, x0)] + fx * image[np.ix_(y0, x1)]
    bottom = (1.0 - fx) * image[np.ix_(y1, x0)] + fx * image[np.ix_(y1, x1)]
    return (1.0 - fy) * top + fy * bottom


def clip_boxes(boxes: np.ndarray) -> np.ndarray:
    """Clip boxes to the frame; rows that end up empty are removed."""
    boxes = np.asarray(boxes, dtype=np.float64).reshape(-1, 4)
    x1 = np.clip(boxes[:, 0], 0.0, FRAME_SIZE)
    y1 = np.clip(boxes[:, 1], 0.0, FRAME_SIZE)
    x2 = np.clip(boxes[:, 0] + boxes[:, 2], 0.0, FRAME_SIZE)
    y2 = np.clip(boxes[:, 1] + boxes[:, 3], 0.0, FRAME_SIZE)
    out = np.stack([x1, y1, x2 - x1, y2 - y1], axis=1)
    return out[(out[:, 2] > 0) & (out[:, 3] > 0)]


def _intersects(rect: tuple[int, int, int, int], boxes: np.ndarray) -> bool:
    rx, ry, rw, rh = rect
    for x, y, w, h in boxes:
        if rx < x + w and x < rx + rw and ry < y + h and y < ry + rh:
            return True
    return False


def coarse_dropout(
    image: np.ndarray,
    boxes: np.ndarray,
    rng: np.random.Generator,
    max_tries: int = 100,
) -> np.ndarray:
    """Zero out 15-20 rectangles of 20-40 px a side, never touching a box."""
    image = np.asarray(image, dtype=np.float64).copy()
    boxes = np.asarray(boxes, dtype=np.float64).reshape(-1, 4)
    count = int(rng.integers(DROPOUT_COUNT[0], DROPOUT_COUNT[1] + 1))
    for _ in range(count):
        for _ in range(max_tries):
            rw = int(rng.integers(DROPOUT_SIZE[0], DROPOUT_SIZE[1] + 1))
            rh = int(rng.integers(DROPOUT_SIZE[0], DROPOUT_SIZE[1] + 1))
            rx = int(rng.integers(0, FRAME_SIZE - rw + 1))
            ry = int(rng.integers(0, FRAME_SIZE - rh + 1))
            if not _intersects((rx, ry, rw, rh), boxes):
                image[ry : ry + rh, rx : rx + rw] = 0.0
                break
    return image


def gamma_contrast(image: np.ndarray, gamma: float) -> np.ndarray:
    return np.clip(np.asarray(image, dtype=np.float64), 0.0, 1.0) ** gamma


def gaussian_noise(image: np.ndarray, rng: np.random.Generator, sigma: float = 0.05) -> np.ndarray:
    noisy = np.asarray(image, dtype=np.float64) + rng.normal(0.0, sigma, size=image.shape)
    return np.clip(noisy, 0.0, 1.0)


@dataclass
class AugmentConfig:
    p_flip_h: float = 0.5
    p_flip_v: float = 0.5
    p_zoom: float = 0.5
    p_dropout: float = 0.3
    p_contrast: float = 0.3
    p_noise: float = 0.3
    noise_sigma: float = 0.05
    gamma_range: tuple[float, float] = (0.8, 1.2)
    zoom_tries: int = 20


def augment_geometry(
    image: np.ndarray,
    boxes: np.ndarray,
    cfg: AugmentConfig,
    seed: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Apply the full seeded augmentation pipeline to one slice."""
    rng = np.random.default_rng(seed)
    image = np.asarray(image, dtype=np.float64)
    boxes = np.asarray(boxes, dtype=np.float64).reshape(-1, 4)
    if rng.random() < cfg.p_flip_h:
        image, boxes = flip_horizontal(image, boxes)
    if rng.random() < cfg.p_flip_v:
        image, boxes = flip_vertical(image, boxes)
    if rng.random() < cfg.p_zoom:
        for _ in range(cfg.zoom_tries):
            factor = float(rng.uniform(*ZOOM_RANGE))
            if zoom_factor_ok(boxes, factor):
                image = zoom_image(image, factor)
                boxes = clip_boxes(zoom_boxes(boxes, factor))
                break
    if rng.random() < cfg.p_dropout:
        image = coarse_dropout(image, boxes, rng)
    if rng.random() < cfg.p_contrast:
        image = gamma_contrast(image, float(rng.uniform(*cfg.gamma_range)))
    if rng.random() < cfg.p_noise:
        image = gaussian_noise(image, rng, cfg.noise_sigma)
    return image, boxes
