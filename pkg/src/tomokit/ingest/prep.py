"""Pixel preparation: bilinear resize to 518 x 518 and min-max normalization.

The resize uses the half-pixel-center convention: output pixel j samples
the source at (j + 0.5) * in / out - 0.5, clamped to the valid range, so
the transform is reproducible bit-comparably from the formula alone and a
518 -> 518 resize is the identity.  Normalization is per image,
(v - min) / (max - min), with constant images mapping to all zeros, which
makes the result invariant under positive affine rescaling of the input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import EmptyImage

TARGET = 518


@dataclass(frozen=True)
class PreparedSlice:
    """518 x 518 pixels in [0, 1]."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float64)
        if px.shape != (TARGET, TARGET):
            raise ValueError(f"prepared slice must be {TARGET} x {TARGET}")
        if px.min() < 0.0 or px.max() > 1.0:
            raise ValueError("prepared pixels must lie in [0, 1]")
        object.__setattr__(self, "pixels", px)


def bilinear_resize(image: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Half-pixel-center bilinear resampling with edge clamping."""
    img = np.asarray(image, dtype=np.float64)
    in_h, in_w = img.shape
    sy = np.clip((np.arange(out_h) + 0.5) * in_h / out_h - 0.5, 0.0, in_h - 1.0)
    sx = np.clip((np.arange(out_w) + 0.5) * in_w / out_w - 0.5, 0.0, in_w - 1.0)
    y0 = np.floor(sy).astype(np.int64)
    x0 = np.floor(sx).astype(np.int64)
    y1 = np.minimum(y0 + 1, in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    fy = (sy - y0)[:, None]
    fx = (sx - x0)[None, :]
    top = (1.0 - fx) * img[np.ix_(y0, x0)] + fx * img[np.ix_(y0, x1)]
    bottom = (1.0 - fx) * img[np.ix_(y1, x0)] + fx * img[np.ix_(y1, x1)]
    return (1.0 - fy) * top + fy * bottom


def minmax_normalize(image: np.ndarray) -> np.ndarray:
    """(v - min) / (max - min); a constant image maps to all zeros."""
    img = np.asarray(image, dtype=np.float64)
    lo = img.min()
    hi = img.max()
    if hi == lo:
        return np.zeros_like(img)
    return (img - lo) / (hi - lo)


def prepare_slice(raw: np.ndarray) -> PreparedSlice:
    """Resize then normalize one raw slice."""
    img = np.asarray(raw, dtype=np.float64)
    if img.ndim != 2 or img.size == 0:
        raise EmptyImage(f"expected a nonempty 2-d image, got shape {img.shape}")
    if not np.all(np.isfinite(img)):
        raise EmptyImage("image contains non-finite pixels")
    resized = bilinear_resize(img, TARGET, TARGET)
    return PreparedSlice(pixels=minmax_normalize(resized))
