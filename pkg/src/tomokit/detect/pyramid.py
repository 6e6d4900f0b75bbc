"""Feature pyramid over the native 37 x 37 token grid.

A per-location linear projection reduces 768-dim tokens to 256 channels
(P4).  P3 doubles the resolution by bilinear upsampling with half-pixel
centers, P5 is a 2 x 2 max pool (floor, 37 -> 18) and P6 a stride-2
2 x 2 mean reduction of P5 (18 -> 9).  Everything is deterministic and,
with a frozen projection, cacheable per slice.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..embeddings.tokens import CANONICAL_DIM, CANONICAL_GRID, TokenGrid
from ..errors import BadGrid
from .anchors import PyramidSpec


@dataclass
class ProjectionParams:
    """1 x 1 projection from backbone channels to pyramid channels."""

    weight: np.ndarray  # (channels, backbone_dim)
    bias: np.ndarray  # (channels,)

    @classmethod
    def seeded(
        cls, seed: int, channels: int = 256, backbone_dim: int = CANONICAL_DIM
    ) -> "ProjectionParams":
        rng = np.random.default_rng(seed)
        scale = 1.0 / np.sqrt(backbone_dim)
        return cls(
            weight=rng.normal(0.0, scale, size=(channels, backbone_dim)),
            bias=np.zeros(channels),
        )


def _upsample2x_bilinear(grid: np.ndarray) -> np.ndarray:
    """(H, W, C) -> (2H, 2W, C) bilinear with half-pixel centers."""
    h, w, _ = grid.shape
    out_h, out_w = 2 * h, 2 * w
    sy = np.clip((np.arange(out_h) + 0.5) * h / out_h - 0.5, 0.0, h - 1.0)
    sx = np.clip((np.arange(out_w) + 0.5) * w / out_w - 0.5, 0.0, w - 1.0)
    y0 = np.floor(sy).astype(np.int64)
    x0 = np.floor(sx).astype(np.int64)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = (sy - y0)[:, None, None]
    fx = (sx - x0)[None, :, None]
    top = (1.0 - fx) * grid[y0][:, x0] + fx * grid[y0][:, x1]
    bottom = (1.0 - fx) * grid[y1][:, x0] + fx * grid[y1][:, x1]
    return (1.0 - fy) * top + fy * bottom


def _pool2x(grid: np.ndarray, op: str) -> np.ndarray:
    """2 x 2 stride-2 reduction (floor) of an (H, W, C) grid."""
    h, w, c = grid.shape
    hh, ww = h // 2, w // 2
    view = grid[: hh * 2, : ww * 2].reshape(hh, 2, ww, 2, c)
    return view.max(axis=(1, 3)) if op == "max" else view.mean(axis=(1, 3))


def build_pyramid(
    grid: TokenGrid | np.ndarray,
    proj: ProjectionParams,
    spec: PyramidSpec = PyramidSpec(),
) -> dict[str, np.ndarray]:
    """Level name -> (H, W, channels) features for one slice."""
    if isinstance(grid, TokenGrid):
        patches = grid.patches
    else:
        patches = np.asarray(grid, dtype=np.float64)
        if patches.ndim == 3:
            patches = patches.reshape(-1, patches.shape[-1])
    g = CANONICAL_GRID
    if patches.shape[0] != g * g:
        raise BadGrid(f"expected {g * g} patch tokens, got {patches.shape[0]}")
    if patches.shape[1] != proj.weight.shape[1]:
        raise BadGrid("token dimension does not match the projection")
    p4 = (patches @ proj.weight.T + proj.bias).reshape(g, g, -1)
    p3 = _upsample2x_bilinear(p4)
    p5 = _pool2x(p4, "max")
    p6 = _pool2x(p5, "mean")
    levels = {"P3": p3, "P4": p4, "P5": p5, "P6": p6}
    for name, size in zip(spec.level_names, spec.sizes):
        got = levels[name].shape[:2]
        if got != (size, size):
            raise BadGrid(f"{name} has shape {got}, expected {(size, size)}")
    return levels


def flatten_pyramid(levels: dict[str, np.ndarray], spec: PyramidSpec = PyramidSpec()) -> np.ndarray:
    """Concatenate level features row-major into (n_locations, channels)."""
    parts = [levels[name].reshape(-1, levels[name].shape[-1]) for name in spec.level_names]
    return np.concatenate(parts, axis=0)
