"""Multi-scale anchor generation over the four-level feature pyramid.

Levels P3..P6 have grids 74, 37, 18 and 9 on a side with base anchor
sizes 16, 32, 64 and 128 px.  Every location carries 9 anchors from
3 aspect ratios x 3 scales.  For ratio r = h/w and scale s on a level
with base b, the anchor has area (b*s)^2 with w = sqrt(area / r) and
h = r * w, centered at ((j + 0.5) * stride, (i + 0.5) * stride) where
stride = 518 / grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..studies import FRAME_SIZE

RATIOS = (0.5, 1.0, 2.0)
SCALES = (1.0, 1.26, 1.587)


@dataclass(frozen=True)
class PyramidSpec:
    """Grid sizes, base anchor sizes and channel width of the pyramid."""

    sizes: tuple[int, ...] = (74, 37, 18, 9)
    bases: tuple[float, ...] = (16.0, 32.0, 64.0, 128.0)
    channels: int = 256
    ratios: tuple[float, ...] = RATIOS
    scales: tuple[float, ...] = SCALES

    @property
    def strides(self) -> tuple[float, ...]:
        return tuple(FRAME_SIZE / s for s in self.sizes)

    @property
    def level_names(self) -> tuple[str, ...]:
        return tuple(f"P{i + 3}" for i in range(len(self.sizes)))

    @property
    def anchors_per_location(self) -> int:
        return len(self.ratios) * len(self.scales)

    @property
    def n_locations(self) -> int:
        return sum(s * s for s in self.sizes)

    @property
    def n_anchors(self) -> int:
        return self.anchors_per_location * self.n_locations


@dataclass(frozen=True)
class AnchorSet:
    """All anchors as (cx, cy, w, h), location-major then ratio then scale."""

    spec: PyramidSpec
    boxes: np.ndarray = field(repr=False)
    level_offsets: tuple[int, ...] = ()

    def level_slice(self, level: int) -> slice:
        start = self.level_offsets[level]
        end = (
            self.level_offsets[level + 1]
            if level + 1 < len(self.level_offsets)
            else len(self.boxes)
        )
        return slice(start, end)


def anchor_shapes(base: float, ratios=RATIOS, scales=SCALES) -> np.ndarray:
    """(w, h) for the 9 anchors of one level, ratio-major then scale."""
    shapes = []
    for r in ratios:
        for s in scales:
            area = (base * s) ** 2
            w = np.sqrt(area / r)
            shapes.append((w, r * w))
    return np.asarray(shapes, dtype=np.float64)


def generate_anchors(spec: PyramidSpec = PyramidSpec()) -> AnchorSet:
    """Anchor boxes for every level; order is documented on AnchorSet."""
    per_level = []
    offsets = []
    total = 0
    for size, base, stride in zip(spec.sizes, spec.bases, spec.strides):
        shapes = anchor_shapes(base, spec.ratios, spec.scales)
        centers = (np.arange(size) + 0.5) * stride
        cy, cx = np.meshgrid(centers, centers, indexing="ij")
        locs = np.stack([cx.ravel(), cy.ravel()], axis=1)
        k = len(shapes)
        boxes = np.empty((size * size * k, 4))
        boxes[:, :2] = np.repeat(locs, k, axis=0)
        boxes[:, 2:] = np.tile(shapes, (size * size, 1))
        offsets.append(total)
        total += len(boxes)
        per_level.append(boxes)
    return AnchorSet(
        spec=spec,
        boxes=np.concatenate(per_level, axis=0),
        level_offsets=tuple(offsets),
    )
