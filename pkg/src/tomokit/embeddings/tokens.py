"""Per-slice token grids and their study-level aggregation.

A backbone encodes each 2D slice into one CLS vector plus a square grid
of patch vectors (canonically 37 x 37 = 1369 patches of dimension 768
for 518 x 518 inputs with patch size 14).  Aggregation reduces a stack
of slices to a per-view vector, and the four views concatenate in a
fixed order into the study feature vector.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from ..errors import DimMismatch, EmptyInput, MissingView
from ..studies import VIEW_ORDER, ViewKind

CANONICAL_DIM = 768
CANONICAL_GRID = 37          # 518 / 14
CANONICAL_PATCHES = CANONICAL_GRID * CANONICAL_GRID  # 1369


@dataclass(frozen=True)
class TokenGrid:
    """Token outputs for one slice: cls (D,), patches (P, D) row-major."""

    cls: np.ndarray
    patches: np.ndarray

    def __post_init__(self):
        cls = np.asarray(self.cls, dtype=np.float64)
        patches = np.asarray(self.patches, dtype=np.float64)
        if cls.ndim != 1 or patches.ndim != 2:
            raise DimMismatch("cls must be 1-d and patches 2-d")
        if patches.shape[1] != cls.shape[0]:
            raise DimMismatch("patches and cls disagree on feature dimension")
        if not (np.all(np.isfinite(cls)) and np.all(np.isfinite(patches))):
            raise ValueError("token entries must be finite")
        object.__setattr__(self, "cls", cls)
        object.__setattr__(self, "patches", patches)

    @property
    def dim(self) -> int:
        return self.cls.shape[0]


class AggregationMode(str, Enum):
    """How slice tokens reduce to one per-view vector."""

    CLS_MEAN = "cls-mean"
    CLS_MEAN_STD = "cls-mean-std"
    PATCH_MEAN = "patch-mean"
    PATCH_MEAN_STD = "patch-mean-std"

    @property
    def uses_std(self) -> bool:
        return self in (AggregationMode.CLS_MEAN_STD, AggregationMode.PATCH_MEAN_STD)

    def output_dim(self, dim: int) -> int:
        return 2 * dim if self.uses_std else dim


def aggregate_view(slices: Sequence[TokenGrid], mode: AggregationMode) -> np.ndarray:
    """Per-feature mean (and optionally population std) across a view's tokens.

    CLS modes pool the per-slice CLS vectors; PATCH modes pool every patch
    token of every slice.  Std divides by N, so a single pooled token gives
    std 0.
    """
    if len(slices) == 0:
        raise EmptyInput("aggregate_view requires at least one slice")
    dim = slices[0].dim
    for grid in slices[1:]:
        if grid.dim != dim:
            raise DimMismatch("all slices must share the feature dimension")
    if mode in (AggregationMode.CLS_MEAN, AggregationMode.CLS_MEAN_STD):
        tokens = np.stack([g.cls for g in slices], axis=0)
    else:
        tokens = np.concatenate([g.patches for g in slices], axis=0)
    mean = tokens.mean(axis=0)
    if not mode.uses_std:
        return mean
    std = tokens.std(axis=0)  # population (1/N) convention
    return np.concatenate([mean, std])


def assemble_study(views: Mapping[ViewKind, np.ndarray]) -> np.ndarray:
    """Concatenate per-view vectors in the fixed order LCC, RCC, LMLO, RMLO."""
    missing = [v.value for v in VIEW_ORDER if v not in views]
    if missing:
        raise MissingView(f"missing views: {', '.join(missing)}")
    vectors = [np.asarray(views[v], dtype=np.float64) for v in VIEW_ORDER]
    dim = vectors[0].shape[0]
    for vec in vectors:
        if vec.ndim != 1 or vec.shape[0] != dim:
            raise DimMismatch("all view vectors must be 1-d with equal length")
    return np.concatenate(vectors)
