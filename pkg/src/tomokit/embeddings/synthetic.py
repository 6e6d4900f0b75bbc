"""Synthetic embedding generation.

Two providers stand in for a frozen vision backbone at desk scale:

* :func:`synthesize_embeddings` draws class-conditional Gaussian tokens
  whose means encode the planted labels (density rank, cancer-by-year-5),
  with Bayes separability controlled by the separation knobs.  Separation
  0 gives pure noise; separation much larger than the noise scale yields
  linearly separable study features.

* :func:`patch_descriptor_grid` turns real pixels (phantom slices) into
  token grids by computing simple intensity statistics per 14 x 14 patch,
  so the detection stack can run end-to-end on rendered volumes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..studies import Dataset, Exam
from ..train.rng import derive_seed
from .store import EmbeddingStore
from .tokens import CANONICAL_DIM, CANONICAL_GRID, TokenGrid

PATCH_SIZE = 14


@dataclass
class SignalSpec:
    """Token geometry and label-to-mean mapping for synthetic embeddings."""

    dim: int = 32
    patches: int = 16
    slices_per_view: int = 2
    noise: float = 1.0
    density_separation: float = 0.0
    risk_separation: float = 0.0
    # Optional per-density-rank override of the risk separation, used to
    # plant subgroup performance gaps.
    risk_separation_by_rank: Sequence[float] | None = None


def _unit_rows(rng: np.random.Generator, n: int, dim: int) -> np.ndarray:
    m = rng.normal(size=(n, dim))
    return m / np.linalg.norm(m, axis=1, keepdims=True)


def _exam_mean(exam: Exam, spec: SignalSpec, density_dirs, risk_dir) -> np.ndarray:
    mean = np.zeros(spec.dim)
    if exam.density is not None and spec.density_separation != 0.0:
        mean = mean + spec.density_separation * density_dirs[exam.density.rank]
    if exam.outcome is not None and exam.outcome.event:
        sep = spec.risk_separation
        if spec.risk_separation_by_rank is not None and exam.density is not None:
            sep = spec.risk_separation_by_rank[exam.density.rank]
        mean = mean + sep * risk_dir
    return mean


def synthesize_embeddings(
    store: EmbeddingStore, dataset: Dataset, spec: SignalSpec, seed: int
) -> int:
    """Fill the store with one token tensor per (exam, view); returns count.

    Deterministic for a fixed seed: directions and per-volume draws use
    seeds derived from (seed, exam index, view index), independent of
    iteration order.
    """
    dir_rng = np.random.default_rng(derive_seed(seed, 0xD17))
    density_dirs = _unit_rows(dir_rng, 4, spec.dim)
    risk_dir = _unit_rows(dir_rng, 1, spec.dim)[0]
    written = 0
    exams = sorted(dataset.exams, key=lambda e: (e.patient_id, e.exam_id))
    with store.batch():
        for exam_index, exam in enumerate(exams):
            mean = _exam_mean(exam, spec, density_dirs, risk_dir)
            for view_index, (view, ref) in enumerate(sorted(exam.views.items())):
                rng = np.random.default_rng(derive_seed(seed, exam_index, view_index))
                n_slices = spec.slices_per_view
                tokens = rng.normal(
                    0.0, spec.noise, size=(n_slices, 1 + spec.patches, spec.dim)
                ) + mean
                store.write(ref.key(), tokens.astype(np.float32))
                written += 1
    return written


# --- pixel-driven token grids (detection path) --------------------------------


def patch_descriptor_grid(pixels: np.ndarray) -> TokenGrid:
    """Token grid from one 518 x 518 slice via per-patch intensity statistics.

    Each 14 x 14 patch yields mean/std/min/max, the intensity-weighted
    centroid offset within the patch, a mean gradient magnitude, and a
    7 x 7 grid of block means.  Features occupy the first channels of the
    canonical 768-dim token; the remainder is zero.
    """
    px = np.asarray(pixels, dtype=np.float64)
    g = CANONICAL_GRID
    p = PATCH_SIZE
    if px.shape != (g * p, g * p):
        raise ValueError(f"expected {(g * p, g * p)} pixels, got {px.shape}")
    patches = px.reshape(g, p, g, p).transpose(0, 2, 1, 3).reshape(g * g, p, p)

    mean = patches.mean(axis=(1, 2))
    std = patches.std(axis=(1, 2))
    pmin = patches.min(axis=(1, 2))
    pmax = patches.max(axis=(1, 2))

    coords = (np.arange(p) - (p - 1) / 2.0) / p
    weight = patches - pmin[:, None, None] + 1e-9
    total = weight.sum(axis=(1, 2))
    cx = (weight.sum(axis=1) @ coords) / total
    cy = (weight.sum(axis=2) @ coords) / total

    grad = 0.5 * (
        np.abs(np.diff(patches, axis=1)).mean(axis=(1, 2))
        + np.abs(np.diff(patches, axis=2)).mean(axis=(1, 2))
    )

    blocks = patches.reshape(g * g, 7, 2, 7, 2).mean(axis=(2, 4)).reshape(g * g, 49)

    feats = np.concatenate(
        [
            np.stack([mean, std, pmin, pmax, cx, cy, grad], axis=1),
            blocks,
        ],
        axis=1,
    )
    out = np.zeros((g * g, CANONICAL_DIM))
    out[:, : feats.shape[1]] = feats

    cls = np.zeros(CANONICAL_DIM)
    cls[:4] = [px.mean(), px.std(), px.min(), px.max()]
    return TokenGrid(cls=cls, patches=out)


def volume_token_grids(volume: np.ndarray) -> list[TokenGrid]:
    """Descriptor grids for every slice of an (n_slices, 518, 518) volume."""
    return [patch_descriptor_grid(sl) for sl in np.asarray(volume, dtype=np.float64)]
