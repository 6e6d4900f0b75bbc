"""Synthetic screening phantoms for desk-scale end-to-end runs.

A phantom volume is low-level noise plus a smooth tissue texture whose
bright fraction grows with the planted density rank; lesions render as
bright Gaussian blobs centered on their recorded boxes.  A phantom
dataset writes a manifest (exams with labels, outcomes, demographics and
box annotations), a records file for the risk task, and optionally the
pixel volumes themselves as binary tensors.

Everything is deterministic in the seed.
"""

from __future__ import annotations

from contextlib import nullcontext
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from ..embeddings.store import EmbeddingStore
from ..io.jsonio import write_json
from ..studies import (
    BoxAnnotation,
    Dataset,
    Demographics,
    DensityCategory,
    Exam,
    FRAME_SIZE,
    Outcome,
    ViewKind,
    VolumeRef,
    save_manifest,
)
from ..train.rng import derive_seed
from .prep import bilinear_resize

LESION_AMPLITUDE = 0.7
TEXTURE_AMPLITUDE = 0.35
BASE_LEVEL = 0.1
NOISE_SIGMA = 0.02
BASE_HAZARD = (0.010, 0.015, 0.020, 0.025, 0.030)


@dataclass
class PhantomSpec:
    n_slices: int = 6
    n_lesions: int = 1
    density_rank: int = 1
    hazard_profile: Sequence[float] = BASE_HAZARD
    # explicit (slice, x, y, w, h) boxes override random placement
    lesion_boxes: Optional[Sequence[tuple[int, float, float, float, float]]] = None


@dataclass
class Phantom:
    pixels: np.ndarray  # (n_slices, 518, 518) float32 in [0, 1]
    lesions: list[BoxAnnotation]
    density_rank: int
    hazard_profile: np.ndarray


def _texture(rng: np.random.Generator, rank: int) -> np.ndarray:
    """Smooth field thresholded so the bright fraction grows with rank."""
    coarse = rng.random((10, 10))
    smooth = bilinear_resize(coarse, FRAME_SIZE, FRAME_SIZE)
    fraction = 0.15 + 0.2 * rank
    cut = np.quantile(smooth, 1.0 - fraction)
    return np.where(smooth > cut, TEXTURE_AMPLITUDE, 0.0)


def _random_boxes(rng: np.random.Generator, count: int, n_slices: int):
    margin = 40.0
    boxes: list[tuple[int, float, float, float, float]] = []
    for _ in range(count):
        for _ in range(200):
            w = float(rng.uniform(28.0, 64.0))
            h = float(rng.uniform(28.0, 64.0))
            x = float(rng.uniform(margin, FRAME_SIZE - margin - w))
            y = float(rng.uniform(margin, FRAME_SIZE - margin - h))
            cx, cy = x + w / 2.0, y + h / 2.0
            far = all(
                np.hypot(cx - (bx + bw / 2.0), cy - (by + bh / 2.0)) >= 120.0
                for _, bx, by, bw, bh in boxes
            )
            if far:
                boxes.append((int(rng.integers(0, n_slices)), x, y, w, h))
                break
    return boxes


def _render_lesion(slice_px: np.ndarray, x: float, y: float, w: float, h: float) -> None:
    cx, cy = x + w / 2.0, y + h / 2.0
    sx, sy = w / 4.0, h / 4.0
    x0 = max(0, int(cx - 3 * sx))
    x1 = min(FRAME_SIZE, int(cx + 3 * sx) + 1)
    y0 = max(0, int(cy - 3 * sy))
    y1 = min(FRAME_SIZE, int(cy + 3 * sy) + 1)
    xs = np.arange(x0, x1) + 0.5
    ys = np.arange(y0, y1) + 0.5
    blob = LESION_AMPLITUDE * np.exp(
        -(
            (xs[None, :] - cx) ** 2 / (2.0 * sx * sx)
            + (ys[:, None] - cy) ** 2 / (2.0 * sy * sy)
        )
    )
    slice_px[y0:y1, x0:x1] += blob


def generate_phantom(
    seed: int, spec: PhantomSpec, ref: VolumeRef | None = None
) -> Phantom:
    """Render one volume; bit-identical for a fixed seed."""
    rng = np.random.default_rng(seed)
    ref = ref or VolumeRef("p0", "e0", ViewKind.LCC, spec.n_slices)
    boxes = (
        list(spec.lesion_boxes)
        if spec.lesion_boxes is not None
        else _random_boxes(rng, spec.n_lesions, spec.n_slices)
    )
    volume = np.empty((spec.n_slices, FRAME_SIZE, FRAME_SIZE), dtype=np.float64)
    for s in range(spec.n_slices):
        base = BASE_LEVEL + rng.normal(0.0, NOISE_SIGMA, size=(FRAME_SIZE, FRAME_SIZE))
        volume[s] = base + _texture(rng, spec.density_rank)
    lesions = []
    for slice_index, x, y, w, h in boxes:
        _render_lesion(volume[slice_index], x, y, w, h)
        lesions.append(
            BoxAnnotation(
                volume=ref, slice_index=int(slice_index), x=x, y=y, w=w, h=h,
                malignancy="cancer",
            )
        )
    np.clip(volume, 0.0, 1.0, out=volume)
    return Phantom(
        pixels=volume.astype(np.float32),
        lesions=lesions,
        density_rank=spec.density_rank,
        hazard_profile=np.asarray(spec.hazard_profile, dtype=np.float64),
    )


# --- dataset generation -------------------------------------------------------


@dataclass
class PhantomDatasetConfig:
    n_exams: int = 20
    slices_per_volume: int = 6
    views_per_exam: int = 4
    write_pixels: bool = False
    lesion_rate: float = 0.7
    max_lesions: int = 2
    event_rate: float = 0.15
    split_fractions: tuple[float, float, float] = (0.6, 0.2, 0.2)
    race_choices: tuple[str, ...] = ("White", "Black", "Asian", "Hispanic", "Declined")
    race_weights: tuple[float, ...] = (0.70, 0.10, 0.08, 0.06, 0.06)


def _split_assignments(rng: np.random.Generator, events: np.ndarray, fractions):
    """Per-exam split labels, stratified by event status."""
    labels = np.empty(len(events), dtype=object)
    for value in (True, False):
        idx = np.where(events == value)[0]
        idx = idx[rng.permutation(len(idx))]
        n = len(idx)
        n_train = int(round(fractions[0] * n))
        n_val = int(round(fractions[1] * n))
        labels[idx[:n_train]] = "train"
        labels[idx[n_train : n_train + n_val]] = "val"
        labels[idx[n_train + n_val :]] = "test"
    return labels


def generate_phantom_dataset(
    out_dir: str | Path, seed: int, cfg: PhantomDatasetConfig | None = None
) -> dict:
    """Write manifest.json, records.json and (optionally) pixel volumes."""
    cfg = cfg or PhantomDatasetConfig()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(derive_seed(seed, 0x9A17))

    events = rng.random(cfg.n_exams) < cfg.event_rate
    splits = _split_assignments(rng, events, cfg.split_fractions)

    exams: list[Exam] = []
    annotations: list[BoxAnnotation] = []
    records: list[dict] = []
    store = EmbeddingStore(out / "volumes") if cfg.write_pixels else None
    view_list = list(ViewKind)[: cfg.views_per_exam]

    with store.batch() if store is not None else nullcontext():
        _generate_exams(cfg, rng, seed, store, view_list, exams, annotations, records,
                        events, splits)

    manifest_path = out / "manifest.json"
    save_manifest(Dataset(exams=exams, annotations=annotations), manifest_path)
    records_path = out / "records.json"
    write_json(records_path, {"records": records})
    produced = {
        "manifest": str(manifest_path),
        "records": str(records_path),
    }
    if store is not None:
        produced["volumes"] = str(out / "volumes")
    return produced


def _generate_exams(cfg, rng, seed, store, view_list, exams, annotations, records,
                    events, splits):
    for i in range(cfg.n_exams):
        patient_id = f"P{i:05d}"
        exam_id = f"E{i:05d}"
        rank = i % 4
        profile = np.asarray(BASE_HAZARD) * (1.0 + 0.3 * rank)
        event = bool(events[i])
        if event:
            p = profile / profile.sum()
            event_year = int(rng.choice(np.arange(1, 6), p=p))
            followup = float(event_year)
        else:
            event_year = None
            followup = float(rng.uniform(1.0, 8.0))
        demo = Demographics(
            age_years=float(np.clip(rng.normal(60.0, 10.0), 35.0, 90.0)),
            race=str(rng.choice(cfg.race_choices, p=cfg.race_weights)),
        )
        views = {}
        for v, view in enumerate(view_list):
            ref = VolumeRef(
                patient_id=patient_id,
                exam_id=exam_id,
                view=view,
                n_slices=cfg.slices_per_volume,
                acquisition_date="2020-01-01",
            )
            views[view] = ref
            if store is not None:
                with_lesions = rng.random() < cfg.lesion_rate
                spec = PhantomSpec(
                    n_slices=cfg.slices_per_volume,
                    n_lesions=int(rng.integers(1, cfg.max_lesions + 1)) if with_lesions else 0,
                    density_rank=rank,
                    hazard_profile=profile,
                )
                phantom = generate_phantom(derive_seed(seed, i, v), spec, ref)
                store.write(ref.key(), phantom.pixels)
                annotations.extend(phantom.lesions)
        exams.append(
            Exam(
                exam_id=exam_id,
                patient_id=patient_id,
                views=views,
                demographics=demo,
                density=DensityCategory.from_rank(rank),
                outcome=Outcome(event=event, event_year=event_year, followup_years=followup),
                split=str(splits[i]),
            )
        )
        records.append(
            {
                "exam_id": exam_id,
                "patient_id": patient_id,
                "event": event,
                "event_year": event_year,
                "followup_years": followup,
                "density": "ABCD"[rank],
                "split": str(splits[i]),
            }
        )
