"""IoU-based anchor assignment with forced best matches and negative sampling.

Labels per anchor: gt index >= 0 for positives, NEGATIVE (-1) for sampled
negatives, IGNORE (-2) for everything else.  Rules, applied in order:

1. An anchor with max IoU >= pos_thr is positive for its argmax gt
   (first gt wins ties).
2. An anchor with max IoU < neg_thr is a negative candidate.
3. The best anchor of every gt is forced positive even below pos_thr;
   when two gts claim the same anchor the higher IoU wins, ties going to
   the lower gt index.
4. Negative candidates are subsampled uniformly (seeded) down to
   ratio * |positives|; unsampled candidates are ignored.
"""

from __future__ import annotations

import numpy as np

from ..train.rng import Xoshiro256
from .boxes import cxcywh_to_xywh, iou_matrix

NEGATIVE = -1
IGNORE = -2


def base_assignment(
    anchors_cxcywh: np.ndarray,
    gt_boxes_xywh: np.ndarray,
    pos_thr: float,
    neg_thr: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic part of the assignment: (labels, negative candidates).

    Returned labels hold positives and IGNORE only; negatives are sampled
    separately so the expensive IoU pass can be cached across epochs.
    """
    if not neg_thr < pos_thr:
        raise ValueError("neg_thr must be strictly below pos_thr")
    anchors = np.asarray(anchors_cxcywh, dtype=np.float64).reshape(-1, 4)
    gts = np.asarray(gt_boxes_xywh, dtype=np.float64).reshape(-1, 4)
    n = len(anchors)
    labels = np.full(n, IGNORE, dtype=np.int64)
    if len(gts) == 0:
        return labels, np.arange(n)

    overlaps = iou_matrix(cxcywh_to_xywh(anchors), gts)
    best_iou = overlaps.max(axis=1)
    best_gt = overlaps.argmax(axis=1)

    labels[best_iou >= pos_thr] = best_gt[best_iou >= pos_thr]
    negative_candidates = np.where(best_iou < neg_thr)[0]

    # forced matches: one best anchor per gt, collisions resolved by IoU
    claims: dict[int, tuple[float, int]] = {}
    for g in range(len(gts)):
        a = int(overlaps[:, g].argmax())
        score = overlaps[a, g]
        held = claims.get(a)
        if held is None or score > held[0]:
            claims[a] = (score, g)
    for a, (_, g) in claims.items():
        labels[a] = g

    negative_candidates = negative_candidates[labels[negative_candidates] < 0]
    return labels, negative_candidates


def sample_negatives(
    labels: np.ndarray,
    candidates: np.ndarray,
    neg_pos_ratio: float,
    seed: int,
) -> np.ndarray:
    """Copy of labels with ratio * |positives| candidates marked negative."""
    out = labels.copy()
    n_pos = int((out >= 0).sum())
    k = int(round(neg_pos_ratio * n_pos))
    out[_sample(candidates, k, seed)] = NEGATIVE
    return out


def assign_anchors(
    anchors_cxcywh: np.ndarray,
    gt_boxes_xywh: np.ndarray,
    pos_thr: float,
    neg_thr: float,
    neg_pos_ratio: float,
    seed: int = 0,
) -> np.ndarray:
    labels, candidates = base_assignment(anchors_cxcywh, gt_boxes_xywh, pos_thr, neg_thr)
    return sample_negatives(labels, candidates, neg_pos_ratio, seed)


def _sample(candidates: np.ndarray, k: int, seed: int) -> np.ndarray:
    if k >= len(candidates):
        return candidates
    if k <= 0:
        return candidates[:0]
    rng = Xoshiro256(seed)
    take = rng.sample_without_replacement(len(candidates), k)
    return candidates[np.asarray(sorted(take), dtype=np.int64)]
