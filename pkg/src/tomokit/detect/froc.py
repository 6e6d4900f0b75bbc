"""Free-response ROC over volumes with a center-distance match rule.

A prediction is a true positive when its center lies within
max(diagonal(gt) / 2, 20 px) of an unmatched ground-truth lesion center;
each lesion matches at most one prediction.  Predictions are processed in
descending score (ties by volume id, then x, y, slice), which makes the
TP/FP status of each prediction independent of the score threshold, so
the full curve falls out of one greedy pass.

sensitivity(f) is the best TP fraction over thresholds whose mean false
positives per volume stay at or below f.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ..errors import NoVolumes
from .boxes import Detection

MIN_MATCH_RADIUS = 20.0


def match_radius(w: float, h: float) -> float:
    """Half the gt box diagonal, floored at 20 px."""
    return max(0.5 * math.hypot(w, h), MIN_MATCH_RADIUS)


@dataclass(frozen=True)
class GroundTruthBox:
    x: float
    y: float
    w: float
    h: float
    slice_index: int = 0

    @property
    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)


@dataclass
class FrocResult:
    fp_points: list[float]
    sensitivities: list[float]
    average_sensitivity: float
    n_volumes: int
    n_lesions: int
    # (threshold, mean fp/volume, sensitivity) at every distinct score
    curve: list[tuple[float, float, float]] = field(default_factory=list)


def _greedy_flags(
    gt: Mapping[str, Sequence[GroundTruthBox]],
    predictions: Mapping[str, Sequence[Detection]],
) -> tuple[list[tuple[float, bool]], int]:
    """(score, is_tp) per prediction in global processing order, plus lesion count."""
    order = []
    for vol_id in sorted(predictions):
        for det in predictions[vol_id]:
            order.append((-det.score, vol_id, det.x, det.y, det.slice_index, det))
    order.sort(key=lambda t: t[:5])
    matched: dict[str, list[bool]] = {v: [False] * len(b) for v, b in gt.items()}
    flags: list[tuple[float, bool]] = []
    for _, vol_id, _, _, _, det in order:
        boxes = gt.get(vol_id, ())
        best = None
        cx, cy = det.center
        for i, box in enumerate(boxes):
            if matched[vol_id][i]:
                continue
            gx, gy = box.center
            dist = math.hypot(cx - gx, cy - gy)
            if dist <= match_radius(box.w, box.h) and (best is None or dist < best[0]):
                best = (dist, i)
        if best is not None:
            matched[vol_id][best[1]] = True
            flags.append((det.score, True))
        else:
            flags.append((det.score, False))
    n_lesions = sum(len(b) for b in gt.values())
    return flags, n_lesions


def froc(
    gt: Mapping[str, Sequence[GroundTruthBox]],
    predictions: Mapping[str, Sequence[Detection]],
    fp_points: Sequence[float] = (1.0, 2.0, 3.0, 4.0),
) -> FrocResult:
    """Sensitivity at each allowed FP/volume plus their mean.

    gt maps volume id -> lesion boxes; volumes with no lesions still count
    toward the FP denominator.  Every distinct prediction score is a
    candidate threshold (no binning).
    """
    n_volumes = len(gt)
    if n_volumes == 0:
        raise NoVolumes("froc needs at least one volume")
    flags, n_lesions = _greedy_flags(gt, predictions)

    curve: list[tuple[float, float, float]] = []
    sens_at: list[float] = [0.0 for _ in fp_points]
    tp = fp = 0
    i = 0
    while i < len(flags):
        j = i
        while j < len(flags) and flags[j][0] == flags[i][0]:
            tp += flags[j][1]
            fp += not flags[j][1]
            j += 1
        threshold = flags[i][0]
        mean_fp = fp / n_volumes
        sensitivity = tp / n_lesions if n_lesions else 0.0
        curve.append((threshold, mean_fp, sensitivity))
        for k, allowed in enumerate(fp_points):
            if mean_fp <= allowed and sensitivity > sens_at[k]:
                sens_at[k] = sensitivity
        i = j
    average = float(np.mean(sens_at)) if fp_points else 0.0
    return FrocResult(
        fp_points=list(fp_points),
        sensitivities=sens_at,
        average_sensitivity=average,
        n_volumes=n_volumes,
        n_lesions=n_lesions,
        curve=curve,
    )
