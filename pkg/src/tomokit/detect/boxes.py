"""Box geometry: IoU, delta encoding, NMS and slice-to-volume pooling.

Boxes are (x, y, w, h) in the 518 x 518 frame unless noted; anchors are
(cx, cy, w, h).  All functions are pure numpy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateAnchor


def xywh_to_corners(boxes: np.ndarray) -> np.ndarray:
    boxes = np.asarray(boxes, dtype=np.float64).reshape(-1, 4)
    out = boxes.copy()
    out[:, 2] = boxes[:, 0] + boxes[:, 2]
    out[:, 3] = boxes[:, 1] + boxes[:, 3]
    return out


def cxcywh_to_xywh(boxes: np.ndarray) -> np.ndarray:
    boxes = np.asarray(boxes, dtype=np.float64).reshape(-1, 4)
    out = boxes.copy()
    out[:, 0] = boxes[:, 0] - boxes[:, 2] / 2.0
    out[:, 1] = boxes[:, 1] - boxes[:, 3] / 2.0
    return out


def iou(box_a, box_b) -> float:
    """IoU of two (x, y, w, h) boxes; 0 when the union is empty."""
    return float(iou_matrix(np.asarray(box_a)[None], np.asarray(box_b)[None])[0, 0])


def iou_matrix(boxes_a, boxes_b) -> np.ndarray:
    """Pairwise IoU, shape (len(a), len(b))."""
    a = xywh_to_corners(boxes_a)
    b = xywh_to_corners(boxes_b)
    x1 = np.maximum(a[:, None, 0], b[None, :, 0])
    y1 = np.maximum(a[:, None, 1], b[None, :, 1])
    x2 = np.minimum(a[:, None, 2], b[None, :, 2])
    y2 = np.minimum(a[:, None, 3], b[None, :, 3])
    inter = np.clip(x2 - x1, 0.0, None) * np.clip(y2 - y1, 0.0, None)
    area_a = (a[:, 2] - a[:, 0]) * (a[:, 3] - a[:, 1])
    area_b = (b[:, 2] - b[:, 0]) * (b[:, 3] - b[:, 1])
    union = area_a[:, None] + area_b[None, :] - inter
    return np.where(union > 0.0, inter / np.where(union > 0.0, union, 1.0), 0.0)


def encode_box(anchors_cxcywh, boxes_xywh) -> np.ndarray:
    """Standard deltas (dx, dy, dw, dh) of boxes relative to anchors."""
    anchors = np.asarray(anchors_cxcywh, dtype=np.float64).reshape(-1, 4)
    boxes = np.asarray(boxes_xywh, dtype=np.float64).reshape(-1, 4)
    if np.any(anchors[:, 2] <= 0) or np.any(anchors[:, 3] <= 0):
        raise DegenerateAnchor("anchors must have positive width and height")
    gcx = boxes[:, 0] + boxes[:, 2] / 2.0
    gcy = boxes[:, 1] + boxes[:, 3] / 2.0
    deltas = np.empty_like(boxes)
    deltas[:, 0] = (gcx - anchors[:, 0]) / anchors[:, 2]
    deltas[:, 1] = (gcy - anchors[:, 1]) / anchors[:, 3]
    deltas[:, 2] = np.log(boxes[:, 2] / anchors[:, 2])
    deltas[:, 3] = np.log(boxes[:, 3] / anchors[:, 3])
    return deltas


def decode_box(anchors_cxcywh, deltas) -> np.ndarray:
    """Exact inverse of encode_box; returns (x, y, w, h) boxes."""
    anchors = np.asarray(anchors_cxcywh, dtype=np.float64).reshape(-1, 4)
    deltas = np.asarray(deltas, dtype=np.float64).reshape(-1, 4)
    if np.any(anchors[:, 2] <= 0) or np.any(anchors[:, 3] <= 0):
        raise DegenerateAnchor("anchors must have positive width and height")
    cx = anchors[:, 0] + deltas[:, 0] * anchors[:, 2]
    cy = anchors[:, 1] + deltas[:, 1] * anchors[:, 3]
    w = anchors[:, 2] * np.exp(deltas[:, 2])
    h = anchors[:, 3] * np.exp(deltas[:, 3])
    return np.stack([cx - w / 2.0, cy - h / 2.0, w, h], axis=1)


def nms(boxes, scores, iou_thr: float) -> np.ndarray:
    """Greedy NMS; returns kept indices.

    Candidates are visited in descending score with ties broken by
    ascending x then ascending y, so the kept set is independent of the
    input order.
    """
    boxes = np.asarray(boxes, dtype=np.float64).reshape(-1, 4)
    scores = np.asarray(scores, dtype=np.float64)
    if len(boxes) == 0:
        return np.empty(0, dtype=np.int64)
    order = np.lexsort((boxes[:, 1], boxes[:, 0], -scores))
    kept: list[int] = []
    alive = np.ones(len(boxes), dtype=bool)
    for idx in order:
        if not alive[idx]:
            continue
        kept.append(int(idx))
        alive[idx] = False
        rest = np.where(alive)[0]
        if len(rest):
            overlaps = iou_matrix(boxes[idx][None], boxes[rest])[0]
            alive[rest[overlaps > iou_thr]] = False
    return np.asarray(kept, dtype=np.int64)


@dataclass(frozen=True)
class Detection:
    """One scored box prediction on a slice."""

    x: float
    y: float
    w: float
    h: float
    score: float
    slice_index: int = 0

    @property
    def box(self) -> np.ndarray:
        return np.array([self.x, self.y, self.w, self.h])

    @property
    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)


def aggregate_volume(detections: list[Detection], iou_thr: float) -> list[Detection]:
    """Pool detections across slices and run 2D NMS ignoring the slice index.

    Each survivor keeps its originating slice; a single-slice input reduces
    to plain NMS.
    """
    if not detections:
        return []
    boxes = np.array([d.box for d in detections])
    scores = np.array([d.score for d in detections])
    keep = nms(boxes, scores, iou_thr)
    kept = [detections[i] for i in keep]
    kept.sort(key=lambda d: (-d.score, d.x, d.y, d.slice_index))
    return kept
