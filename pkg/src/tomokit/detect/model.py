"""Per-location linear detection head over frozen pyramid features.

The backbone substitute and the 1 x 1 pyramid projection stay frozen, so
per-slice features are computed once and the trainable surface is a pair
of shared affine predictors: 256 features -> 9 anchor logits and
256 features -> 9 x 4 box deltas.  Training uses focal + smooth L1 with
seeded negative resampling per epoch; early stopping monitors mean FROC
sensitivity on validation volumes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from ..embeddings.tokens import TokenGrid
from ..errors import NoAnnotations
from ..studies import FRAME_SIZE
from ..train.optim import OptimState, ScheduleConfig, adamw_step, cosine_lr
from ..train.rng import derive_seed, epoch_permutation
from .anchors import AnchorSet, PyramidSpec, generate_anchors
from .assign import base_assignment, sample_negatives
from .boxes import Detection, aggregate_volume, decode_box, encode_box
from .froc import FrocResult, GroundTruthBox, froc
from .losses import detection_loss
from .pyramid import ProjectionParams, build_pyramid, flatten_pyramid


@dataclass
class DetectorHeadParams:
    """Shared affine predictors applied at every pyramid location."""

    cls_weight: np.ndarray  # (9, channels)
    cls_bias: np.ndarray  # (9,)
    box_weight: np.ndarray  # (36, channels)
    box_bias: np.ndarray  # (36,)

    def copy(self) -> "DetectorHeadParams":
        return DetectorHeadParams(
            self.cls_weight.copy(),
            self.cls_bias.copy(),
            self.box_weight.copy(),
            self.box_bias.copy(),
        )


class LesionDetector(BaseEstimator):
    """Anchor-based lesion detector with a trainable linear head."""

    def __init__(
        self,
        alpha: float = 0.5,
        gamma: float = 2.0,
        smoothing: float = 0.0,
        pos_thr: float = 0.5,
        neg_thr: float = 0.4,
        neg_pos_ratio: float = 3.0,
        nms_iou: float = 0.2,
        cls_box_ratio: float = 1.0,
        smooth_l1_beta: float = 0.1,
        lr: float = 0.05,
        epochs: int = 60,
        batch_slices: int = 8,
        weight_decay: float = 1e-5,
        seed: int = 0,
        score_thr: float = 0.05,
        pre_nms_topk: int = 100,
        eval_every: int = 10,
        patience: int = 4,
        fp_eval_points: tuple = (1.0, 2.0, 3.0, 4.0, 5.0),
    ):
        self.alpha = alpha
        self.gamma = gamma
        self.smoothing = smoothing
        self.pos_thr = pos_thr
        self.neg_thr = neg_thr
        self.neg_pos_ratio = neg_pos_ratio
        self.nms_iou = nms_iou
        self.cls_box_ratio = cls_box_ratio
        self.smooth_l1_beta = smooth_l1_beta
        self.lr = lr
        self.epochs = epochs
        self.batch_slices = batch_slices
        self.weight_decay = weight_decay
        self.seed = seed
        self.score_thr = score_thr
        self.pre_nms_topk = pre_nms_topk
        self.eval_every = eval_every
        self.patience = patience
        self.fp_eval_points = fp_eval_points

    # --- frozen feature path ---------------------------------------------

    def _ensure_frozen(self) -> None:
        if not hasattr(self, "anchors_"):
            self.spec_ = PyramidSpec()
            self.anchors_: AnchorSet = generate_anchors(self.spec_)
            self.projection_ = ProjectionParams.seeded(
                derive_seed(self.seed, 0x9201), self.spec_.channels
            )

    def slice_features(self, grid: TokenGrid) -> np.ndarray:
        """(n_locations, channels) pyramid features for one slice."""
        self._ensure_frozen()
        return flatten_pyramid(build_pyramid(grid, self.projection_, self.spec_), self.spec_)

    # --- training ----------------------------------------------------------

    def _init_head(self) -> DetectorHeadParams:
        k = self.spec_.anchors_per_location
        c = self.spec_.channels
        prior = 0.01  # initial anchor score, keeps early focal loss small
        return DetectorHeadParams(
            cls_weight=np.zeros((k, c)),
            cls_bias=np.full(k, float(np.log(prior / (1.0 - prior)))),
            box_weight=np.zeros((4 * k, c)),
            box_bias=np.zeros(4 * k),
        )

    def _slice_loss_grads(self, feats, boxes, base, head, rng_seed):
        """Loss and head gradients for one slice, touching only labeled anchors."""
        k = self.spec_.anchors_per_location
        labels = sample_negatives(base[0], base[1], self.neg_pos_ratio, rng_seed)
        touched = np.where(labels >= -1)[0]
        if len(touched) == 0:
            zero = {n: np.zeros_like(getattr(head, n)) for n in
                    ("cls_weight", "cls_bias", "box_weight", "box_bias")}
            return 0.0, zero
        locs = touched // k
        slots = touched % k
        f = feats[locs]
        logits = np.einsum("nc,nc->n", f, head.cls_weight[slots]) + head.cls_bias[slots]
        deltas = (
            np.einsum("nc,nsc->ns", f, head.box_weight.reshape(k, 4, -1)[slots])
            + head.box_bias.reshape(k, 4)[slots]
        )
        sub_labels = labels[touched]
        targets = np.zeros((len(touched), 4))
        pos = sub_labels >= 0
        if pos.any():
            targets[pos] = encode_box(
                self.anchors_.boxes[touched[pos]], boxes[sub_labels[pos]]
            )
        total, dlogits, ddeltas = detection_loss(
            logits,
            deltas,
            sub_labels,
            targets,
            alpha=self.alpha,
            gamma=self.gamma,
            smoothing=self.smoothing,
            beta=self.smooth_l1_beta,
            cls_box_ratio=self.cls_box_ratio,
        )
        grads = {
            "cls_weight": np.zeros_like(head.cls_weight),
            "cls_bias": np.zeros_like(head.cls_bias),
            "box_weight": np.zeros_like(head.box_weight),
            "box_bias": np.zeros_like(head.box_bias),
        }
        np.add.at(grads["cls_weight"], slots, dlogits[:, None] * f)
        np.add.at(grads["cls_bias"], slots, dlogits)
        bw = grads["box_weight"].reshape(k, 4, -1)
        bb = grads["box_bias"].reshape(k, 4)
        np.add.at(bw, slots, ddeltas[:, :, None] * f[:, None, :])
        np.add.at(bb, slots, ddeltas)
        return total, grads

    def fit(self, annotated, val_volumes=None):
        """Train on (TokenGrid, boxes) pairs for annotated slices.

        val_volumes optionally holds (list of TokenGrid, list of
        GroundTruthBox) per volume for FROC-based checkpointing.
        """
        if len(annotated) == 0:
            raise NoAnnotations("need at least one annotated slice")
        self._ensure_frozen()
        feats = [self.slice_features(grid) for grid, _ in annotated]
        all_boxes = [np.asarray(b, dtype=np.float64).reshape(-1, 4) for _, b in annotated]
        if all(len(b) == 0 for b in all_boxes):
            raise NoAnnotations("all slices have empty annotations")
        bases = [
            base_assignment(self.anchors_.boxes, b, self.pos_thr, self.neg_thr)
            for b in all_boxes
        ]
        val_feats = None
        if val_volumes:
            val_feats = [
                ([self.slice_features(g) for g in grids], gts)
                for grids, gts in val_volumes
            ]

        head = self._init_head()
        params = {
            "cls_weight": head.cls_weight,
            "cls_bias": head.cls_bias,
            "box_weight": head.box_weight,
            "box_bias": head.box_bias,
        }
        n = len(annotated)
        batch = min(self.batch_slices, n)
        steps_per_epoch = max(1, (n + batch - 1) // batch)
        schedule = ScheduleConfig(
            lr_max=self.lr, total_steps=self.epochs * steps_per_epoch
        )
        state = OptimState(weight_decay=self.weight_decay)
        best_head = head.copy()
        best_sens = -1.0
        evals_since_best = 0
        history = []
        step = 0
        for epoch in range(self.epochs):
            order = epoch_permutation(derive_seed(self.seed, 0xD0), epoch, n)
            epoch_loss = 0.0
            for start in range(0, n, batch):
                chunk = order[start : start + batch]
                acc = {name: np.zeros_like(p) for name, p in params.items()}
                loss_sum = 0.0
                for si in chunk:
                    loss, grads = self._slice_loss_grads(
                        feats[si],
                        all_boxes[si],
                        bases[si],
                        head,
                        derive_seed(self.seed, 0xA551, epoch, si),
                    )
                    loss_sum += loss
                    for name in acc:
                        acc[name] += grads[name]
                for name in acc:
                    acc[name] /= len(chunk)
                adamw_step(params, acc, state, cosine_lr(schedule, step))
                step += 1
                epoch_loss += loss_sum
            history.append(epoch_loss / n)
            if val_feats and ((epoch + 1) % self.eval_every == 0 or epoch == self.epochs - 1):
                sens = self._validation_sensitivity(head, val_feats)
                if sens > best_sens:
                    best_sens = sens
                    best_head = head.copy()
                    evals_since_best = 0
                else:
                    evals_since_best += 1
                    if evals_since_best >= self.patience:
                        break
        self.head_ = best_head if val_feats else head
        self.val_sensitivity_ = best_sens if val_feats else None
        self.train_loss_ = history
        return self

    def _validation_sensitivity(self, head, val_feats) -> float:
        gt = {}
        preds = {}
        for i, (slices, gts) in enumerate(val_feats):
            vol_id = f"val{i:04d}"
            gt[vol_id] = gts
            dets = []
            for s, f in enumerate(slices):
                dets.extend(self._detect_from_features(f, head, slice_index=s))
            preds[vol_id] = aggregate_volume(dets, self.nms_iou)
        result = froc(gt, preds, self.fp_eval_points)
        return result.average_sensitivity

    # --- inference -----------------------------------------------------------

    def _detect_from_features(self, feats, head=None, slice_index: int = 0):
        head = head if head is not None else self.head_
        k = self.spec_.anchors_per_location
        logits = feats @ head.cls_weight.T + head.cls_bias  # (L, 9)
        scores = 1.0 / (1.0 + np.exp(-logits))
        flat = scores.ravel()
        candidates = np.where(flat >= self.score_thr)[0]
        if len(candidates) == 0:
            return []
        if len(candidates) > self.pre_nms_topk:
            order = np.argsort(-flat[candidates], kind="stable")
            candidates = candidates[order[: self.pre_nms_topk]]
        locs = candidates // k
        slots = candidates % k
        f = feats[locs]
        deltas = (
            np.einsum("nc,nsc->ns", f, head.box_weight.reshape(k, 4, -1)[slots])
            + head.box_bias.reshape(k, 4)[slots]
        )
        boxes = decode_box(self.anchors_.boxes[candidates], deltas)
        out = []
        for box, score in zip(boxes, flat[candidates]):
            x = float(np.clip(box[0], 0.0, FRAME_SIZE))
            y = float(np.clip(box[1], 0.0, FRAME_SIZE))
            w = float(np.clip(box[2], 0.0, FRAME_SIZE - x))
            h = float(np.clip(box[3], 0.0, FRAME_SIZE - y))
            if w > 0 and h > 0:
                out.append(Detection(x, y, w, h, float(score), slice_index))
        return out

    def predict_volume(self, grids: list[TokenGrid]) -> list[Detection]:
        """Detections for a whole volume: all slices pooled through 2D NMS."""
        dets = []
        for s, grid in enumerate(grids):
            feats = self.slice_features(grid)
            dets.extend(self._detect_from_features(feats, slice_index=s))
        return aggregate_volume(dets, self.nms_iou)

    def evaluate(self, volumes: dict, gt: dict, fp_points=(1.0, 2.0, 3.0, 4.0)) -> FrocResult:
        """FROC over {volume_id: [TokenGrid, ...]} against {volume_id: [gt boxes]}."""
        preds = {vid: self.predict_volume(grids) for vid, grids in volumes.items()}
        boxes = {
            vid: [
                g if isinstance(g, GroundTruthBox) else GroundTruthBox(*g)
                for g in gts
            ]
            for vid, gts in gt.items()
        }
        return froc(boxes, preds, fp_points)
