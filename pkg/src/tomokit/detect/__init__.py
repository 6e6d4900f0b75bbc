from .anchors import AnchorSet, PyramidSpec, anchor_shapes, generate_anchors
from .assign import IGNORE, NEGATIVE, assign_anchors
from .augment import (
    AugmentConfig,
    augment_geometry,
    clip_boxes,
    coarse_dropout,
    flip_horizontal,
    flip_vertical,
    gamma_contrast,
    gaussian_noise,
    zoom_boxes,
    zoom_factor_ok,
    zoom_image,
)
from .boxes import (
    Detection,
    aggregate_volume,
    decode_box,
    encode_box,
    iou,
    iou_matrix,
    nms,
)
from .froc import FrocResult, GroundTruthBox, froc, match_radius
from .losses import detection_loss, focal_loss, smooth_l1
from .model import DetectorHeadParams, LesionDetector
from .pyramid import ProjectionParams, build_pyramid, flatten_pyramid

__all__ = [
    "AnchorSet",
    "AugmentConfig",
    "Detection",
    "DetectorHeadParams",
    "FrocResult",
    "GroundTruthBox",
    "IGNORE",
    "LesionDetector",
    "NEGATIVE",
    "ProjectionParams",
    "PyramidSpec",
    "aggregate_volume",
    "anchor_shapes",
    "assign_anchors",
    "augment_geometry",
    "build_pyramid",
    "clip_boxes",
    "coarse_dropout",
    "decode_box",
    "detection_loss",
    "encode_box",
    "flatten_pyramid",
    "flip_horizontal",
    "flip_vertical",
    "froc",
    "focal_loss",
    "gamma_contrast",
    "gaussian_noise",
    "generate_anchors",
    "iou",
    "iou_matrix",
    "match_radius",
    "nms",
    "smooth_l1",
    "zoom_boxes",
    "zoom_factor_ok",
    "zoom_image",
]
