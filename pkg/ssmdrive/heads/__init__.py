"""Task heads, target matching, losses, planning constraints and augmentation."""

from .augment import RigidAugment, apply_augment, augment, sample_augment
from .constraints import ConstraintMargins, ConstraintTerms, box_signed_distance, plan_constraints
from .heads import (
    DetectionOutput,
    HeadOutputs,
    MapOutput,
    MotionOutput,
    PlanOutput,
    TaskHeads,
    decode_boxes,
    encode_boxes,
    residual_combine,
)
from .losses import LossReport, LossWeights, composite_loss, depth_loss, focal_loss, motion_loss, winner_mode
from .matching import Assignment, chamfer_distance, match_detections, match_maps, match_targets

__all__ = [
    "Assignment",
    "ConstraintMargins",
    "ConstraintTerms",
    "DetectionOutput",
    "HeadOutputs",
    "LossReport",
    "LossWeights",
    "MapOutput",
    "MotionOutput",
    "PlanOutput",
    "RigidAugment",
    "TaskHeads",
    "apply_augment",
    "augment",
    "box_signed_distance",
    "chamfer_distance",
    "composite_loss",
    "decode_boxes",
    "depth_loss",
    "encode_boxes",
    "focal_loss",
    "match_detections",
    "match_maps",
    "match_targets",
    "motion_loss",
    "plan_constraints",
    "residual_combine",
    "sample_augment",
    "winner_mode",
]
