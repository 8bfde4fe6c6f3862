"""
Training losses.

Focal loss for classification, L1 for every regression, winner-takes-all
for multi-modal motion and a masked L1 on sensor-token depth. The composite
loss sums the five task terms over every decoder layer.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from ..tensor import Tensor, ops
from ..world.dataset import FrameTargets
from ..world.scenarios import MAP_CLASSES
from .constraints import ConstraintMargins, plan_constraints
from .heads import DetectionOutput, HeadOutputs, MapOutput, MotionOutput, PlanOutput, encode_boxes
from .matching import Assignment, match_detections, match_maps

LOSS_TERMS = ("det", "map", "depth", "motion", "plan")


@dataclass(frozen=True)
class LossWeights:
    det: float = 1.0
    map: float = 1.0
    depth: float = 1.0
    motion: float = 1.0
    plan: float = 1.0
    constraint: float = 1.0
    focal_alpha: float = 0.25
    focal_gamma: float = 2.0
    margins: ConstraintMargins = field(default_factory=ConstraintMargins)

    def planning_only(self) -> LossWeights:
        """Perception, depth and motion switched off."""
        return LossWeights(
            det=0.0,
            map=0.0,
            depth=0.0,
            motion=0.0,
            plan=self.plan,
            constraint=self.constraint,
            focal_alpha=self.focal_alpha,
            focal_gamma=self.focal_gamma,
            margins=self.margins,
        )


def focal_loss(logits: Tensor, targets: np.ndarray, alpha: float = 0.25, gamma: float = 2.0) -> Tensor:
    """Sigmoid focal loss summed over entries and divided by the number of positives (at least 1)."""
    t = np.asarray(targets, dtype=np.float64)
    p = ops.sigmoid(logits)
    ce = ops.softplus(-logits) * t + ops.softplus(logits) * (1.0 - t)
    p_t = p * t + (1.0 - p) * (1.0 - t)
    weight = alpha * t + (1.0 - alpha) * (1.0 - t)
    loss = ops.sum(ce * ops.power(1.0 - p_t, gamma) * weight)
    return loss / float(max(t.sum(), 1.0))


def l1_loss(pred: Tensor, target: np.ndarray) -> Tensor:
    if pred.size == 0:
        return Tensor(0.0)
    return ops.mean(ops.abs(pred - np.asarray(target, dtype=np.float64)))


def _one_hot(labels: np.ndarray, rows: np.ndarray, total: int, classes: int) -> np.ndarray:
    out = np.zeros((total, classes))
    out[rows, labels] = 1.0
    return out


def detection_loss(det: DetectionOutput, targets: FrameTargets, weights: LossWeights, match: Assignment) -> Tensor:
    classes = det.logits.shape[1]
    onehot = _one_hot(targets.labels[match.gt], match.pred, det.logits.shape[0], classes)
    loss = focal_loss(det.logits, onehot, weights.focal_alpha, weights.focal_gamma)
    if len(match):
        loss = loss + l1_loss(ops.take(det.codes, match.pred), encode_boxes(targets.boxes[match.gt]))
        loss = loss + l1_loss(ops.take(det.velocity, match.pred), targets.velocities[match.gt])
    return loss


def map_loss(pred: MapOutput, targets: FrameTargets, weights: LossWeights, match: Assignment) -> Tensor:
    onehot = _one_hot(targets.map_labels[match.gt], match.pred, pred.logits.shape[0], len(MAP_CLASSES))
    loss = focal_loss(pred.logits, onehot, weights.focal_alpha, weights.focal_gamma)
    lines = targets.map_resampled(pred.points.shape[1])
    for p, g in match.pairs():
        gt = lines[g]
        # regress toward whichever traversal direction is already closer
        forward = np.abs(pred.points.data[p] - gt).mean()
        backward = np.abs(pred.points.data[p] - gt[::-1]).mean()
        loss = loss + l1_loss(pred.points[p], gt if forward <= backward else gt[::-1]) / float(len(match))
    return loss


def winner_mode(displacements: np.ndarray, gt: np.ndarray) -> int:
    """Mode with the lowest average displacement error; first one on ties."""
    ade = np.linalg.norm(displacements - gt[None], axis=-1).mean(axis=-1)
    return int(np.argmin(ade))


def motion_loss(modes: Tensor, mode_logits: Tensor, gt: np.ndarray) -> Tensor:
    """L1 on the winning mode plus cross-entropy on its probability for one agent."""
    gt = np.asarray(gt, dtype=np.float64)
    k = winner_mode(modes.data, gt)
    log_prob = ops.log_softmax(mode_logits, axis=-1)
    return l1_loss(modes[k], gt) - log_prob[k]


def agent_motion_loss(motion: MotionOutput, targets: FrameTargets, match: Assignment) -> Tensor:
    if not len(match):
        return Tensor(0.0)
    total = Tensor(0.0)
    for p, g in match.pairs():
        gt = targets.futures[g] - targets.boxes[g, None, :2]
        total = total + motion_loss(motion.displacements[p], motion.mode_logits[p], gt)
    return total / float(len(match))


def depth_loss(depth: Tensor, gt_depth: np.ndarray, hit: np.ndarray) -> Tensor:
    """Mean L1 over the sensor tokens whose ray hits scene geometry."""
    mask = np.asarray(hit, dtype=bool)
    if not mask.any():
        return Tensor(0.0)
    return ops.sum(ops.abs(depth - gt_depth) * mask.astype(np.float64)) / float(mask.sum())


def plan_loss(plan: PlanOutput, targets: FrameTargets, weights: LossWeights) -> tuple[Tensor, dict[str, float]]:
    imitation = l1_loss(plan.waypoints, targets.ego_future)
    terms = plan_constraints(
        plan.waypoints,
        targets.obstacles,
        list(targets.map_of_class("boundary")),
        list(targets.map_of_class("divider")),
        weights.margins,
    )
    parts = {
        "imitation": imitation.item(),
        "collision": terms.collision.item(),
        "overstep": terms.overstep.item(),
        "direction": terms.direction.item(),
    }
    return imitation + terms.total * weights.constraint, parts


@dataclass
class LossReport:
    total: Tensor
    terms: dict[str, float]
    per_layer: list[dict[str, float]]


def layer_loss(
    outputs: HeadOutputs, depth: Tensor, targets: FrameTargets, weights: LossWeights
) -> tuple[Tensor, dict[str, float]]:
    det_match = match_detections(outputs.detection, targets.boxes, targets.labels)
    map_match = match_maps(outputs.map, targets.map_resampled(outputs.map.points.shape[1]), targets.map_labels)
    plan, plan_parts = plan_loss(outputs.plan, targets, weights)
    raw = {
        "det": detection_loss(outputs.detection, targets, weights, det_match),
        "map": map_loss(outputs.map, targets, weights, map_match),
        "depth": depth_loss(depth, targets.token_depth, targets.token_hit),
        "motion": agent_motion_loss(outputs.motion, targets, det_match),
        "plan": plan,
    }
    total = Tensor(0.0)
    values: dict[str, float] = {}
    for name in LOSS_TERMS:
        weighted = raw[name] * getattr(weights, name)
        values[name] = weighted.item()
        total = total + weighted
    values.update({f"plan_{k}": v for k, v in plan_parts.items()})
    return total, values


def composite_loss(
    layers: Sequence[HeadOutputs], depth: Tensor, targets: FrameTargets, weights: LossWeights | None = None
) -> LossReport:
    """Sum of the weighted task terms of every layer.

    The depth term depends only on the shared depth prediction and is counted
    once per layer like the others.
    """
    weights = weights or LossWeights()
    total = Tensor(0.0)
    per_layer = []
    summed = dict.fromkeys(LOSS_TERMS, 0.0)
    for outputs in layers:
        loss, values = layer_loss(outputs, depth, targets, weights)
        total = total + loss
        per_layer.append(values)
        for name in LOSS_TERMS:
            summed[name] += values[name]
    summed["total"] = total.item()
    return LossReport(total=total, terms=summed, per_layer=per_layer)
