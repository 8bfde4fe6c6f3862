"""
Bipartite matching of predictions to ground truth.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.special import expit

from ..errors import ContractError
from .heads import DetectionOutput, MapOutput, encode_boxes


@dataclass(frozen=True)
class Assignment:
    pred: np.ndarray  # matched prediction indices
    gt: np.ndarray  # ground-truth index matched to each entry of ``pred``
    unmatched_gt: np.ndarray
    cost: float

    def __len__(self) -> int:
        return len(self.pred)

    def pairs(self) -> list[tuple[int, int]]:
        return [(int(p), int(g)) for p, g in zip(self.pred, self.gt, strict=True)]


def match_targets(cost: np.ndarray) -> Assignment:
    """Minimum-cost assignment on a (predictions, ground truth) cost matrix.

    Ground truth left over when there are fewer predictions is reported in
    ``unmatched_gt``.
    """
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2:
        raise ContractError(f"cost matrix must be 2-D, got shape {list(cost.shape)}")
    if not np.all(np.isfinite(cost)):
        raise ContractError("cost matrix holds non-finite entries")
    if cost.size == 0:
        return Assignment(np.zeros(0, np.int64), np.zeros(0, np.int64), np.arange(cost.shape[1]), 0.0)
    rows, cols = linear_sum_assignment(cost)
    unmatched = np.setdiff1d(np.arange(cost.shape[1]), cols)
    return Assignment(rows.astype(np.int64), cols.astype(np.int64), unmatched, float(cost[rows, cols].sum()))


def detection_cost(det: DetectionOutput, boxes: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Negative class probability plus L1 distance between box codes."""
    prob = expit(det.logits.data)
    gt_codes = encode_boxes(boxes)
    cls = -prob[:, labels]
    box = np.abs(det.codes.data[:, None, :] - gt_codes[None, :, :]).sum(axis=-1)
    return cls + box


def chamfer_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Symmetric mean nearest-point distance between two point sets."""
    d = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=-1)
    return 0.5 * float(d.min(axis=1).mean() + d.min(axis=0).mean())


def map_cost(pred: MapOutput, points: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Negative instance class probability plus point-set Chamfer distance.

    Chamfer ignores point order, so the cost does not depend on the direction
    a polyline is traversed in.
    """
    prob = expit(pred.logits.data)
    out = -prob[:, labels]
    pts = pred.points.data
    for i in range(len(pts)):
        for j in range(len(points)):
            out[i, j] += chamfer_distance(pts[i], points[j])
    return out


def match_detections(det: DetectionOutput, boxes: np.ndarray, labels: np.ndarray) -> Assignment:
    return match_targets(detection_cost(det, boxes, labels))


def match_maps(pred: MapOutput, points: np.ndarray, labels: np.ndarray) -> Assignment:
    return match_targets(map_cost(pred, points, labels))
