"""
Differentiable planning constraints.

Hinge penalties on the planned waypoints:

- collision: signed distance from each waypoint to every agent box at the same
  future step, penalised below the collision margin;
- overstep: signed distance to the nearest road-boundary segment, positive on
  the ego's side, penalised below the overstep margin;
- direction: the unsigned cosine between each plan segment and the nearest
  lane divider, penalised below cos(direction margin).

Which boundary or divider segment is nearest is decided on the values and
carries no gradient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..tensor import Tensor, ops

MIN_SEGMENT = 0.5


@dataclass(frozen=True)
class ConstraintMargins:
    collision: float = 1.0
    overstep: float = 0.0
    direction_deg: float = 30.0


def box_signed_distance(points: Tensor, boxes: np.ndarray) -> Tensor:
    """Signed distance from (T, 2) points to (T, k, 5) boxes x, y, w, l, yaw; negative inside."""
    steps, count = boxes.shape[:2]
    c, s = np.cos(boxes[..., 4]), np.sin(boxes[..., 4])
    rel = ops.reshape(points, (steps, 1, 2)) - boxes[..., :2]
    rx, ry = rel[:, :, 0], rel[:, :, 1]
    # box frame: x along the length, y across
    lx = ops.abs(rx * c + ry * s) - boxes[..., 3] / 2.0
    ly = ops.abs(ry * c - rx * s) - boxes[..., 2] / 2.0
    ox, oy = ops.relu(lx), ops.relu(ly)
    squared = ox * ox + oy * oy
    # exactly zero inside the box; the root only sees positive values
    within = (squared.data == 0.0).astype(np.float64)
    outside = ops.sqrt(squared + within) * (1.0 - within)
    inside = ops.minimum(ops.maximum(lx, ly), Tensor(np.zeros((steps, count))))
    return outside + inside


def collision_penalty(waypoints: Tensor, obstacles: np.ndarray, margin: float) -> Tensor:
    if obstacles.size == 0:
        return Tensor(0.0)
    return ops.sum(ops.relu(margin - box_signed_distance(waypoints, obstacles)))


def _segments(polylines: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    starts = np.concatenate([p[:-1] for p in polylines])
    ends = np.concatenate([p[1:] for p in polylines])
    return starts, ends


def _nearest_segment(points: np.ndarray, starts: np.ndarray, ends: np.ndarray) -> np.ndarray:
    seg = ends - starts
    length2 = np.maximum((seg**2).sum(axis=1), 1e-12)
    t = np.clip(((points[:, None, :] - starts[None]) * seg[None]).sum(axis=-1) / length2, 0.0, 1.0)
    closest = starts[None] + t[..., None] * seg[None]
    return np.argmin(((points[:, None, :] - closest) ** 2).sum(axis=-1), axis=1)


def overstep_penalty(waypoints: Tensor, boundaries: list[np.ndarray], margin: float) -> Tensor:
    if not boundaries:
        return Tensor(0.0)
    starts, ends = _segments(boundaries)
    idx = _nearest_segment(waypoints.data, starts, ends)
    a, b = starts[idx], ends[idx]
    seg = b - a
    normal = np.stack([-seg[:, 1], seg[:, 0]], axis=1) / np.maximum(np.linalg.norm(seg, axis=1, keepdims=True), 1e-12)
    # orient every normal toward the side the ego starts on
    side = np.sign((normal * (0.0 - a)).sum(axis=1, keepdims=True))
    normal = normal * np.where(side == 0, 1.0, side)
    signed = ops.sum((waypoints - a) * normal, axis=1)
    return ops.sum(ops.relu(margin - signed))


def direction_penalty(waypoints: Tensor, dividers: list[np.ndarray], margin_deg: float) -> Tensor:
    if not dividers:
        return Tensor(0.0)
    starts, ends = _segments(dividers)
    path = ops.concat([Tensor(np.zeros((1, 2))), waypoints])
    steps = path[1:] - path[:-1]
    moving = np.linalg.norm(steps.data, axis=1) >= MIN_SEGMENT
    if not moving.any():
        return Tensor(0.0)
    idx = _nearest_segment(path.data[1:], starts, ends)
    lane = ends[idx] - starts[idx]
    lane = lane / np.maximum(np.linalg.norm(lane, axis=1, keepdims=True), 1e-12)
    cosine = ops.abs(ops.sum(steps * lane, axis=1)) / ops.norm(steps, axis=1)
    hinge = ops.relu(math.cos(math.radians(margin_deg)) - cosine)
    return ops.sum(hinge * moving.astype(np.float64))


@dataclass
class ConstraintTerms:
    collision: Tensor
    overstep: Tensor
    direction: Tensor

    @property
    def total(self) -> Tensor:
        return self.collision + self.overstep + self.direction


def plan_constraints(
    waypoints: Tensor,
    obstacles: np.ndarray,
    boundaries: list[np.ndarray],
    dividers: list[np.ndarray] | None = None,
    margins: ConstraintMargins | None = None,
) -> ConstraintTerms:
    """Collision, overstep and direction penalties of one plan.

    Args:
        waypoints: (T_e, 2) planned waypoints in the ego frame.
        obstacles: (T_e, k, 5) agent boxes x, y, w, l, yaw at each future step.
        boundaries: Road-boundary polylines, each (P, 2).
        dividers: Lane-divider polylines giving the lane direction.
        margins: Hinge margins.
    """
    margins = margins or ConstraintMargins()
    return ConstraintTerms(
        collision=collision_penalty(waypoints, np.asarray(obstacles, dtype=np.float64), margins.collision),
        overstep=overstep_penalty(waypoints, boundaries, margins.overstep),
        direction=direction_penalty(waypoints, dividers or [], margins.direction_deg),
    )
