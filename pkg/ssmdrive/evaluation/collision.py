"""
Oriented-box collision checks in BEV.

Boxes are (x, y, w, l, yaw) with the length along the heading. Two boxes
collide when no edge normal of either separates their projections
(separating-axis test); touching counts as a collision. A box of zero width
and length is a point and collides only if it lies inside the other box.
"""

from __future__ import annotations

import math

import numpy as np

POINT_TOLERANCE = 1e-12


def box_corners(box: np.ndarray) -> np.ndarray:
    """(4, 2) corners, counter-clockwise from front-left."""
    x, y, w, length, yaw = (float(v) for v in box[:5])
    c, s = math.cos(yaw), math.sin(yaw)
    local = np.array([[length, w], [-length, w], [-length, -w], [length, -w]]) / 2.0
    return local @ np.array([[c, s], [-s, c]]) + np.array([x, y])


def _axes(box: np.ndarray) -> np.ndarray:
    yaw = float(box[4])
    c, s = math.cos(yaw), math.sin(yaw)
    return np.array([[c, s], [-s, c]])


def _is_point(box: np.ndarray) -> bool:
    return abs(float(box[2])) <= POINT_TOLERANCE and abs(float(box[3])) <= POINT_TOLERANCE


def point_in_box(point: np.ndarray, box: np.ndarray) -> bool:
    rel = np.asarray(point[:2], dtype=np.float64) - box[:2]
    along, across = _axes(box) @ rel
    return abs(along) <= box[3] / 2.0 + POINT_TOLERANCE and abs(across) <= box[2] / 2.0 + POINT_TOLERANCE


def boxes_overlap(a: np.ndarray, b: np.ndarray) -> bool:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if _is_point(a):
        return point_in_box(a, b)
    if _is_point(b):
        return point_in_box(b, a)
    corners_a, corners_b = box_corners(a), box_corners(b)
    for axis in np.concatenate([_axes(a), _axes(b)]):
        pa, pb = corners_a @ axis, corners_b @ axis
        if pa.min() > pb.max() or pb.min() > pa.max():
            return False
    return True


def collision_check(ego_box: np.ndarray, obstacle_boxes: np.ndarray) -> bool:
    """True if the ego box overlaps any of the (k, 5) obstacle boxes."""
    obstacles = np.asarray(obstacle_boxes, dtype=np.float64).reshape(-1, 5)
    return any(boxes_overlap(ego_box, ob) for ob in obstacles)


def waypoint_yaws(waypoints: np.ndarray, initial_heading: float = 0.0) -> np.ndarray:
    """Heading at each waypoint from the segment leading into it.

    The first waypoint has no preceding segment and takes ``initial_heading``;
    a zero-length segment keeps the previous heading.
    """
    waypoints = np.asarray(waypoints, dtype=np.float64).reshape(-1, 2)
    yaws = np.empty(len(waypoints))
    heading = initial_heading
    for t in range(len(waypoints)):
        if t > 0:
            dx, dy = waypoints[t] - waypoints[t - 1]
            if math.hypot(dx, dy) > POINT_TOLERANCE:
                heading = math.atan2(dy, dx)
        yaws[t] = heading
    return yaws


def ego_boxes(waypoints: np.ndarray, ego_size: tuple[float, float, float], initial_heading: float = 0.0) -> np.ndarray:
    """(T, 5) ego boxes placed on the planned waypoints."""
    waypoints = np.asarray(waypoints, dtype=np.float64).reshape(-1, 2)
    w, length = ego_size[0], ego_size[1]
    yaws = waypoint_yaws(waypoints, initial_heading)
    return np.column_stack([waypoints, np.full(len(waypoints), w), np.full(len(waypoints), length), yaws])


def plan_collisions(
    waypoints: np.ndarray,
    obstacles: np.ndarray,
    ego_size: tuple[float, float, float],
    initial_heading: float = 0.0,
) -> np.ndarray:
    """(T,) flags: does the ego at waypoint t overlap any obstacle at step t."""
    boxes = ego_boxes(waypoints, ego_size, initial_heading)
    obstacles = np.asarray(obstacles, dtype=np.float64)
    return np.array([collision_check(boxes[t], obstacles[t]) for t in range(len(boxes))], dtype=bool)
