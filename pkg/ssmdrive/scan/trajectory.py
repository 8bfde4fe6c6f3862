"""
Trajectory-guided query importance.

    w_i = 1 - min_j |P_i - psi'_j| / max_i min_j |P_i - psi'_j|

where psi' is the planned trajectory resampled to a dense polyline. The query
closest to the planned path gets weight 1; when every query lies on the path
all weights are 1.
"""

from __future__ import annotations

import numpy as np

from ..errors import ContractError

DENSE_WAYPOINTS = 30


def resample_waypoints(waypoints: np.ndarray, count: int = DENSE_WAYPOINTS) -> np.ndarray:
    """Piecewise-linear resampling of (T, 2) waypoints to (count, 2), endpoints kept."""
    waypoints = np.asarray(waypoints, dtype=np.float64).reshape(-1, 2)
    if count < 2:
        raise ContractError(f"dense trajectory needs at least 2 points, got {count}")
    if len(waypoints) == 0:
        raise ContractError("cannot resample an empty trajectory")
    if len(waypoints) == 1:
        return np.repeat(waypoints, count, axis=0)
    src = np.arange(len(waypoints), dtype=np.float64)
    dst = np.linspace(0.0, len(waypoints) - 1, count)
    return np.stack([np.interp(dst, src, waypoints[:, 0]), np.interp(dst, src, waypoints[:, 1])], axis=-1)


def resample_polyline(points: np.ndarray, count: int) -> np.ndarray:
    """Resample a (P, 2) polyline to ``count`` points evenly spaced by arc length, endpoints kept."""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if count < 2:
        raise ContractError(f"polyline needs at least 2 points, got {count}")
    if len(points) < 2:
        return resample_waypoints(points, count)
    arc = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(points, axis=0), axis=-1))])
    if arc[-1] == 0.0:
        return np.repeat(points[:1], count, axis=0)
    dst = np.linspace(0.0, arc[-1], count)
    return np.stack([np.interp(dst, arc, points[:, 0]), np.interp(dst, arc, points[:, 1])], axis=-1)


def path_distances(queries: np.ndarray, dense: np.ndarray) -> np.ndarray:
    """(n,) distance from each query to the nearest dense waypoint."""
    queries = np.asarray(queries, dtype=np.float64).reshape(-1, 2)
    diff = queries[:, None, :] - dense[None, :, :]
    return np.sqrt((diff**2).sum(axis=-1)).min(axis=1)


def trajectory_importance(queries: np.ndarray, waypoints: np.ndarray, dense_count: int = DENSE_WAYPOINTS) -> np.ndarray:
    """Importance in [0, 1] of each BEV query position (n, 2) for planned waypoints (T, 2)."""
    queries = np.asarray(queries, dtype=np.float64).reshape(-1, 2)
    if len(queries) == 0:
        raise ContractError("trajectory importance needs at least one query")
    dist = path_distances(queries, resample_waypoints(waypoints, dense_count))
    worst = dist.max()
    if worst == 0.0:
        return np.ones(len(queries))
    return 1.0 - dist / worst
