"""
Task query initialisation: agents, map points, ego and planning waypoints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ..tensor import Module, Mlp, Parameter, Tensor, ops
from .types import PerceptionRange, TokenKind, TokenSet

COMMANDS = ("left", "straight", "right")
CANBUS_WIDTH = 3 + len(COMMANDS)


class TrajectoryPrior(str, Enum):
    ORIGIN = "origin"
    UNIFORM = "uniform"
    RANDOM = "random"


# one metre straight ahead per waypoint (x forward, y left)
UNIFORM_STEP = (1.0, 0.0)


def grid_factor(n: int) -> tuple[int, int]:
    """(nx, ny) with nx * ny == n and ny the largest divisor not above sqrt(n)."""
    ny = max(d for d in range(1, int(math.isqrt(n)) + 1) if n % d == 0)
    return n // ny, ny


def uniform_grid(n: int, bev: PerceptionRange) -> np.ndarray:
    """(n, 2) cell centres of an nx-by-ny grid over the perception range, x-major."""
    nx, ny = grid_factor(n)
    ex, ey = bev.extent
    xs = bev.x_min + (np.arange(nx) + 0.5) * ex / nx
    ys = bev.y_min + (np.arange(ny) + 0.5) * ey / ny
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    return np.stack([gx.reshape(-1), gy.reshape(-1)], axis=-1)


def map_point_grid(instances: int, points: int, bev: PerceptionRange) -> np.ndarray:
    """(instances * points, 2): each instance is a short line along x through its cell centre."""
    centres = uniform_grid(instances, bev)
    nx, _ = grid_factor(instances)
    half = 0.4 * bev.extent[0] / nx
    offsets = np.linspace(-half, half, points)
    pts = np.repeat(centres, points, axis=0)
    pts[:, 0] += np.tile(offsets, instances)
    return pts


def waypoint_prior(mode: TrajectoryPrior | str, steps: int, rng: np.random.Generator | None = None) -> np.ndarray:
    """(steps, 2) initial planning waypoints."""
    mode = TrajectoryPrior(mode)
    if mode is TrajectoryPrior.ORIGIN:
        return np.zeros((steps, 2))
    if mode is TrajectoryPrior.UNIFORM:
        return np.cumsum(np.tile(UNIFORM_STEP, (steps, 1)), axis=0)
    rng = rng or np.random.default_rng(0)
    return np.cumsum(rng.normal(0.0, 1.0, size=(steps, 2)), axis=0)


def canbus_vector(speed: float, yaw_rate: float, accel: float, command: str) -> np.ndarray:
    onehot = [1.0 if command == c else 0.0 for c in COMMANDS]
    return np.array([speed, yaw_rate, accel, *onehot])


@dataclass
class TaskQueryLayout:
    agents: int
    map_instances: int
    points_per_instance: int
    waypoints: int

    @property
    def map_points(self) -> int:
        return self.map_instances * self.points_per_instance

    @property
    def total(self) -> int:
        return self.agents + self.map_points + 1 + self.waypoints

    def slices(self) -> dict[TokenKind, slice]:
        a = self.agents
        m = a + self.map_points
        return {
            TokenKind.AGENT: slice(0, a),
            TokenKind.MAP: slice(a, m),
            TokenKind.EGO: slice(m, m + 1),
            TokenKind.WAYPOINT: slice(m + 1, m + 1 + self.waypoints),
        }


class TaskQueries(Module):
    """Learned task semantics with fixed initial reference positions."""

    def __init__(
        self,
        width: int,
        layout: TaskQueryLayout,
        rng: np.random.Generator,
        bev: PerceptionRange | None = None,
        prior: TrajectoryPrior | str = TrajectoryPrior.UNIFORM,
    ) -> None:
        self.layout = layout
        self.bev = bev or PerceptionRange()
        self.prior = TrajectoryPrior(prior)
        self.agent_embed = Parameter(rng.normal(0.0, 0.1, size=(layout.agents, width)))
        self.map_instance_embed = Parameter(rng.normal(0.0, 0.1, size=(layout.map_instances, width)))
        self.map_point_embed = Parameter(rng.normal(0.0, 0.1, size=(layout.points_per_instance, width)))
        self.waypoint_embed = Parameter(rng.normal(0.0, 0.1, size=(layout.waypoints, width)))
        self.canbus = Mlp(CANBUS_WIDTH, width, width, rng)
        self.prior_waypoints = waypoint_prior(self.prior, layout.waypoints, rng)

    def initial_refs(self) -> np.ndarray:
        lay = self.layout
        return np.concatenate(
            [
                uniform_grid(lay.agents, self.bev),
                map_point_grid(lay.map_instances, lay.points_per_instance, self.bev),
                np.zeros((1, 2)),
                self.prior_waypoints,
            ]
        )

    def forward(self, canbus: np.ndarray, timestamp: int) -> TokenSet:
        lay = self.layout
        width = self.agent_embed.shape[1]
        map_sem = ops.reshape(
            ops.reshape(self.map_instance_embed, (lay.map_instances, 1, width))
            + ops.reshape(self.map_point_embed, (1, lay.points_per_instance, width)),
            (lay.map_points, width),
        )
        ego_sem = ops.relu(self.canbus(Tensor(np.asarray(canbus, dtype=np.float64)[None, :])))
        semantic = ops.concat([self.agent_embed, map_sem, ego_sem, self.waypoint_embed])
        kinds = np.concatenate(
            [
                np.full(lay.agents, TokenKind.AGENT),
                np.full(lay.map_points, TokenKind.MAP),
                [TokenKind.EGO],
                np.full(lay.waypoints, TokenKind.WAYPOINT),
            ]
        )
        refs = self.initial_refs()
        return TokenSet(
            semantic=semantic,
            ref_pos=np.concatenate([refs, np.zeros((len(refs), 1))], axis=1),
            timestamp=np.full(lay.total, timestamp),
            kind=kinds,
        )


def init_task_tokens(queries: TaskQueries, canbus: np.ndarray, timestamp: int = 0) -> TokenSet:
    return queries(canbus, timestamp)
