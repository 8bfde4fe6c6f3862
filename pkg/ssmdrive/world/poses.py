"""
SE(2) ego poses and frame changes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from .scenarios import Episode


def wrap_angle(a: np.ndarray | float) -> np.ndarray | float:
    """Wrap to [-pi, pi)."""
    return (a + np.pi) % (2.0 * np.pi) - np.pi


@dataclass(frozen=True)
class EgoPose:
    """Pose of a local frame in a parent frame: p_parent = R(yaw) p_local + (x, y)."""

    x: float = 0.0
    y: float = 0.0
    yaw: float = 0.0

    @classmethod
    def identity(cls) -> EgoPose:
        return cls()

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> EgoPose:
        return cls(float(m[0, 2]), float(m[1, 2]), math.atan2(m[1, 0], m[0, 0]))

    def matrix(self) -> np.ndarray:
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        return np.array([[c, -s, self.x], [s, c, self.y], [0.0, 0.0, 1.0]])

    def rotation(self) -> np.ndarray:
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        return np.array([[c, -s], [s, c]])

    def compose(self, other: EgoPose) -> EgoPose:
        """self ∘ other: map from other's local frame through self to the parent."""
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        return EgoPose(
            self.x + c * other.x - s * other.y,
            self.y + s * other.x + c * other.y,
            float(wrap_angle(self.yaw + other.yaw)),
        )

    def inverse(self) -> EgoPose:
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        return EgoPose(-(c * self.x + s * self.y), s * self.x - c * self.y, float(wrap_angle(-self.yaw)))

    def relative_to(self, reference: EgoPose) -> EgoPose:
        """This pose expressed in ``reference``'s local frame."""
        return reference.inverse().compose(self)

    def transform_points(self, points: np.ndarray) -> np.ndarray:
        """Local (n, 2) points to the parent frame."""
        points = np.asarray(points, dtype=np.float64)
        return points @ self.rotation().T + np.array([self.x, self.y])

    def transform_vectors(self, vectors: np.ndarray) -> np.ndarray:
        return np.asarray(vectors, dtype=np.float64) @ self.rotation().T

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.yaw])


def to_local(pose: EgoPose, world_points: np.ndarray) -> np.ndarray:
    return pose.inverse().transform_points(world_points)


def transfer_points(points: np.ndarray, source: EgoPose, target: EgoPose) -> np.ndarray:
    """Points given in ``source``'s local frame, re-expressed in ``target``'s."""
    return target.inverse().compose(source).transform_points(points)


def ego_transform_chain(episode: Episode) -> list[EgoPose]:
    """Pose of the ego frame at every 2 Hz sample of the episode."""
    return [episode.frame_pose(t) for t in range(episode.num_samples)]
