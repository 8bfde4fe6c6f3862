"""
Motion-aware layer normalisation for memory tokens.

Layer norm whose affine scale and shift come from an MLP over the motion that
separates a memory token from the current frame: ego pose delta (dx, dy, dyaw),
time delta in seconds and the token's velocity estimate (vx, vy).
"""

from __future__ import annotations

import numpy as np

from ..tensor import Module, Mlp, Tensor, ops
from .types import TokenSet

MOTION_WIDTH = 6


def motion_features(pose_delta: np.ndarray, time_delta: np.ndarray, velocity: np.ndarray) -> np.ndarray:
    """(n, 6) conditioning rows; ``pose_delta`` may be one (3,) row shared by all tokens."""
    velocity = np.asarray(velocity, dtype=np.float64).reshape(-1, 2)
    n = len(velocity)
    pose = np.broadcast_to(np.asarray(pose_delta, dtype=np.float64), (n, 3))
    dt = np.broadcast_to(np.asarray(time_delta, dtype=np.float64).reshape(-1, 1), (n, 1))
    return np.concatenate([pose, dt, velocity], axis=1)


class MotionAwareNorm(Module):
    def __init__(self, width: int, rng: np.random.Generator, hidden: int = 32) -> None:
        self.width = width
        self.cond = Mlp(MOTION_WIDTH, hidden, 2 * width, rng, zero_last=True)
        # identity affine at initialisation: scale 1, shift 0
        self.cond.fc2.bias.data = np.concatenate([np.ones(width), np.zeros(width)])  # type: ignore[union-attr]

    def forward(self, x: Tensor, motion: np.ndarray) -> Tensor:
        affine = self.cond(Tensor(motion))
        scale = affine[:, : self.width]
        shift = affine[:, self.width :]
        return ops.layer_norm(x) * scale + shift


def motion_aware_normalize(
    norm: MotionAwareNorm, history: TokenSet, pose_delta: np.ndarray, time_delta: np.ndarray
) -> TokenSet:
    """Re-normalise history semantics for the motion since they were stored."""
    motion = motion_features(pose_delta, time_delta, history.velocity)  # type: ignore[arg-type]
    return TokenSet(
        semantic=norm(history.semantic, motion),
        ref_pos=history.ref_pos,
        timestamp=history.timestamp,
        kind=history.kind,
        pe=history.pe,
        velocity=history.velocity,
    )
