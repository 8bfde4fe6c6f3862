"""
Toy image backbone.

Each camera image is cut into non-overlapping square patches; a two-layer
perceptron maps every flattened patch to a sensor token, and a linear head
on the token predicts its positive z-depth.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError
from ..tensor import Linear, Mlp, Module, Tensor, ops
from .types import CameraRig

DEPTH_FLOOR = 1e-3
DEPTH_INIT = 20.0


def patchify(frames: np.ndarray, patch: int) -> np.ndarray:
    """(N_c, H, W, ch) images to (N_c * H/p * W/p, p * p * ch) patch rows."""
    cams, height, width, channels = frames.shape
    rows, cols = height // patch, width // patch
    grid = frames.reshape(cams, rows, patch, cols, patch, channels)
    return grid.transpose(0, 1, 3, 2, 4, 5).reshape(cams * rows * cols, patch * patch * channels)


class PatchEncoder(Module):
    def __init__(self, width: int, channels: int, rng: np.random.Generator, patch_size: int = 4) -> None:
        self.patch_size = patch_size
        self.channels = channels
        self.mlp = Mlp(patch_size * patch_size * channels, width, width, rng)
        self.depth_head = Linear(width, 1, rng, zero_init=True)
        # softplus(bias) ~= DEPTH_INIT at initialisation
        self.depth_head.bias.data = np.array([DEPTH_INIT])  # type: ignore[union-attr]

    def encode_images(self, frames: np.ndarray, rig: CameraRig) -> Tensor:
        """Sensor-token semantics (G, C) for one multi-view frame."""
        frames = np.asarray(frames, dtype=np.float64)
        if frames.ndim != 4 or frames.shape[0] != rig.num_cameras:
            raise ConfigError(f"got {frames.shape[0] if frames.ndim else 0} images for a {rig.num_cameras}-camera rig")
        if frames.shape[1:3] != (rig.height, rig.width) or frames.shape[3] != self.channels:
            raise ConfigError(
                f"image shape {list(frames.shape[1:])} does not match rig {rig.height}x{rig.width}x{self.channels}"
            )
        return self.mlp(Tensor(patchify(frames, self.patch_size)))

    def predict_depth(self, sensor: Tensor) -> Tensor:
        """(G,) positive depths."""
        raw = self.depth_head(sensor)
        return ops.reshape(ops.softplus(raw), (sensor.shape[0],)) + DEPTH_FLOOR

    def forward(self, frames: np.ndarray, rig: CameraRig) -> Tensor:
        return self.encode_images(frames, rig)
