"""
Token and camera types shared by tokenization, scanning and the decoder.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from ..errors import ConfigError, ContractError
from ..tensor import Tensor, ops


class TokenKind(IntEnum):
    AGENT = 0
    MAP = 1
    EGO = 2
    SENSOR = 3
    WAYPOINT = 4


TASK_KINDS = (TokenKind.AGENT, TokenKind.MAP, TokenKind.EGO, TokenKind.WAYPOINT)


@dataclass(frozen=True)
class PerceptionRange:
    """BEV box around the ego, metres; x forward, y left."""

    x_min: float = -30.0
    x_max: float = 30.0
    y_min: float = -15.0
    y_max: float = 15.0

    @property
    def extent(self) -> tuple[float, float]:
        return self.x_max - self.x_min, self.y_max - self.y_min

    def contains(self, xy: np.ndarray) -> np.ndarray:
        xy = np.asarray(xy, dtype=np.float64)
        return (
            (xy[..., 0] >= self.x_min)
            & (xy[..., 0] <= self.x_max)
            & (xy[..., 1] >= self.y_min)
            & (xy[..., 1] <= self.y_max)
        )


@dataclass
class Token:
    """One decoding unit, as read out of a TokenSet."""

    semantic: np.ndarray
    pe: np.ndarray | None
    ref_pos: np.ndarray
    timestamp: int
    kind: TokenKind


@dataclass
class TokenSet:
    """Tokens stored column-wise: row i of every field belongs to token i.

    ``ref_pos`` is (n, 3); task tokens carry z = 0. ``timestamp`` is the
    integer 2 Hz frame index the token was produced at.
    """

    semantic: Tensor
    ref_pos: np.ndarray
    timestamp: np.ndarray
    kind: np.ndarray
    pe: Tensor | None = None
    velocity: np.ndarray | None = None

    def __post_init__(self) -> None:
        n = self.semantic.shape[0]
        self.ref_pos = np.asarray(self.ref_pos, dtype=np.float64).reshape(n, 3)
        self.timestamp = np.asarray(self.timestamp, dtype=np.int64).reshape(n)
        self.kind = np.asarray(self.kind, dtype=np.int64).reshape(n)
        if self.pe is not None and self.pe.shape != self.semantic.shape:
            raise ContractError(f"pe shape {list(self.pe.shape)} != semantic shape {list(self.semantic.shape)}")
        if self.velocity is None:
            self.velocity = np.zeros((n, 2))

    def __len__(self) -> int:
        return int(self.semantic.shape[0])

    @property
    def xy(self) -> np.ndarray:
        return self.ref_pos[:, :2]

    @property
    def width(self) -> int:
        return int(self.semantic.shape[1])

    def token(self, i: int) -> Token:
        return Token(
            semantic=self.semantic.data[i].copy(),
            pe=None if self.pe is None else self.pe.data[i].copy(),
            ref_pos=self.ref_pos[i].copy(),
            timestamp=int(self.timestamp[i]),
            kind=TokenKind(int(self.kind[i])),
        )

    def select(self, indices: Sequence[int] | np.ndarray) -> TokenSet:
        idx = np.asarray(indices, dtype=np.int64)
        assert self.velocity is not None
        return TokenSet(
            semantic=ops.take(self.semantic, idx),
            ref_pos=self.ref_pos[idx],
            timestamp=self.timestamp[idx],
            kind=self.kind[idx],
            pe=None if self.pe is None else ops.take(self.pe, idx),
            velocity=self.velocity[idx],
        )

    def of_kind(self, *kinds: TokenKind) -> np.ndarray:
        return np.flatnonzero(np.isin(self.kind, [int(k) for k in kinds]))

    @classmethod
    def concat(cls, parts: Sequence[TokenSet]) -> TokenSet:
        parts = [p for p in parts if len(p)]
        if not parts:
            raise ContractError("cannot concatenate zero token sets")
        with_pe = all(p.pe is not None for p in parts)
        return cls(
            semantic=ops.concat([p.semantic for p in parts]),
            ref_pos=np.concatenate([p.ref_pos for p in parts]),
            timestamp=np.concatenate([p.timestamp for p in parts]),
            kind=np.concatenate([p.kind for p in parts]),
            pe=ops.concat([p.pe for p in parts]) if with_pe else None,  # type: ignore[misc]
            velocity=np.concatenate([p.velocity for p in parts]),  # type: ignore[misc]
        )


@dataclass
class CameraRig:
    """Pinhole cameras rigidly mounted on the ego.

    ``rotations[k]`` and ``translations[k]`` map camera-k coordinates
    (x right, y down, z forward) into the ego frame (x forward, y left, z up).
    """

    intrinsics: np.ndarray
    rotations: np.ndarray
    translations: np.ndarray
    height: int
    width: int
    patch_size: int = 4
    names: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.intrinsics = np.asarray(self.intrinsics, dtype=np.float64).reshape(-1, 3, 3)
        self.rotations = np.asarray(self.rotations, dtype=np.float64).reshape(-1, 3, 3)
        self.translations = np.asarray(self.translations, dtype=np.float64).reshape(-1, 3)
        if not (len(self.intrinsics) == len(self.rotations) == len(self.translations)):
            raise ConfigError("camera rig arrays disagree on the camera count")
        for k, (kmat, rot) in enumerate(zip(self.intrinsics, self.rotations, strict=True)):
            if abs(np.linalg.det(kmat)) < 1e-12:
                raise ConfigError(f"camera {k}: intrinsic matrix is singular")
            if np.max(np.abs(rot @ rot.T - np.eye(3))) > 1e-9:
                raise ConfigError(f"camera {k}: rotation is not orthonormal")
        if self.height % self.patch_size or self.width % self.patch_size:
            raise ConfigError(f"image {self.height}x{self.width} is not divisible by patch size {self.patch_size}")
        if not self.names:
            self.names = [f"cam{k}" for k in range(self.num_cameras)]

    @property
    def num_cameras(self) -> int:
        return len(self.intrinsics)

    @property
    def grid_shape(self) -> tuple[int, int]:
        """Token grid (rows, cols) per camera."""
        return self.height // self.patch_size, self.width // self.patch_size

    @property
    def num_tokens(self) -> int:
        rows, cols = self.grid_shape
        return self.num_cameras * rows * cols

    def patch_centres(self) -> np.ndarray:
        """(rows * cols, 2) pixel coordinates (u, v) of the patch centres, row-major."""
        rows, cols = self.grid_shape
        v, u = np.meshgrid(
            (np.arange(rows) + 0.5) * self.patch_size,
            (np.arange(cols) + 0.5) * self.patch_size,
            indexing="ij",
        )
        return np.stack([u.reshape(-1), v.reshape(-1)], axis=-1)


def yaw_mount_rotation(yaw: float) -> np.ndarray:
    """Camera-to-ego rotation for a level camera looking along ego heading ``yaw``."""
    c, s = math.cos(yaw), math.sin(yaw)
    return np.array([[s, 0.0, c], [-c, 0.0, s], [0.0, -1.0, 0.0]])


def default_rig(
    num_cameras: int = 2,
    height: int = 16,
    width: int = 32,
    fov_deg: float = 100.0,
    patch_size: int = 4,
    mount_height: float = 1.5,
) -> CameraRig:
    """Evenly fanned forward cameras; two cameras look 50 degrees left and right."""
    focal = (width / 2.0) / math.tan(math.radians(fov_deg) / 2.0)
    kmat = np.array([[focal, 0.0, width / 2.0], [0.0, focal, height / 2.0], [0.0, 0.0, 1.0]])
    # adjacent cameras abut, the fan is centred on the heading
    span = math.radians(fov_deg) * (num_cameras - 1)
    yaws = np.linspace(span / 2.0, -span / 2.0, num_cameras)
    names = ["front_left", "front_right"] if num_cameras == 2 else [f"cam{k}" for k in range(num_cameras)]
    return CameraRig(
        intrinsics=np.stack([kmat] * num_cameras),
        rotations=np.stack([yaw_mount_rotation(y) for y in yaws]),
        translations=np.tile([0.0, 0.0, mount_height], (num_cameras, 1)),
        height=height,
        width=width,
        patch_size=patch_size,
        names=names,
    )
