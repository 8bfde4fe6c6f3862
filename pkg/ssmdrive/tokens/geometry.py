"""
Pinhole geometry between camera pixels and the ego frame.

Depth is z-depth along the camera's optical axis, so a pixel (u, v) at depth d
sits at K^-1 [u d, v d, d] in camera coordinates.
"""

from __future__ import annotations

import numpy as np

from ..errors import ContractError
from .types import CameraRig


def backproject(u: float, v: float, d: float, k: int, rig: CameraRig) -> np.ndarray:
    """Ego-frame point seen by camera ``k`` at pixel (u, v) and depth ``d``."""
    if d <= 0:
        raise ContractError(f"back-projection needs positive depth, got {d}")
    cam = np.linalg.solve(rig.intrinsics[k], np.array([u * d, v * d, d], dtype=np.float64))
    return rig.rotations[k] @ cam + rig.translations[k]


def project(point: np.ndarray, k: int, rig: CameraRig) -> tuple[float, float, float]:
    """Inverse of ``backproject``: returns (u, v, d) of an ego-frame point."""
    cam = rig.rotations[k].T @ (np.asarray(point, dtype=np.float64) - rig.translations[k])
    pix = rig.intrinsics[k] @ cam
    d = float(cam[2])
    if d <= 0:
        raise ContractError("point lies behind the camera")
    return float(pix[0] / d), float(pix[1] / d), d


def camera_rays(rig: CameraRig, pixels: np.ndarray) -> np.ndarray:
    """(N_c, P, 3) ego-frame directions with unit z-depth for pixel coordinates (P, 2)."""
    homog = np.concatenate([pixels, np.ones((len(pixels), 1))], axis=1)
    rays = []
    for k in range(rig.num_cameras):
        cam = np.linalg.solve(rig.intrinsics[k], homog.T).T
        rays.append(cam @ rig.rotations[k].T)
    return np.stack(rays)


def backproject_tokens(
    depth: np.ndarray,
    rig: CameraRig,
    rotations: np.ndarray | None = None,
    translations: np.ndarray | None = None,
) -> np.ndarray:
    """3D reference positions of all G sensor tokens.

    Args:
        depth: (G,) positive z-depths, camera-major then row-major over patches.
        rig: The camera rig providing patch centres and intrinsics.
        rotations: Optional extrinsic rotations overriding the rig's, e.g. perturbed ones.
        translations: Optional extrinsic translations overriding the rig's.

    Returns:
        (G, 3) ego-frame points.
    """
    depth = np.asarray(depth, dtype=np.float64)
    if depth.shape != (rig.num_tokens,):
        raise ContractError(f"expected {rig.num_tokens} token depths, got shape {list(depth.shape)}")
    if np.any(depth <= 0):
        raise ContractError("token depths must be positive")
    rot = rig.rotations if rotations is None else rotations
    trans = rig.translations if translations is None else translations
    centres = rig.patch_centres()
    homog = np.concatenate([centres, np.ones((len(centres), 1))], axis=1)
    per_cam = depth.reshape(rig.num_cameras, -1)
    points = []
    for k in range(rig.num_cameras):
        cam = np.linalg.solve(rig.intrinsics[k], homog.T).T * per_cam[k][:, None]
        points.append(cam @ rot[k].T + trans[k])
    return np.concatenate(points)
