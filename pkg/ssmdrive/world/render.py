"""
Semantic pinhole rendering of a frame.

Every pixel ray is intersected with the oriented boxes of the scene (agents,
and map markers rendered as low boxes along each polyline segment). A pixel
carries the semantic code of the nearest hit and its z-depth; rays hitting
nothing are free at the far plane. There is no ground surface.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..tokens.geometry import camera_rays
from ..tokens.types import CameraRig
from .scenarios import Episode

CODES = ("free", "car", "pedestrian", "divider", "crossing", "boundary")
CODE_INDEX = {name: i for i, name in enumerate(CODES)}
NUM_CHANNELS = len(CODES) + 1
FAR_PLANE = 60.0
SHADE_SCALE = 20.0

# (half width across the segment, height) of map markers
MARKER_SHAPE = {"divider": (0.15, 0.1), "crossing": (1.5, 0.05), "boundary": (0.15, 0.8)}


@dataclass
class SceneBoxes:
    centres: np.ndarray  # (B, 3)
    halves: np.ndarray  # (B, 3) half extents along box x (length), y (width), z
    yaws: np.ndarray  # (B,)
    codes: np.ndarray  # (B,)

    @classmethod
    def empty(cls) -> SceneBoxes:
        return cls(np.zeros((0, 3)), np.zeros((0, 3)), np.zeros(0), np.zeros(0, dtype=np.int64))

    def __len__(self) -> int:
        return len(self.codes)


@dataclass
class RenderedFrame:
    codes: np.ndarray  # (N_c, H, W) int8
    depth: np.ndarray  # (N_c, H, W)
    token_depth: np.ndarray  # (G,) depth along the patch-centre rays
    token_hit: np.ndarray  # (G,) bool

    def images(self) -> np.ndarray:
        return frame_images(self.codes, self.depth)


def frame_images(codes: np.ndarray, depth: np.ndarray) -> np.ndarray:
    """(N_c, H, W, 7): one-hot semantic code plus exp(-depth / 20) on hit pixels."""
    onehot = np.eye(len(CODES))[codes.astype(np.int64)]
    shade = np.where(codes > 0, np.exp(-depth / SHADE_SCALE), 0.0)
    return np.concatenate([onehot, shade[..., None]], axis=-1)


def scene_boxes(episode: Episode, t: int) -> SceneBoxes:
    """All renderable boxes of sample ``t`` in the ego frame at t."""
    centres, halves, yaws, codes = [], [], [], []
    for agent in episode.agents:
        x, y, yaw = agent.states[t]
        w, length, h = agent.size
        local = episode.to_local(t, np.array([[x, y]]))[0]
        centres.append([local[0], local[1], h / 2.0])
        halves.append([length / 2.0, w / 2.0, h / 2.0])
        yaws.append(float(episode.local_yaw(t, yaw)))
        codes.append(CODE_INDEX[agent.cls])
    for element in episode.map_elements:
        half_w, height = MARKER_SHAPE[element.cls]
        pts = episode.to_local(t, element.points)
        seg = pts[1:] - pts[:-1]
        mids = 0.5 * (pts[1:] + pts[:-1])
        lengths = np.hypot(seg[:, 0], seg[:, 1])
        for mid, vec, length in zip(mids, seg, lengths, strict=True):
            centres.append([mid[0], mid[1], height / 2.0])
            halves.append([length / 2.0, half_w, height / 2.0])
            yaws.append(float(np.arctan2(vec[1], vec[0])))
            codes.append(CODE_INDEX[element.cls])
    if not codes:
        return SceneBoxes.empty()
    return SceneBoxes(np.array(centres), np.array(halves), np.array(yaws), np.array(codes, dtype=np.int64))


def ray_box_depth(origins: np.ndarray, directions: np.ndarray, boxes: SceneBoxes, far: float = FAR_PLANE) -> tuple[np.ndarray, np.ndarray]:
    """Nearest positive ray parameter and box index per ray (-1 and ``far`` on a miss)."""
    rays = len(directions)
    if len(boxes) == 0:
        return np.full(rays, far), np.full(rays, -1, dtype=np.int64)
    c, s = np.cos(boxes.yaws), np.sin(boxes.yaws)
    # rotate into each box frame: (R, B, 3)
    rel = origins[:, None, :] - boxes.centres[None, :, :]
    o = np.stack([c * rel[..., 0] + s * rel[..., 1], -s * rel[..., 0] + c * rel[..., 1], rel[..., 2]], axis=-1)
    dx, dy, dz = directions[:, 0:1], directions[:, 1:2], directions[:, 2:3]
    d = np.stack([c * dx + s * dy, -s * dx + c * dy, np.broadcast_to(dz, o.shape[:2])], axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / d
        t1 = (-boxes.halves[None] - o) * inv
        t2 = (boxes.halves[None] - o) * inv
    # parallel rays: inside the slab never constrains, outside always misses
    parallel = d == 0.0
    inside = np.abs(o) <= boxes.halves[None]
    lo = np.where(parallel, np.where(inside, -np.inf, np.inf), np.minimum(t1, t2))
    hi = np.where(parallel, np.where(inside, np.inf, -np.inf), np.maximum(t1, t2))
    t_near = lo.max(axis=-1)
    t_far = hi.min(axis=-1)
    hit = (t_near <= t_far) & (t_near > 1e-9) & (t_near < far)
    t = np.where(hit, t_near, np.inf)
    best = np.argmin(t, axis=1)
    depth = t[np.arange(rays), best]
    missed = ~np.isfinite(depth)
    return np.where(missed, far, depth), np.where(missed, -1, best)


def render(episode: Episode, rig: CameraRig | None, t: int) -> RenderedFrame:
    """Semantic codes and z-depth for every pixel, plus depth along every token's patch-centre ray."""
    rig = rig or episode.rig
    boxes = scene_boxes(episode, t)
    rows, cols = np.meshgrid(np.arange(rig.height) + 0.5, np.arange(rig.width) + 0.5, indexing="ij")
    pixels = np.stack([cols.reshape(-1), rows.reshape(-1)], axis=-1)
    pixel_rays = camera_rays(rig, pixels)
    token_rays = camera_rays(rig, rig.patch_centres())
    codes, depth, token_depth, token_hit = [], [], [], []
    for k in range(rig.num_cameras):
        origin = np.broadcast_to(rig.translations[k], pixel_rays[k].shape)
        d, idx = ray_box_depth(origin, pixel_rays[k], boxes)
        code = np.where(idx >= 0, boxes.codes[np.maximum(idx, 0)] if len(boxes) else 0, 0)
        codes.append(code.reshape(rig.height, rig.width))
        depth.append(d.reshape(rig.height, rig.width))
        origin = np.broadcast_to(rig.translations[k], token_rays[k].shape)
        td, tidx = ray_box_depth(origin, token_rays[k], boxes)
        token_depth.append(td)
        token_hit.append(tidx >= 0)
    return RenderedFrame(
        codes=np.stack(codes).astype(np.int8),
        depth=np.stack(depth),
        token_depth=np.concatenate(token_depth),
        token_hit=np.concatenate(token_hit),
    )
