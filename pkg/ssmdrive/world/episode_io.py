"""
Episode persistence.

Layout per episode::

    <root>/<episode_id>/manifest.json     geometry, rig and signals as JSON
    <root>/<episode_id>/frames/<t>.bin    rendered frame t

A frame file is the int8 semantic codes (N_c*H*W), then little-endian float64
pixel depth (N_c*H*W), token depth (G) and finally int8 token hit flags (G).
JSON floats round-trip exactly, so geometry survives a write/read bit-equal.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any

import numpy as np

from ..errors import ConfigError
from ..tokens.types import CameraRig
from .render import RenderedFrame, render
from .scenarios import AgentTrack, Episode, MapElement

MANIFEST_VERSION = 1


def episode_to_dict(episode: Episode) -> dict[str, Any]:
    rig = episode.rig
    return {
        "version": MANIFEST_VERSION,
        "episode_id": episode.episode_id,
        "template": episode.template,
        "seed": episode.seed,
        "num_frames": episode.num_frames,
        "ego_size": list(episode.ego_size),
        "frame_transform": episode.frame_transform.tolist(),
        "ego_states": episode.ego_states.tolist(),
        "canbus": episode.canbus.tolist(),
        "commands": episode.commands,
        "agents": [{"cls": a.cls, "size": list(a.size), "states": a.states.tolist()} for a in episode.agents],
        "map_elements": [{"cls": m.cls, "points": m.points.tolist()} for m in episode.map_elements],
        "rig": {
            "intrinsics": rig.intrinsics.tolist(),
            "rotations": rig.rotations.tolist(),
            "translations": rig.translations.tolist(),
            "height": rig.height,
            "width": rig.width,
            "patch_size": rig.patch_size,
            "names": rig.names,
        },
    }


def episode_from_dict(doc: dict[str, Any]) -> Episode:
    if doc.get("version") != MANIFEST_VERSION:
        raise ConfigError(f"unsupported episode manifest version {doc.get('version')!r}")
    return Episode(
        episode_id=doc["episode_id"],
        template=doc["template"],
        seed=int(doc["seed"]),
        num_frames=int(doc["num_frames"]),
        ego_states=np.array(doc["ego_states"], dtype=np.float64),
        canbus=np.array(doc["canbus"], dtype=np.float64),
        commands=list(doc["commands"]),
        agents=[AgentTrack(a["cls"], tuple(a["size"]), np.array(a["states"], dtype=np.float64)) for a in doc["agents"]],
        map_elements=[MapElement(m["cls"], np.array(m["points"], dtype=np.float64)) for m in doc["map_elements"]],
        rig=CameraRig(**doc["rig"]),
        ego_size=tuple(doc["ego_size"]),
        frame_transform=np.array(doc.get("frame_transform", np.eye(3).tolist()), dtype=np.float64),
    )


def _frame_bytes(frame: RenderedFrame) -> bytes:
    return b"".join(
        [
            frame.codes.astype(np.int8).tobytes(),
            frame.depth.astype("<f8").tobytes(),
            frame.token_depth.astype("<f8").tobytes(),
            frame.token_hit.astype(np.int8).tobytes(),
        ]
    )


def _frame_from_bytes(raw: bytes, rig: CameraRig) -> RenderedFrame:
    pixels = rig.num_cameras * rig.height * rig.width
    tokens = rig.num_tokens
    expected = pixels + 8 * pixels + 8 * tokens + tokens
    if len(raw) != expected:
        raise ConfigError(f"frame file holds {len(raw)} bytes, rig expects {expected}")
    shape = (rig.num_cameras, rig.height, rig.width)
    codes = np.frombuffer(raw, dtype=np.int8, count=pixels).reshape(shape)
    offset = pixels
    depth = np.frombuffer(raw, dtype="<f8", count=pixels, offset=offset).reshape(shape)
    offset += 8 * pixels
    token_depth = np.frombuffer(raw, dtype="<f8", count=tokens, offset=offset)
    offset += 8 * tokens
    token_hit = np.frombuffer(raw, dtype=np.int8, count=tokens, offset=offset).astype(bool)
    return RenderedFrame(codes.copy(), depth.astype(np.float64), token_depth.astype(np.float64), token_hit)


def write_episode(episode: Episode, root: str | Path, frames: list[RenderedFrame] | None = None) -> Path:
    """Write manifest and rendered observed frames; renders them when not given."""
    folder = Path(root) / episode.episode_id
    (folder / "frames").mkdir(parents=True, exist_ok=True)
    (folder / "manifest.json").write_text(json.dumps(episode_to_dict(episode)))
    frames = frames if frames is not None else [render(episode, None, t) for t in range(episode.num_frames)]
    for t, frame in enumerate(frames):
        (folder / "frames" / f"{t}.bin").write_bytes(_frame_bytes(frame))
    logging.debug(f"Episode {episode.episode_id} written to {folder}")
    return folder


def read_episode(folder: str | Path) -> Episode:
    folder = Path(folder)
    try:
        doc = json.loads((folder / "manifest.json").read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read episode manifest in {folder}: {exc}") from exc
    return episode_from_dict(doc)


def read_frame(folder: str | Path, t: int, rig: CameraRig) -> RenderedFrame:
    return _frame_from_bytes((Path(folder) / "frames" / f"{t}.bin").read_bytes(), rig)
