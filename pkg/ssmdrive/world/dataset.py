"""
Episode datasets and per-frame training samples.
"""

from __future__ import annotations

import json
import logging
from collections.abc import Iterator, Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ConfigError
from ..scan.trajectory import resample_polyline
from ..tokens.queries import canbus_vector
from ..tokens.types import CameraRig, PerceptionRange
from .episode_io import read_episode, read_frame, write_episode
from .poses import EgoPose
from .render import RenderedFrame, frame_images, render
from .scenarios import AGENT_CLASSES, HORIZON, MAP_CLASSES, POINTS_PER_ELEMENT, SAMPLE_DT, TEMPLATES, Episode, generate

INDEX_FILE = "dataset.json"


@dataclass
class FrameTargets:
    boxes: np.ndarray  # (n, 7) x, y, z, w, l, h, yaw
    labels: np.ndarray  # (n,)
    futures: np.ndarray  # (n, T_m, 2) future centres
    velocities: np.ndarray  # (n, 2)
    map_points: np.ndarray  # (m, P, 2)
    map_labels: np.ndarray  # (m,)
    ego_future: np.ndarray  # (T_e, 2)
    obstacles: np.ndarray  # (T_e, k, 5) x, y, w, l, yaw of every agent at each future step
    token_depth: np.ndarray  # (G,)
    token_hit: np.ndarray  # (G,)
    ego_heading: float = 0.0  # ego yaw in its own frame; non-zero only for augmented episodes

    def map_of_class(self, cls: str) -> np.ndarray:
        return self.map_points[self.map_labels == MAP_CLASSES.index(cls)]

    def map_resampled(self, count: int) -> np.ndarray:
        """(m, count, 2) map polylines resampled by arc length to a model's point count."""
        if self.map_points.shape[1] == count:
            return self.map_points
        return np.array([resample_polyline(line, count) for line in self.map_points]).reshape(-1, count, 2)


@dataclass
class FrameSample:
    episode_id: str
    timestamp: int
    pose: EgoPose
    images: np.ndarray
    rig: CameraRig
    canbus: np.ndarray
    command: str
    targets: FrameTargets


def frame_targets(episode: Episode, t: int, rendered: RenderedFrame, bev: PerceptionRange | None = None) -> FrameTargets:
    """Ground truth of observed frame ``t``, everything in the ego frame at t."""
    bev = bev or PerceptionRange()
    boxes, labels, futures, velocities = [], [], [], []
    for agent in episode.agents:
        x, y, yaw = agent.states[t]
        centre = episode.to_local(t, np.array([[x, y]]))[0]
        if not bev.contains(centre):
            continue
        w, length, h = agent.size
        boxes.append([centre[0], centre[1], h / 2.0, w, length, h, float(episode.local_yaw(t, yaw))])
        labels.append(AGENT_CLASSES.index(agent.cls))
        futures.append(episode.to_local(t, agent.states[t + 1 : t + 1 + HORIZON, :2]))
        prev, nxt = (t - 1, t) if t > 0 else (t, t + 1)
        velocities.append(episode.local_vectors(t, (agent.states[nxt, :2] - agent.states[prev, :2]) / SAMPLE_DT))

    map_points, map_labels = [], []
    for element in episode.map_elements:
        pts = episode.to_local(t, element.points)
        if bev.contains(pts.mean(axis=0)):
            map_points.append(pts)
            map_labels.append(MAP_CLASSES.index(element.cls))

    obstacles = np.zeros((HORIZON, len(episode.agents), 5))
    for j, agent in enumerate(episode.agents):
        w, length, _ = agent.size
        future = agent.states[t + 1 : t + 1 + HORIZON]
        obstacles[:, j, :2] = episode.to_local(t, future[:, :2])
        obstacles[:, j, 2] = w
        obstacles[:, j, 3] = length
        obstacles[:, j, 4] = episode.local_yaw(t, future[:, 2])

    return FrameTargets(
        boxes=np.array(boxes).reshape(-1, 7),
        labels=np.array(labels, dtype=np.int64),
        futures=np.array(futures).reshape(-1, HORIZON, 2),
        velocities=np.array(velocities).reshape(-1, 2),
        map_points=np.array(map_points).reshape(len(map_points), POINTS_PER_ELEMENT, 2),
        map_labels=np.array(map_labels, dtype=np.int64),
        ego_future=episode.to_local(t, episode.ego_states[t + 1 : t + 1 + HORIZON, :2]),
        obstacles=obstacles,
        token_depth=rendered.token_depth.copy(),
        token_hit=rendered.token_hit.copy(),
        ego_heading=float(episode.local_yaw(t, episode.ego_states[t, 2])),
    )


def build_sample(episode: Episode, t: int, rendered: RenderedFrame | None = None) -> FrameSample:
    rendered = rendered or render(episode, None, t)
    speed, yaw_rate, accel = episode.canbus[t]
    command = episode.commands[t]
    return FrameSample(
        episode_id=episode.episode_id,
        timestamp=t,
        pose=episode.frame_pose(t),
        images=frame_images(rendered.codes, rendered.depth),
        rig=episode.rig,
        canbus=canbus_vector(speed, yaw_rate, accel, command),
        command=command,
        targets=frame_targets(episode, t, rendered),
    )


@dataclass
class StoredEpisode:
    folder: Path
    episode: Episode

    def frames(self) -> list[RenderedFrame]:
        return [read_frame(self.folder, t, self.episode.rig) for t in range(self.episode.num_frames)]

    def samples(self, episode: Episode | None = None) -> list[FrameSample]:
        """Samples of every observed frame; ``episode`` may be an augmented copy sharing the renders."""
        ep = episode or self.episode
        return [build_sample(ep, t, frame) for t, frame in enumerate(self.frames())]


class EpisodeDataset:
    """Episodes under ``<root>/episodes`` with a train/held-out split index."""

    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)
        index = self.root / INDEX_FILE
        if not index.exists():
            raise ConfigError(f"{self.root} is not a dataset directory (missing {INDEX_FILE})")
        self.index = json.loads(index.read_text())

    def _load(self, ids: Sequence[str]) -> list[StoredEpisode]:
        folder = self.root / "episodes"
        return [StoredEpisode(folder / i, read_episode(folder / i)) for i in ids]

    def train(self) -> list[StoredEpisode]:
        return self._load(self.index["train"])

    def held_out(self) -> list[StoredEpisode]:
        return self._load(self.index["held_out"])

    def __iter__(self) -> Iterator[StoredEpisode]:
        yield from self._load([*self.index["train"], *self.index["held_out"]])


def generate_dataset(
    out: str | Path,
    templates: Sequence[str],
    count: int,
    seed: int = 0,
    num_frames: int = 6,
    held_out: int = 0,
    rig: CameraRig | None = None,
) -> EpisodeDataset:
    """Generate ``count`` episodes cycling over ``templates``; the last ``held_out`` form the evaluation split."""
    unknown = [t for t in templates if t not in TEMPLATES]
    if unknown:
        raise ConfigError(f"unknown scenario templates {unknown}; known: {sorted(TEMPLATES)}")
    if held_out >= count and count > 0 and held_out > 0:
        raise ConfigError(f"held-out count {held_out} leaves no training episodes out of {count}")
    root = Path(out)
    ids = []
    for i in range(count):
        template = templates[i % len(templates)]
        episode = generate(template, seed + i, num_frames=num_frames, rig=rig, episode_id=f"ep-{seed + i:06d}-{template}")
        write_episode(episode, root / "episodes")
        ids.append(episode.episode_id)
    split = count - held_out
    (root / INDEX_FILE).write_text(
        json.dumps({"templates": list(templates), "seed": seed, "train": ids[:split], "held_out": ids[split:]}, indent=2)
    )
    logging.info(f"Generated {count} episodes ({held_out} held out) under {root}")
    return EpisodeDataset(root)
