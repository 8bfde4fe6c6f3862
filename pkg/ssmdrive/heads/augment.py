"""
Global rigid augmentation of episodes.

A transform (rotation about z, planar translation, optional mirror across
the ego x axis) is applied to the ego frame of every sample. Boxes, agent and
ego futures and map points all move with it, and so do the camera extrinsics:
the rendered images stay valid for the augmented episode, so stored frames are
reused as-is.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from ..world.scenarios import Episode

SWAPPED_COMMANDS = {"left": "right", "right": "left", "straight": "straight"}


@dataclass(frozen=True)
class RigidAugment:
    """p' = R(rotation) F p + translation, with F = diag(1, -1) when flipped."""

    rotation: float = 0.0
    translation: tuple[float, float] = (0.0, 0.0)
    flip_y: bool = False

    @classmethod
    def identity(cls) -> RigidAugment:
        return cls()

    def linear(self) -> np.ndarray:
        c, s = math.cos(self.rotation), math.sin(self.rotation)
        flip = np.diag([1.0, -1.0]) if self.flip_y else np.eye(2)
        return np.array([[c, -s], [s, c]]) @ flip

    def matrix(self) -> np.ndarray:
        m = np.eye(3)
        m[:2, :2] = self.linear()
        m[:2, 2] = self.translation
        return m

    def linear3(self) -> np.ndarray:
        m = np.eye(3)
        m[:2, :2] = self.linear()
        return m

    @property
    def mirrored(self) -> bool:
        return self.flip_y


def sample_augment(
    rng: np.random.Generator,
    max_rotation: float = math.pi / 8,
    max_translation: float = 1.0,
    flip_probability: float = 0.5,
) -> RigidAugment:
    return RigidAugment(
        rotation=float(rng.uniform(-max_rotation, max_rotation)),
        translation=(float(rng.uniform(-max_translation, max_translation)), float(rng.uniform(-max_translation, max_translation))),
        flip_y=bool(rng.random() < flip_probability),
    )


def apply_augment(episode: Episode, transform: RigidAugment) -> Episode:
    """The episode as seen from ego frames moved by ``transform``."""
    lin3 = transform.linear3()
    offset = np.array([transform.translation[0], transform.translation[1], 0.0])
    rig = replace(
        episode.rig,
        rotations=np.einsum("ij,kjl->kil", lin3, episode.rig.rotations),
        translations=episode.rig.translations @ lin3.T + offset,
    )
    canbus = episode.canbus.copy()
    commands = list(episode.commands)
    if transform.mirrored:
        canbus[:, 1] = -canbus[:, 1]
        commands = [SWAPPED_COMMANDS[c] for c in commands]
    return replace(
        episode,
        rig=rig,
        canbus=canbus,
        commands=commands,
        frame_transform=transform.matrix() @ episode.frame_transform,
    )


def augment(episode: Episode, rng: np.random.Generator, **ranges: float) -> Episode:
    """Apply one random rigid transform to the whole episode."""
    return apply_augment(episode, sample_augment(rng, **ranges))
