"""
Shared fixtures: a tiny model configuration and a rendered toy episode that
matches it, so decoder-level tests stay fast.
"""

import os

import numpy as np
import pytest

from ssmdrive.config import ExperimentConfig, build_config
from ssmdrive.tokens.types import default_rig
from ssmdrive.world.dataset import FrameSample, build_sample
from ssmdrive.world.scenarios import Episode, generate

SLOW = os.environ.get("SSMDRIVE_SLOW") == "1"

TINY = {
    "model": {
        "width": "16",
        "state": "4",
        "layers": "2",
        "agents": "4",
        "map_instances": "2",
        "points_per_instance": "4",
        "modes": "2",
        "bands": "4",
    },
    "scan": {"bev_grid": "10", "dense_waypoints": "10"},
    "memory": {"queue_length": "2", "top_k": "2", "map_top_k": "1"},
    "data": {"image_height": "8", "image_width": "16", "episodes": "4", "held_out": "1", "frames": "3"},
    "train": {"epochs": "1", "clip_frames": "2"},
}


def pytest_collection_modifyitems(config: pytest.Config, items: list[pytest.Item]) -> None:
    if SLOW:
        return
    skip = pytest.mark.skip(reason="set SSMDRIVE_SLOW=1 to run acceptance-scale tests")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def tiny_config() -> ExperimentConfig:
    return build_config({section: dict(values) for section, values in TINY.items()})


@pytest.fixture
def tiny_episode(tiny_config: ExperimentConfig) -> Episode:
    data = tiny_config.data
    rig = default_rig(data.cameras, data.image_height, data.image_width, data.fov_deg, tiny_config.model.patch_size)
    return generate("lead-brake", seed=3, num_frames=4, rig=rig)


@pytest.fixture
def tiny_samples(tiny_episode: Episode) -> list[FrameSample]:
    return [build_sample(tiny_episode, t) for t in range(tiny_episode.num_frames)]


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
