"""
Tests for the synthetic world: scenario generation, rendering, episode
storage and datasets.
"""

import math

import numpy as np
import pytest

from ssmdrive.errors import ConfigError
from ssmdrive.tokens import PerceptionRange, default_rig
from ssmdrive.world.dataset import EpisodeDataset, build_sample, generate_dataset
from ssmdrive.world.episode_io import read_episode, read_frame, write_episode
from ssmdrive.world.poses import EgoPose, ego_transform_chain, wrap_angle
from ssmdrive.world.render import CODES, FAR_PLANE, render
from ssmdrive.world.scenarios import HORIZON, TEMPLATES, generate

RIG = default_rig(2, 8, 16, patch_size=4)


@pytest.mark.parametrize("template", sorted(TEMPLATES))
def test_every_template_generates(template):
    episode = generate(template, seed=1, num_frames=4, rig=RIG)
    assert episode.num_samples == 4 + HORIZON
    assert len(episode.commands) == episode.num_samples
    for agent in episode.agents:
        assert agent.states.shape == (episode.num_samples, 3)
    assert np.all(np.isfinite(episode.ego_states))


def test_generation_is_deterministic():
    a = generate("cut-in", seed=7, num_frames=3, rig=RIG)
    b = generate("cut-in", seed=7, num_frames=3, rig=RIG)
    c = generate("cut-in", seed=8, num_frames=3, rig=RIG)
    np.testing.assert_array_equal(a.ego_states, b.ego_states)
    assert [x.states.tolist() for x in a.agents] == [x.states.tolist() for x in b.agents]
    assert not np.array_equal(a.canbus, c.canbus)


def test_unknown_template_is_rejected():
    with pytest.raises(ConfigError, match="unknown scenario template"):
        generate("teleport", seed=0)


def test_turns_follow_their_command():
    left = generate("turn-left", seed=2, num_frames=4, rig=RIG)
    right = generate("turn-right", seed=2, num_frames=4, rig=RIG)
    assert left.commands[0] == "left" and right.commands[0] == "right"
    assert left.ego_states[-1, 2] > 0.0 > right.ego_states[-1, 2]


def test_ego_future_moves_forward():
    episode = generate("straight-follow", seed=4, num_frames=3, rig=RIG)
    targets = build_sample(episode, 0).targets
    assert targets.ego_future.shape == (HORIZON, 2)
    assert np.all(np.diff(targets.ego_future[:, 0]) > 0.0)
    np.testing.assert_allclose(targets.ego_future[:, 1], 0.0, atol=1e-9)
    assert targets.ego_heading == pytest.approx(0.0)


def test_targets_stay_in_the_perception_range(tiny_episode):
    bev = PerceptionRange()
    for t in range(tiny_episode.num_frames):
        targets = build_sample(tiny_episode, t).targets
        assert np.all(bev.contains(targets.boxes[:, :2]))
        assert targets.futures.shape == (len(targets.boxes), HORIZON, 2)
        assert np.all(bev.contains(targets.map_points.mean(axis=1)))
        assert np.all(targets.boxes[:, 3:6] > 0)


def test_render_depths(tiny_episode):
    frame = render(tiny_episode, None, 0)
    rig = tiny_episode.rig
    assert frame.codes.shape == (rig.num_cameras, rig.height, rig.width)
    assert frame.codes.min() >= 0 and frame.codes.max() < len(CODES)
    assert frame.token_depth.shape == (rig.num_tokens,)
    assert np.all(frame.token_depth > 0.0)
    np.testing.assert_array_equal(frame.token_depth[~frame.token_hit], FAR_PLANE)
    assert np.all(frame.token_depth[frame.token_hit] < FAR_PLANE)
    # a lead vehicle sits in front of the ego, so something is hit
    assert frame.token_hit.any()


def test_episode_round_trip(tmp_path, tiny_episode):
    folder = write_episode(tiny_episode, tmp_path)
    loaded = read_episode(folder)
    np.testing.assert_array_equal(loaded.ego_states, tiny_episode.ego_states)
    np.testing.assert_array_equal(loaded.canbus, tiny_episode.canbus)
    np.testing.assert_array_equal(loaded.rig.intrinsics, tiny_episode.rig.intrinsics)
    assert loaded.commands == tiny_episode.commands
    assert [m.cls for m in loaded.map_elements] == [m.cls for m in tiny_episode.map_elements]
    frame = read_frame(folder, 2, loaded.rig)
    fresh = render(tiny_episode, None, 2)
    np.testing.assert_array_equal(frame.codes, fresh.codes)
    np.testing.assert_array_equal(frame.token_depth, fresh.token_depth)
    np.testing.assert_array_equal(frame.token_hit, fresh.token_hit)


def test_missing_manifest_is_a_config_error(tmp_path):
    with pytest.raises(ConfigError):
        read_episode(tmp_path / "nowhere")


def test_dataset_split(tmp_path):
    dataset = generate_dataset(tmp_path, ["lead-brake", "cut-in"], count=3, seed=5, num_frames=2, held_out=1, rig=RIG)
    train, held_out = dataset.train(), dataset.held_out()
    assert len(train) == 2 and len(held_out) == 1
    assert train[1].episode.template == "cut-in"
    assert len(train[0].samples()) == 2
    reopened = EpisodeDataset(tmp_path)
    assert [s.episode.episode_id for s in reopened] == [s.episode.episode_id for s in [*train, *held_out]]


def test_dataset_rejects_bad_requests(tmp_path):
    with pytest.raises(ConfigError):
        generate_dataset(tmp_path, ["no-such-template"], count=1)
    with pytest.raises(ConfigError, match="no training episodes"):
        generate_dataset(tmp_path, ["lead-brake"], count=2, held_out=2)
    with pytest.raises(ConfigError):
        EpisodeDataset(tmp_path / "empty")


def test_pose_algebra(rng):
    for _ in range(20):
        a = EgoPose(*rng.normal(size=2), float(rng.uniform(-math.pi, math.pi)))
        b = EgoPose(*rng.normal(size=2), float(rng.uniform(-math.pi, math.pi)))
        np.testing.assert_allclose(a.compose(b).matrix(), a.matrix() @ b.matrix(), atol=1e-12)
        np.testing.assert_allclose(a.compose(a.inverse()).matrix(), np.eye(3), atol=1e-12)
        np.testing.assert_allclose(b.relative_to(a).matrix(), np.linalg.inv(a.matrix()) @ b.matrix(), atol=1e-12)
    assert wrap_angle(math.pi) == pytest.approx(-math.pi)


def test_transform_chain_matches_the_samples(tiny_episode):
    chain = ego_transform_chain(tiny_episode)
    assert len(chain) == tiny_episode.num_samples
    for t, pose in enumerate(chain):
        np.testing.assert_allclose(pose.as_array(), tiny_episode.ego_states[t], atol=1e-12)
