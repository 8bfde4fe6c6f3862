"""Synthetic driving world: scenarios, rendering, persistence and training samples."""

from .dataset import EpisodeDataset, FrameSample, FrameTargets, StoredEpisode, build_sample, frame_targets, generate_dataset
from .episode_io import read_episode, read_frame, write_episode
from .poses import EgoPose, ego_transform_chain, transfer_points, wrap_angle
from .render import CODES, NUM_CHANNELS, RenderedFrame, frame_images, ray_box_depth, render, scene_boxes
from .scenarios import AGENT_CLASSES, HORIZON, MAP_CLASSES, TEMPLATES, AgentTrack, Episode, MapElement, generate

__all__ = [
    "AGENT_CLASSES",
    "CODES",
    "HORIZON",
    "MAP_CLASSES",
    "NUM_CHANNELS",
    "TEMPLATES",
    "AgentTrack",
    "EgoPose",
    "Episode",
    "EpisodeDataset",
    "FrameSample",
    "FrameTargets",
    "MapElement",
    "RenderedFrame",
    "StoredEpisode",
    "build_sample",
    "ego_transform_chain",
    "frame_images",
    "frame_targets",
    "generate",
    "generate_dataset",
    "ray_box_depth",
    "read_episode",
    "read_frame",
    "render",
    "scene_boxes",
    "transfer_points",
    "wrap_angle",
]
