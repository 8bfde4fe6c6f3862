"""Unified tokens: sensor patches, task queries and their positional embeddings."""

from .embedding import PositionalEmbedding, sine_encoding
from .encoder import PatchEncoder, patchify
from .geometry import backproject, backproject_tokens, camera_rays, project
from .mln import MotionAwareNorm, motion_aware_normalize, motion_features
from .queries import (
    COMMANDS,
    TaskQueries,
    TaskQueryLayout,
    TrajectoryPrior,
    canbus_vector,
    grid_factor,
    init_task_tokens,
    uniform_grid,
    waypoint_prior,
)
from .types import CameraRig, PerceptionRange, Token, TokenKind, TokenSet, default_rig, yaw_mount_rotation

__all__ = [
    "COMMANDS",
    "CameraRig",
    "MotionAwareNorm",
    "PatchEncoder",
    "PerceptionRange",
    "PositionalEmbedding",
    "TaskQueries",
    "TaskQueryLayout",
    "Token",
    "TokenKind",
    "TokenSet",
    "TrajectoryPrior",
    "backproject",
    "backproject_tokens",
    "camera_rays",
    "canbus_vector",
    "default_rig",
    "grid_factor",
    "init_task_tokens",
    "motion_aware_normalize",
    "motion_features",
    "patchify",
    "project",
    "sine_encoding",
    "uniform_grid",
    "waypoint_prior",
    "yaw_mount_rotation",
]
