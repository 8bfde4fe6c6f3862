"""Unified Mamba decoder, temporal memory and the end-to-end model."""

from .layer import DecoderLayer, ltf_forward, trm_forward, vcl_forward
from .memory import MemoryFrame, MemoryQueue, MemoryTokens, propagate_memory, snapshot_indices, top_k_indices
from .model import SsmDriveModel, FrameOutput, NoiseMode, NoiseSettings, ScannedTokens

__all__ = [
    "DecoderLayer",
    "SsmDriveModel",
    "FrameOutput",
    "MemoryFrame",
    "MemoryQueue",
    "MemoryTokens",
    "NoiseMode",
    "NoiseSettings",
    "ScannedTokens",
    "ltf_forward",
    "propagate_memory",
    "snapshot_indices",
    "top_k_indices",
    "trm_forward",
    "vcl_forward",
]
