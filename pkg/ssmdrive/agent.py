"""
The streaming driving agent.

Wraps a trained model and its memory queue: frames arrive one at a time, each
is decoded against the memory of earlier frames and then pushed into it.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Iterator
from dataclasses import dataclass

import numpy as np

from .decoder.memory import MemoryQueue
from .decoder.model import SsmDriveModel, FrameOutput
from .world.dataset import FrameSample


@dataclass
class DrivingDecision:
    episode_id: str
    timestamp: int
    waypoints: np.ndarray  # (T_e, 2) planned ego positions
    boxes: np.ndarray  # (N_a, 7) decoded agent boxes
    scores: np.ndarray  # (N_a,)
    trajectories: np.ndarray  # (N_a, K, T_m, 2)
    memory_frames: int
    memory_tokens: int
    transform_error: float  # memory references moved into this frame and back, largest deviation


class DriveAgent:
    def __init__(self, model: SsmDriveModel) -> None:
        self.model = model
        self.memory: MemoryQueue = model.new_memory()
        self._episode: str | None = None

    def reset(self) -> None:
        self.memory.clear()
        self._episode = None

    def observe(self, sample: FrameSample) -> tuple[DrivingDecision, FrameOutput]:
        if sample.episode_id != self._episode:
            if self._episode is not None:
                logging.info(f"New episode {sample.episode_id}, clearing memory")
            self.reset()
            self._episode = sample.episode_id
        error = self.memory.round_trip_error(sample.pose, sample.timestamp)
        output = self.model.step(sample, self.memory)
        final = output.final
        decision = DrivingDecision(
            episode_id=sample.episode_id,
            timestamp=sample.timestamp,
            waypoints=output.waypoints.copy(),
            boxes=final.detection.boxes(),
            scores=final.detection.scores(),
            trajectories=final.motion.trajectories(final.detection.centres),
            memory_frames=len(self.memory),
            memory_tokens=self.memory.num_tokens,
            transform_error=error,
        )
        return decision, output

    def drive(self, samples: Iterable[FrameSample]) -> Iterator[DrivingDecision]:
        for sample in samples:
            decision, _ = self.observe(sample)
            yield decision
