"""
Temporal memory.

After each frame a snapshot of the decoder's task tokens is pushed into a
FIFO queue holding at most ``capacity`` frames. Agent tokens (by detection
confidence) and the points of the best map instances (by class score) share
the Top-K budget; ego and waypoint tokens are always kept. Snapshots
stay in the ego frame they were taken in; ``gather`` moves them into the
current frame.
"""

from __future__ import annotations

from collections import deque
from collections.abc import Iterator
from dataclasses import dataclass

import numpy as np

from ..tensor import Tensor
from ..tokens.queries import TaskQueryLayout
from ..tokens.types import TokenKind, TokenSet
from ..world.poses import EgoPose
from ..world.scenarios import SAMPLE_DT


@dataclass
class MemoryFrame:
    semantic: np.ndarray  # (k, C), detached
    ref_pos: np.ndarray  # (k, 3) in the snapshot's ego frame
    velocity: np.ndarray  # (k, 2) in the snapshot's ego frame, m/s
    kind: np.ndarray
    timestamp: int
    pose: EgoPose

    def __len__(self) -> int:
        return len(self.kind)

    def count(self, kind: TokenKind) -> int:
        return int(np.sum(self.kind == kind))


@dataclass
class MemoryTokens:
    """History tokens re-expressed in the current ego frame."""

    tokens: TokenSet
    motion: np.ndarray  # (n, 6) MLN conditioning rows


def top_k_indices(scores: np.ndarray, k: int) -> np.ndarray:
    """Indices of the ``k`` highest scores, ties to the lower index, returned ascending."""
    scores = np.asarray(scores, dtype=np.float64)
    if k >= len(scores):
        return np.arange(len(scores))
    order = np.lexsort((np.arange(len(scores)), -scores))
    return np.sort(order[:k])


class MemoryQueue:
    def __init__(self, capacity: int = 4, top_k: int = 16, map_top_k: int = 2) -> None:
        self.capacity = capacity
        self.top_k = top_k
        self.map_top_k = map_top_k
        self.frames: deque[MemoryFrame] = deque(maxlen=max(capacity, 0))

    def __len__(self) -> int:
        return len(self.frames)

    def __iter__(self) -> Iterator[MemoryFrame]:
        return iter(self.frames)

    @property
    def num_tokens(self) -> int:
        return sum(len(f) for f in self.frames)

    def clear(self) -> None:
        self.frames.clear()

    def push(self, frame: MemoryFrame) -> None:
        # the bounded deque drops the oldest frame
        self.frames.append(frame)

    def gather(self, pose: EgoPose, timestamp: int) -> MemoryTokens | None:
        """All stored tokens, oldest frame first, moved into the frame of ``pose``.

        Agent references are advanced by their velocity over the elapsed time
        before the frame change.
        """
        if not self.frames:
            return None
        semantic, refs, velocity, kind, stamps, motion = [], [], [], [], [], []
        for frame in self.frames:
            relative = pose.inverse().compose(frame.pose)
            elapsed = (timestamp - frame.timestamp) * SAMPLE_DT
            xy = frame.ref_pos[:, :2].copy()
            moving = frame.kind == TokenKind.AGENT
            xy[moving] += frame.velocity[moving] * elapsed
            moved = relative.transform_points(xy)
            refs.append(np.concatenate([moved, frame.ref_pos[:, 2:]], axis=1))
            vel = relative.transform_vectors(frame.velocity)
            velocity.append(vel)
            semantic.append(frame.semantic)
            kind.append(frame.kind)
            stamps.append(np.full(len(frame), frame.timestamp))
            rows = np.empty((len(frame), 6))
            rows[:, :3] = relative.as_array()
            rows[:, 3] = elapsed
            rows[:, 4:] = vel
            motion.append(rows)
        tokens = TokenSet(
            semantic=Tensor(np.concatenate(semantic)),
            ref_pos=np.concatenate(refs),
            timestamp=np.concatenate(stamps),
            kind=np.concatenate(kind),
            velocity=np.concatenate(velocity),
        )
        return MemoryTokens(tokens, np.concatenate(motion))

    def round_trip_error(self, pose: EgoPose, timestamp: int) -> float:
        """Largest deviation of the stored references from the gathered ones mapped back into their snapshot frames."""
        gathered = self.gather(pose, timestamp)
        if gathered is None:
            return 0.0
        error, start = 0.0, 0
        for frame in self.frames:
            moved = gathered.tokens.ref_pos[start : start + len(frame), :2]
            start += len(frame)
            back = frame.pose.inverse().compose(pose).transform_points(moved)
            moving = frame.kind == TokenKind.AGENT
            back[moving] -= frame.velocity[moving] * (timestamp - frame.timestamp) * SAMPLE_DT
            error = max(error, float(np.abs(back - frame.ref_pos[:, :2]).max(initial=0.0)))
        return error


def snapshot_indices(
    layout: TaskQueryLayout, agent_scores: np.ndarray, map_scores: np.ndarray, top_k: int, map_top_k: int
) -> np.ndarray:
    """Task-token indices retained for memory, in storage order.

    Agent tokens and the points of the ``map_top_k`` best map instances share
    ``top_k`` slots; a map point carries its instance's score. Ego and
    waypoint tokens are kept outside the budget.
    """
    slices = layout.slices()
    agent_scores = np.asarray(agent_scores, dtype=np.float64)
    map_scores = np.asarray(map_scores, dtype=np.float64)
    points = layout.points_per_instance
    instances = top_k_indices(map_scores, map_top_k)
    maps = (instances[:, None] * points + np.arange(points)[None, :]).reshape(-1) + slices[TokenKind.MAP].start
    candidates = np.concatenate([np.arange(len(agent_scores)) + slices[TokenKind.AGENT].start, maps])
    scores = np.concatenate([agent_scores, np.repeat(map_scores[instances], points)])
    kept = candidates[top_k_indices(scores, top_k)]
    ego = np.arange(slices[TokenKind.EGO].start, slices[TokenKind.WAYPOINT].stop)
    return np.concatenate([kept, ego]).astype(np.int64)


def propagate_memory(
    queue: MemoryQueue,
    tasks: TokenSet,
    layout: TaskQueryLayout,
    agent_scores: np.ndarray,
    map_scores: np.ndarray,
    pose: EgoPose,
    timestamp: int,
) -> MemoryQueue:
    """Push the Top-K snapshot of this frame's decoder output; returns ``queue``."""
    keep = snapshot_indices(layout, agent_scores, map_scores, queue.top_k, queue.map_top_k)
    assert tasks.velocity is not None
    queue.push(
        MemoryFrame(
            semantic=tasks.semantic.data[keep].copy(),
            ref_pos=tasks.ref_pos[keep].copy(),
            velocity=tasks.velocity[keep].copy(),
            kind=tasks.kind[keep].copy(),
            timestamp=timestamp,
            pose=pose,
        )
    )
    return queue
