"""
Task heads.

Each head is a two-layer perceptron on the head input of its task tokens.
Positions are regressed as offsets from the tokens' reference points, so a
head whose last layer outputs zeros reproduces the references.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, softmax

from ..errors import ContractError
from ..tensor import Mlp, Module, Parameter, Tensor, ops
from ..tokens.queries import TaskQueryLayout
from ..tokens.types import TokenKind
from ..world.scenarios import AGENT_CLASSES, CAR_SIZE, MAP_CLASSES

BOX_CODE = 8  # x, y, z, log w, log l, log h, sin yaw, cos yaw
PRIOR_PROBABILITY = 0.01


def _prior_bias() -> float:
    return -math.log((1.0 - PRIOR_PROBABILITY) / PRIOR_PROBABILITY)


def encode_boxes(boxes: np.ndarray) -> np.ndarray:
    """(n, 7) x, y, z, w, l, h, yaw boxes to (n, 8) regression codes."""
    boxes = np.asarray(boxes, dtype=np.float64).reshape(-1, 7)
    return np.concatenate(
        [boxes[:, :3], np.log(boxes[:, 3:6]), np.sin(boxes[:, 6:7]), np.cos(boxes[:, 6:7])], axis=1
    )


def decode_boxes(codes: np.ndarray) -> np.ndarray:
    codes = np.asarray(codes, dtype=np.float64).reshape(-1, BOX_CODE)
    yaw = np.arctan2(codes[:, 6], codes[:, 7])
    return np.concatenate([codes[:, :3], np.exp(codes[:, 3:6]), yaw[:, None]], axis=1)


@dataclass
class DetectionOutput:
    codes: Tensor  # (N_a, 8), x and y in the ego frame
    logits: Tensor  # (N_a, classes)
    velocity: Tensor  # (N_a, 2) m/s

    @property
    def centres(self) -> np.ndarray:
        return self.codes.data[:, :2]

    def boxes(self) -> np.ndarray:
        """(N_a, 7) decoded boxes; w, l, h are positive by construction."""
        return decode_boxes(self.codes.data)

    def scores(self) -> np.ndarray:
        return expit(self.logits.data).max(axis=1)

    def labels(self) -> np.ndarray:
        return self.logits.data.argmax(axis=1)


@dataclass
class MotionOutput:
    displacements: Tensor  # (N_a, K, T_m, 2) relative to each agent's current centre
    mode_logits: Tensor  # (N_a, K)

    def probabilities(self) -> np.ndarray:
        return softmax(self.mode_logits.data, axis=1)

    def trajectories(self, centres: np.ndarray) -> np.ndarray:
        return self.displacements.data + np.asarray(centres)[:, None, None, :]


@dataclass
class MapOutput:
    points: Tensor  # (N_m, P, 2)
    logits: Tensor  # (N_m, classes)

    def scores(self) -> np.ndarray:
        return expit(self.logits.data).max(axis=1)

    def labels(self) -> np.ndarray:
        return self.logits.data.argmax(axis=1)


@dataclass
class PlanOutput:
    waypoints: Tensor  # (T_e, 2)


@dataclass
class HeadOutputs:
    detection: DetectionOutput
    motion: MotionOutput
    map: MapOutput
    plan: PlanOutput

    def refined_refs(self, refs: np.ndarray, layout: TaskQueryLayout) -> np.ndarray:
        """Task reference points moved onto this layer's predictions (ego stays put)."""
        out = refs.copy()
        sl = layout.slices()
        out[sl[TokenKind.AGENT], :2] = self.detection.centres
        out[sl[TokenKind.MAP], :2] = self.map.points.data.reshape(-1, 2)
        out[sl[TokenKind.WAYPOINT], :2] = self.plan.waypoints.data
        return out


def residual_combine(semantic: Tensor, pe: Tensor | None) -> Tensor:
    """Head input: semantic plus positional embedding."""
    if pe is None:
        return semantic
    if semantic.shape != pe.shape:
        raise ContractError(f"semantic {list(semantic.shape)} and PE {list(pe.shape)} widths differ")
    return semantic + pe


class TaskHeads(Module):
    def __init__(
        self,
        width: int,
        layout: TaskQueryLayout,
        rng: np.random.Generator,
        motion_steps: int = 6,
        modes: int = 6,
    ) -> None:
        self.layout = layout
        self.motion_steps = motion_steps
        self.modes = modes
        agent_classes, map_classes = len(AGENT_CLASSES), len(MAP_CLASSES)
        self.detection = Mlp(width, width, BOX_CODE + 2 + agent_classes, rng, zero_last=True)
        bias = np.zeros(BOX_CODE + 2 + agent_classes)
        bias[2] = CAR_SIZE[2] / 2.0
        bias[3:6] = np.log([CAR_SIZE[0], CAR_SIZE[1], CAR_SIZE[2]])
        bias[7] = 1.0
        bias[BOX_CODE + 2 :] = _prior_bias()
        self.detection.fc2.bias.data = bias  # type: ignore[union-attr]
        self.mode_embed = Parameter(rng.normal(0.0, 0.1, size=(modes, width)))
        self.motion = Mlp(width, width, 2 * motion_steps + 1, rng)
        self.map_points = Mlp(width, width, 2, rng, zero_last=True)
        self.map_class = Mlp(width, width, map_classes, rng, zero_last=True)
        self.map_class.fc2.bias.data = np.full(map_classes, _prior_bias())  # type: ignore[union-attr]
        self.plan = Mlp(width, width, 2, rng, zero_last=True)
        # lower-triangular ones turn per-step deltas into cumulative displacements
        self._cumulate = np.tril(np.ones((motion_steps, motion_steps)))

    def detect(self, feats: Tensor, refs: np.ndarray) -> DetectionOutput:
        raw = self.detection(feats)
        centre = raw[:, :2] + refs[:, :2]
        codes = ops.concat([centre, raw[:, 2:BOX_CODE]], axis=1)
        return DetectionOutput(codes=codes, logits=raw[:, BOX_CODE + 2 :], velocity=raw[:, BOX_CODE : BOX_CODE + 2])

    def predict_motion(self, feats: Tensor) -> MotionOutput:
        agents, width = feats.shape
        steps = self.motion_steps
        per_mode = ops.reshape(feats, (agents, 1, width)) + ops.reshape(self.mode_embed, (1, self.modes, width))
        raw = self.motion(per_mode)
        deltas = ops.reshape(raw[:, :, : 2 * steps], (agents, self.modes, steps, 2))
        return MotionOutput(
            displacements=ops.matmul(Tensor(self._cumulate), deltas),
            mode_logits=raw[:, :, 2 * steps],
        )

    def predict_map(self, feats: Tensor, refs: np.ndarray) -> MapOutput:
        lay = self.layout
        width = feats.shape[1]
        points = self.map_points(feats) + refs[:, :2]
        grouped = ops.reshape(feats, (lay.map_instances, lay.points_per_instance, width))
        return MapOutput(
            points=ops.reshape(points, (lay.map_instances, lay.points_per_instance, 2)),
            logits=self.map_class(ops.mean(grouped, axis=1)),
        )

    def predict_plan(self, waypoint_feats: Tensor, ego_feat: Tensor, refs: np.ndarray) -> PlanOutput:
        return PlanOutput(self.plan(waypoint_feats + ego_feat) + refs[:, :2])

    def forward(self, feats: Tensor, refs: np.ndarray) -> HeadOutputs:
        """Decode every task from (N_task, C) head inputs and (N_task, 3) references."""
        sl = self.layout.slices()
        agents = feats[sl[TokenKind.AGENT]]
        return HeadOutputs(
            detection=self.detect(agents, refs[sl[TokenKind.AGENT]]),
            motion=self.predict_motion(agents),
            map=self.predict_map(feats[sl[TokenKind.MAP]], refs[sl[TokenKind.MAP]]),
            plan=self.predict_plan(feats[sl[TokenKind.WAYPOINT]], feats[sl[TokenKind.EGO]], refs[sl[TokenKind.WAYPOINT]]),
        )
