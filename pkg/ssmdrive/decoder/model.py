"""
The end-to-end model.

Per frame: patch tokens from the camera images, token depth, back-projection
to 3D reference points, then L unified decoder layers. Each layer runs its
view correspondence, temporal fusion and task relation passes in the
configured order, decodes every task from the head inputs and moves the task
references onto its predictions for the next layer.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ..config import MemoryConfig, ModelConfig, ScanConfig
from ..errors import ContractError
from ..heads.heads import HeadOutputs, residual_combine
from ..scan.orders import ScanOrder, axis_order, ego_local2global_order, temporal_order, trajectory_local2global_order
from ..scan.schedule import SpatialStrategy, build_schedule
from ..scan.trajectory import trajectory_importance
from ..tensor import Module, Tensor
from ..tokens.embedding import PositionalEmbedding
from ..tokens.encoder import DEPTH_FLOOR, PatchEncoder
from ..tokens.geometry import backproject_tokens
from ..tokens.mln import MotionAwareNorm
from ..tokens.queries import TaskQueries, TaskQueryLayout
from ..tokens.types import PerceptionRange, TokenKind, TokenSet
from ..utils.tracing import stage
from ..world.dataset import FrameSample
from ..world.render import NUM_CHANNELS
from ..world.scenarios import SAMPLE_DT
from .layer import DecoderLayer, ltf_forward, trm_forward, vcl_forward
from .memory import MemoryQueue, propagate_memory


class NoiseMode(str, Enum):
    NORMAL = "normal"
    GT = "gt"
    NOISY = "noisy"
    MISCALIBRATED = "miscalibrated"


@dataclass(frozen=True)
class NoiseSettings:
    mode: NoiseMode = NoiseMode.NORMAL
    depth_std: float = 1.0
    rotation_std: float = 0.02
    translation_std: float = 0.1
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", NoiseMode(self.mode))


@dataclass
class ScannedTokens:
    """Positions, frames and kinds of the tokens one pass scanned, with the order it used."""

    ref_pos: np.ndarray
    timestamp: np.ndarray
    kind: np.ndarray
    order: ScanOrder

    def __len__(self) -> int:
        return len(self.order)

    def rows(self) -> list[dict[str, float | int]]:
        """One row per sequence slot: the token scanned there and its position and frame."""
        return [
            {
                "slot": slot,
                "token_id": int(i),
                "kind": int(self.kind[i]),
                "x": float(self.ref_pos[i, 0]),
                "y": float(self.ref_pos[i, 1]),
                "t": int(self.timestamp[i]),
            }
            for slot, i in enumerate(self.order.perm)
        ]


@dataclass
class FrameOutput:
    layers: list[HeadOutputs]
    depth: Tensor  # (G,) predicted token depth
    sensor_refs: np.ndarray  # (G, 3) back-projected reference points
    tasks: TokenSet  # task tokens leaving the last layer
    refs: list[np.ndarray] = field(default_factory=list)  # task references entering each layer, then the final ones
    scans: list[dict[str, ScannedTokens]] = field(default_factory=list)  # per layer, the sequences each pass scanned

    @property
    def final(self) -> HeadOutputs:
        return self.layers[-1]

    @property
    def waypoints(self) -> np.ndarray:
        return self.final.plan.waypoints.data

    @property
    def sequence_lengths(self) -> list[dict[str, int]]:
        return [{part: len(scanned) for part, scanned in layer.items()} for layer in self.scans]


def _small_rotation(rng: np.random.Generator, std: float) -> np.ndarray:
    roll, pitch, yaw = rng.normal(0.0, std, size=3)
    cr, sr, cp, sp, cy, sy = np.cos(roll), np.sin(roll), np.cos(pitch), np.sin(pitch), np.cos(yaw), np.sin(yaw)
    rx = np.array([[1, 0, 0], [0, cr, -sr], [0, sr, cr]])
    ry = np.array([[cp, 0, sp], [0, 1, 0], [-sp, 0, cp]])
    rz = np.array([[cy, -sy, 0], [sy, cy, 0], [0, 0, 1]])
    return rz @ ry @ rx


class SsmDriveModel(Module):
    def __init__(
        self,
        model: ModelConfig | None = None,
        scan: ScanConfig | None = None,
        memory: MemoryConfig | None = None,
        seed: int = 0,
        noise: NoiseSettings | None = None,
        bev: PerceptionRange | None = None,
    ) -> None:
        self.model_config = model or ModelConfig()
        self.scan_config = scan or ScanConfig()
        self.memory_config = memory or MemoryConfig()
        self.noise = noise or NoiseSettings()
        self.bev = bev or PerceptionRange()
        cfg = self.model_config
        rng = np.random.default_rng(seed)
        self.layout = TaskQueryLayout(cfg.agents, cfg.map_instances, cfg.points_per_instance, cfg.plan_steps)
        self.encoder = PatchEncoder(cfg.width, NUM_CHANNELS, rng, cfg.patch_size)
        self.queries = TaskQueries(cfg.width, self.layout, rng, self.bev, self.scan_config.trajectory_prior)
        self.embedding = PositionalEmbedding(cfg.width, rng, cfg.bands)
        self.mln = MotionAwareNorm(cfg.width, rng)
        self.layers = [
            DecoderLayer(cfg.width, self.layout, rng, cfg.state, cfg.expand, cfg.dt_rank, cfg.motion_steps, cfg.modes)
            for _ in range(cfg.layers)
        ]
        self.schedule = build_schedule(
            cfg.layers, self.scan_config.vcl_pattern, self.scan_config.trm_strategy, self.scan_config.ltf_mode
        )
        self._noise_rng = np.random.default_rng(self.noise.seed)
        logging.info(
            f"Model: {cfg.layers} layers, width {cfg.width}, {self.layout.total} task tokens, "
            f"{sum(p.size for p in self.parameters())} parameters"
        )

    def new_memory(self) -> MemoryQueue:
        m = self.memory_config
        return MemoryQueue(m.queue_length, m.top_k, m.map_top_k)

    # Tokens

    def _backprojection_depth(self, depth: Tensor, sample: FrameSample) -> np.ndarray:
        mode = self.noise.mode
        if mode is NoiseMode.GT:
            return np.maximum(sample.targets.token_depth, DEPTH_FLOOR)
        if mode is NoiseMode.NOISY:
            noisy = depth.data + self._noise_rng.normal(0.0, self.noise.depth_std, size=depth.shape)
            return np.maximum(noisy, DEPTH_FLOOR)
        return depth.data

    def sensor_tokens(self, sample: FrameSample) -> tuple[TokenSet, Tensor]:
        rig = sample.rig
        with stage("backbone"):
            semantic = self.encoder.encode_images(sample.images, rig)
        with stage("depth prediction"):
            depth = self.encoder.predict_depth(semantic)
            rotations, translations = rig.rotations, rig.translations
            if self.noise.mode is NoiseMode.MISCALIBRATED:
                rotations = np.stack([_small_rotation(self._noise_rng, self.noise.rotation_std) @ r for r in rotations])
                translations = translations + self._noise_rng.normal(0.0, self.noise.translation_std, size=translations.shape)
            refs = backproject_tokens(self._backprojection_depth(depth, sample), rig, rotations, translations)
        g = len(refs)
        kinds = np.full(g, TokenKind.SENSOR)
        tokens = TokenSet(
            semantic=semantic,
            ref_pos=refs,
            timestamp=np.full(g, sample.timestamp),
            kind=kinds,
            pe=self.embedding(refs, np.zeros(g), kinds),
        )
        return tokens, depth

    def history_tokens(self, memory: MemoryQueue | None, sample: FrameSample) -> TokenSet | None:
        if memory is None:
            return None
        with stage("temporal memory propagation"):
            gathered = memory.gather(sample.pose, sample.timestamp)
            if gathered is None:
                return None
            tokens = gathered.tokens
            age = (sample.timestamp - tokens.timestamp) * SAMPLE_DT
            return TokenSet(
                semantic=self.mln(tokens.semantic, gathered.motion),
                ref_pos=tokens.ref_pos,
                timestamp=tokens.timestamp,
                kind=tokens.kind,
                pe=self.embedding(tokens.ref_pos, age, tokens.kind),
                velocity=tokens.velocity,
            )

    # Scan orders

    def spatial_order(
        self, strategy: SpatialStrategy, xy: np.ndarray, kinds: np.ndarray, waypoints: np.ndarray
    ) -> ScanOrder:
        scan = self.scan_config
        if strategy in (SpatialStrategy.HORIZONTAL, SpatialStrategy.VERTICAL):
            return axis_order(xy, strategy.value)
        if strategy is SpatialStrategy.EGO_SPIRAL:
            return ego_local2global_order(xy, scan.bev_grid, self.bev, scan.spiral_orientation)
        importance = trajectory_importance(xy, waypoints, scan.dense_waypoints)
        return trajectory_local2global_order(kinds, importance, scan.importance_descending)

    def scan_orders(self, sample: FrameSample, memory: MemoryQueue | None = None, layer: int = 0) -> dict[str, ScannedTokens]:
        """The sequences layer ``layer`` scans for ``sample``, at the references refined by the layers before it."""
        if not 0 <= layer < len(self.layers):
            raise ContractError(f"layer {layer} outside 0..{len(self.layers) - 1}")
        return self.forward(sample, memory).scans[layer]

    # Forward

    def forward(
        self,
        sample: FrameSample,
        memory: MemoryQueue | None = None,
        references: Sequence[np.ndarray] | None = None,
    ) -> FrameOutput:
        """Decode one frame; ``memory`` is read but not updated (see ``propagate``).

        ``references`` replays the task references each layer entered in an
        earlier decode (``FrameOutput.refs``) instead of refining them anew.
        """
        cfg = self.model_config
        if references is not None and len(references) < len(self.layers):
            raise ContractError(f"{len(references)} reference sets for {len(self.layers)} layers")
        sensors, depth = self.sensor_tokens(sample)
        history = self.history_tokens(memory, sample)
        tasks = self.queries(sample.canbus, sample.timestamp)
        refs = tasks.ref_pos.copy()
        waypoint_rows = tasks.of_kind(TokenKind.WAYPOINT)
        outputs: list[HeadOutputs] = []
        seen_refs: list[np.ndarray] = []
        scans: list[dict[str, ScannedTokens]] = []
        for i, layer in enumerate(self.layers):
            plan = self.schedule[i]
            if references is not None:
                refs = np.array(references[i], dtype=np.float64)
            seen_refs.append(refs.copy())
            tasks = TokenSet(
                semantic=tasks.semantic,
                ref_pos=refs,
                timestamp=tasks.timestamp,
                kind=tasks.kind,
                pe=self.embedding(refs, np.zeros(len(refs)), tasks.kind),
                velocity=tasks.velocity,
            )
            waypoints = refs[waypoint_rows, :2]
            scanned: dict[str, ScannedTokens] = {}
            for part in cfg.layer_order:
                if part == "vcl" and cfg.use_vcl:
                    with stage("bidirectional serialization"):
                        pos = np.concatenate([tasks.ref_pos, sensors.ref_pos])
                        kinds = np.concatenate([tasks.kind, sensors.kind])
                        order = self.spatial_order(plan.vcl, pos[:, :2], kinds, waypoints)
                    with stage("view correspondence learning"):
                        tasks, sensor_out = vcl_forward(layer, tasks, sensors, order)
                    scanned["vcl"] = ScannedTokens(pos, np.concatenate([tasks.timestamp, sensors.timestamp]), kinds, order)
                    if cfg.reuse_sensor_updates and sensor_out is not None:
                        sensors = TokenSet(
                            semantic=sensor_out,
                            ref_pos=sensors.ref_pos,
                            timestamp=sensors.timestamp,
                            kind=sensors.kind,
                            pe=sensors.pe,
                        )
                elif part == "ltf" and cfg.use_ltf:
                    with stage("bidirectional serialization"):
                        if history is None:
                            pos, stamps, kinds = tasks.ref_pos, tasks.timestamp, tasks.kind
                        else:
                            pos = np.concatenate([history.ref_pos, tasks.ref_pos])
                            stamps = np.concatenate([history.timestamp, tasks.timestamp])
                            kinds = np.concatenate([history.kind, tasks.kind])
                        order = temporal_order(pos[:, :2], stamps, plan.ltf, self.scan_config.bev_grid, self.bev)
                    with stage("long-term temporal fusion"):
                        tasks = ltf_forward(layer, tasks, history, order)
                    scanned["ltf"] = ScannedTokens(pos, stamps, kinds, order)
                elif part == "trm" and cfg.use_trm:
                    with stage("bidirectional serialization"):
                        order = self.spatial_order(plan.trm, tasks.xy, tasks.kind, waypoints)
                    with stage("task relation modeling"):
                        tasks = trm_forward(layer, tasks, order)
                    scanned["trm"] = ScannedTokens(tasks.ref_pos, tasks.timestamp, tasks.kind, order)
            with stage("task head inference"):
                feats = residual_combine(tasks.semantic, tasks.pe) if cfg.residual_combine else tasks.semantic
                out = layer.heads(feats, refs)
            outputs.append(out)
            scans.append(scanned)
            if cfg.iterative_refine:
                refs = out.refined_refs(refs, self.layout)
        seen_refs.append(refs.copy())
        tasks = TokenSet(
            semantic=tasks.semantic,
            ref_pos=refs,
            timestamp=tasks.timestamp,
            kind=tasks.kind,
            pe=tasks.pe,
            velocity=tasks.velocity,
        )
        return FrameOutput(outputs, depth, sensors.ref_pos, tasks, seen_refs, scans)

    def propagate(self, memory: MemoryQueue, output: FrameOutput, sample: FrameSample) -> MemoryQueue:
        """Push this frame's Top-K task tokens (detached) into ``memory``."""
        if output.tasks.velocity is None:
            raise ContractError("task tokens carry no velocity")
        with stage("temporal memory propagation"):
            final = output.final
            velocity = output.tasks.velocity.copy()
            velocity[output.tasks.of_kind(TokenKind.AGENT)] = final.detection.velocity.data
            tasks = TokenSet(
                semantic=output.tasks.semantic.detach(),
                ref_pos=final.refined_refs(output.refs[-2], self.layout),
                timestamp=output.tasks.timestamp,
                kind=output.tasks.kind,
                velocity=velocity,
            )
            return propagate_memory(
                memory,
                tasks,
                self.layout,
                final.detection.scores(),
                final.map.scores(),
                sample.pose,
                sample.timestamp,
            )

    def step(self, sample: FrameSample, memory: MemoryQueue) -> FrameOutput:
        """Streaming inference: decode a frame, then update the memory with it."""
        output = self.forward(sample, memory)
        self.propagate(memory, output, sample)
        return output
