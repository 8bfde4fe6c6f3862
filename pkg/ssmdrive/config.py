"""
Experiment configuration.

An INI-style file of ``[section]`` blocks and ``key = value`` lines, parsed
with configparser and validated section by section with pydantic models
that reject unknown keys. Command-line overrides use ``section.key=value``.
"""

from __future__ import annotations

import configparser
import json
import re
from collections.abc import Iterable
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .errors import ConfigError

LAYER_PARTS = ("vcl", "ltf", "trm")


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


def _listed(value: Any) -> Any:
    """Comma-separated text or a lone scalar as a list."""
    if isinstance(value, str):
        return [part.strip() for part in value.split(",") if part.strip()]
    if isinstance(value, (list, tuple)):
        return value
    return [value]


class ModelConfig(_Section):
    width: int = Field(64, gt=0)
    state: int = Field(8, gt=0)
    expand: int = Field(2, gt=0)
    dt_rank: int | None = None
    layers: int = Field(2, gt=0)
    agents: int = Field(32, gt=0)
    map_instances: int = Field(8, gt=0)
    points_per_instance: int = Field(20, ge=2)
    plan_steps: int = Field(6, gt=0)
    motion_steps: int = Field(6, gt=0)
    modes: int = Field(6, gt=0)
    patch_size: int = Field(4, gt=0)
    bands: int = Field(32, gt=0)
    layer_order: list[str] = Field(default_factory=lambda: list(LAYER_PARTS))
    use_vcl: bool = True
    use_ltf: bool = True
    use_trm: bool = True
    residual_combine: bool = True
    iterative_refine: bool = True
    reuse_sensor_updates: bool = False

    @field_validator("layer_order", mode="before")
    @classmethod
    def _split_order(cls, value: Any) -> Any:
        value = _listed(value)
        if sorted(value) != sorted(LAYER_PARTS):
            raise ValueError(f"layer_order must be a permutation of {', '.join(LAYER_PARTS)}")
        return value


class ScanConfig(_Section):
    vcl_pattern: Literal["hybrid", "horizontal", "vertical", "ego_spiral", "trajectory"] = "hybrid"
    trm_strategy: Literal["horizontal", "vertical", "ego_spiral", "trajectory"] = "trajectory"
    ltf_mode: Literal["spatial_first", "temporal_first"] = "spatial_first"
    bev_grid: int = Field(50, gt=0)
    spiral_orientation: Literal["center_first", "border_first"] = "center_first"
    importance_descending: bool = True
    dense_waypoints: int = Field(30, ge=2)
    trajectory_prior: Literal["origin", "uniform", "random"] = "uniform"


class MemoryConfig(_Section):
    queue_length: int = Field(4, ge=0)
    top_k: int = Field(16, ge=0)
    map_top_k: int = Field(2, ge=0)


class LossConfig(_Section):
    det_weight: float = Field(1.0, ge=0)
    map_weight: float = Field(1.0, ge=0)
    depth_weight: float = Field(1.0, ge=0)
    motion_weight: float = Field(1.0, ge=0)
    plan_weight: float = Field(1.0, ge=0)
    constraint_weight: float = Field(1.0, ge=0)
    focal_alpha: float = Field(0.25, ge=0, le=1)
    focal_gamma: float = Field(2.0, ge=0)
    collision_margin: float = Field(1.0, ge=0)
    overstep_margin: float = 0.0
    direction_margin_deg: float = Field(30.0, ge=0, le=90)
    planning_only: bool = False


class TrainConfig(_Section):
    epochs: int = Field(5, ge=0)
    lr: float = Field(2e-3, gt=0)
    weight_decay: float = Field(0.01, ge=0)
    grad_clip: float = Field(5.0, gt=0)
    clip_frames: int = Field(3, gt=0)
    seed: int = 0
    augment: bool = True
    max_rotation_deg: float = Field(10.0, ge=0)
    max_translation: float = Field(0.5, ge=0)
    flip_probability: float = Field(0.5, ge=0, le=1)


class DataConfig(_Section):
    directory: str = "data"
    episodes: int = Field(20, gt=0)
    templates: list[str] = Field(
        default_factory=lambda: ["straight-follow", "lead-brake", "cut-in", "side-lane-hazard", "turn-left", "turn-right"]
    )
    held_out: int = Field(4, ge=0)
    seed: int = 0
    frames: int = Field(6, gt=0)
    cameras: int = Field(2, gt=0)
    image_height: int = Field(16, gt=0)
    image_width: int = Field(32, gt=0)
    fov_deg: float = Field(100.0, gt=0, lt=180)
    noise_mode: Literal["normal", "gt", "noisy", "miscalibrated"] = "normal"
    depth_noise: float = Field(1.0, ge=0)
    rotation_noise: float = Field(0.02, ge=0)
    translation_noise: float = Field(0.1, ge=0)

    @field_validator("templates", mode="before")
    @classmethod
    def _split_templates(cls, value: Any) -> Any:
        return _listed(value)


class EvalConfig(_Section):
    match_threshold: float = Field(1.0, gt=0)
    miss_threshold: float = Field(2.0, gt=0)
    recall_threshold: float = Field(2.0, gt=0)
    cipo_radius: float = Field(5.0, gt=0)
    score_threshold: float = Field(0.3, ge=0, le=1)


class BenchConfig(_Section):
    lengths: list[int] = Field(default_factory=lambda: [256, 512, 1024, 2048, 4096, 8192, 16384])
    width: int = Field(64, gt=0)
    repeats: int = Field(5, gt=0)
    state: int = Field(8, gt=0)

    @field_validator("lengths", mode="before")
    @classmethod
    def _split_lengths(cls, value: Any) -> Any:
        return _listed(value)


class ExperimentConfig(_Section):
    model: ModelConfig = Field(default_factory=ModelConfig)
    scan: ScanConfig = Field(default_factory=ScanConfig)
    memory: MemoryConfig = Field(default_factory=MemoryConfig)
    loss: LossConfig = Field(default_factory=LossConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    data: DataConfig = Field(default_factory=DataConfig)
    eval: EvalConfig = Field(default_factory=EvalConfig)
    bench: BenchConfig = Field(default_factory=BenchConfig)

    def to_ini(self) -> str:
        """Render back into the file format; ``load_config`` of the result gives an equal config."""
        lines: list[str] = []
        for section, model in self:
            lines.append(f"[{section}]")
            for key, value in model.model_dump().items():
                if value is None:
                    continue
                if isinstance(value, list):
                    value = ", ".join(str(v) for v in value)
                lines.append(f"{key} = {value}")
            lines.append("")
        return "\n".join(lines)


SECTIONS: dict[str, type[_Section]] = {
    name: info.annotation  # type: ignore[misc]
    for name, info in ExperimentConfig.model_fields.items()
}


def _line_of(text: str, section: str, key: str | None = None) -> int | None:
    """1-based line of ``[section]`` or of ``key`` inside it."""
    current = None
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        header = re.fullmatch(r"\[([^\]]+)\]", line)
        if header:
            current = header.group(1).strip()
            if key is None and current == section:
                return number
            continue
        if key is not None and current == section and re.match(rf"{re.escape(key)}\s*[=:]", line):
            return number
    return None


def _parse_value(raw: str) -> Any:
    """Values are JSON where they parse as JSON, plain strings otherwise."""
    lowered = raw.strip().lower()
    if lowered in ("true", "yes", "on"):
        return True
    if lowered in ("false", "no", "off"):
        return False
    if lowered in ("none", "null", ""):
        return None
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw.strip()


def parse_overrides(items: Iterable[str]) -> dict[str, dict[str, str]]:
    """Parse repeated ``section.key=value`` strings."""
    out: dict[str, dict[str, str]] = {}
    for item in items:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not section.key=value")
        name, value = item.split("=", 1)
        section, _, key = name.strip().partition(".")
        if not key:
            raise ConfigError(f"override {item!r} must name a section and a key")
        out.setdefault(section, {})[key.strip()] = value.strip()
    return out


def build_config(raw: dict[str, dict[str, str]], text: str = "", source: str = "<config>") -> ExperimentConfig:
    sections: dict[str, Any] = {}
    for section, values in raw.items():
        if section not in SECTIONS:
            raise ConfigError(
                f"{source}: unknown section [{section}]; valid sections: {', '.join(SECTIONS)}",
                line=_line_of(text, section),
            )
        model = SECTIONS[section]
        valid = list(model.model_fields)
        for key in values:
            if key not in model.model_fields:
                raise ConfigError(
                    f"{source}: unknown key '{key}' in [{section}]; valid keys: {', '.join(valid)}",
                    line=_line_of(text, section, key),
                )
        try:
            sections[section] = model.model_validate({k: _parse_value(v) for k, v in values.items()})
        except ValidationError as exc:
            first = exc.errors()[0]
            key = str(first["loc"][0]) if first["loc"] else None
            raise ConfigError(
                f"{source}: invalid value in [{section}] {key}: {first['msg']}",
                line=_line_of(text, section, key) if key else _line_of(text, section),
            ) from exc
    return ExperimentConfig(**sections)


def load_config(path: str | Path | None = None, overrides: Iterable[str] = ()) -> ExperimentConfig:
    """Read a config file (defaults when ``path`` is None) and apply overrides."""
    text = ""
    raw: dict[str, dict[str, str]] = {}
    source = "<defaults>"
    if path is not None:
        source = str(path)
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str  # type: ignore[assignment,method-assign]
        try:
            parser.read_string(text, source=source)
        except configparser.Error as exc:
            raise ConfigError(f"{source}: {exc}", line=getattr(exc, "lineno", None)) from exc
        raw = {s: dict(parser.items(s)) for s in parser.sections()}
    for section, values in parse_overrides(overrides).items():
        raw.setdefault(section, {}).update(values)
    return build_config(raw, text, source)
