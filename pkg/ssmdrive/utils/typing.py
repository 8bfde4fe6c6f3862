"""
Structured records.

Everything the package logs or persists as JSON is one of these models; the
``log_type`` field tells the records apart in ``events.jsonl``.
"""

from typing import Literal

from pydantic import BaseModel, Field

HORIZONS = ("1s", "2s", "3s")


class PlanningMetrics(BaseModel):
    """L2 displacement (m) and collision rate (%) at 1/2/3 s, plus their averages."""

    l2: dict[str, float]
    collision: dict[str, float]
    samples: int
    log_type: Literal["planning_metrics"] = "planning_metrics"


class MotionMetrics(BaseModel):
    """Only defined over matched true positives; None when there are none."""

    min_ade: float | None = None
    min_fde: float | None = None
    miss_rate: float | None = None
    matched: int = 0
    log_type: Literal["motion_metrics"] = "motion_metrics"


class DetectionMetrics(BaseModel):
    recall: float | None = None
    cipo_recall: float | None = None
    ground_truth: int = 0
    log_type: Literal["detection_metrics"] = "detection_metrics"


class EvaluationSummary(BaseModel):
    planning: PlanningMetrics
    motion: MotionMetrics
    detection: DetectionMetrics
    episodes: int
    frames: int
    log_type: Literal["evaluation"] = "evaluation"


class EpochRecord(BaseModel):
    epoch: int
    L_det: float
    L_map: float
    L_depth: float
    L_motion: float
    L_plan: float
    total: float
    lr: float = 0.0
    grad_norm: float = 0.0
    held_out_l2: float | None = None
    log_type: Literal["epoch"] = "epoch"


class ScalingPoint(BaseModel):
    length: int
    time_ms: float | None = None
    peak_bytes: int | None = None
    failed: bool = False


class ScalingCurve(BaseModel):
    layer: str
    points: list[ScalingPoint] = Field(default_factory=list)
    time_slope: float | None = None
    memory_slope: float | None = None


class ScalingReport(BaseModel):
    width: int
    repeats: int
    curves: dict[str, ScalingCurve]
    log_type: Literal["scaling"] = "scaling"


class RunMetadata(BaseModel):
    command: str
    config_path: str | None = None
    overrides: list[str] = Field(default_factory=list)
    started: str
    finished: str | None = None
    package_version: str
    artifacts: list[str] = Field(default_factory=list)
    log_type: Literal["run_metadata"] = "run_metadata"
