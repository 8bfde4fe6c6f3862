"""Open-loop metrics, the streaming evaluator and the sequence-length benchmark."""

from .bench import loglog_slope, measure, scaling_benchmark, scaling_rows
from .collision import boxes_overlap, collision_check, ego_boxes, plan_collisions, waypoint_yaws
from .metrics import (
    HORIZON_INDEX,
    agent_displacements,
    cipo_mask,
    detection_metrics,
    match_centres,
    merge_motion,
    motion_metrics,
    planning_metrics,
    recall_hits,
)
from .runner import EpisodeEvaluation, evaluate, evaluate_async, evaluate_episode, planning_l2, summarize, worker_count

__all__ = [
    "HORIZON_INDEX",
    "EpisodeEvaluation",
    "agent_displacements",
    "boxes_overlap",
    "cipo_mask",
    "collision_check",
    "detection_metrics",
    "ego_boxes",
    "evaluate",
    "evaluate_async",
    "evaluate_episode",
    "loglog_slope",
    "match_centres",
    "measure",
    "merge_motion",
    "motion_metrics",
    "plan_collisions",
    "planning_l2",
    "planning_metrics",
    "recall_hits",
    "scaling_benchmark",
    "scaling_rows",
    "summarize",
    "worker_count",
]
