"""
Open-loop evaluation metrics.

Planning: L2 at 1, 2 and 3 s is the distance at the waypoint of that horizon,
and the collision rate at a horizon is the share of samples whose ego box
overlaps an obstacle at any waypoint up to it. Motion metrics are taken over
true positives only, matched on centre distance.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from ..errors import ContractError
from ..utils.typing import HORIZONS, DetectionMetrics, MotionMetrics, PlanningMetrics
from .collision import plan_collisions

# waypoint index of each horizon at 2 Hz
HORIZON_INDEX = (1, 3, 5)
MATCH_THRESHOLD = 1.0
MISS_THRESHOLD = 2.0
RECALL_THRESHOLD = 2.0
CIPO_RADIUS = 5.0


def _with_average(values: Sequence[float]) -> dict[str, float]:
    out = {h: float(v) for h, v in zip(HORIZONS, values, strict=True)}
    out["avg"] = float(np.mean(values))
    return out


def planning_metrics(
    predicted: np.ndarray,
    ground_truth: np.ndarray,
    obstacles: Sequence[np.ndarray],
    ego_size: tuple[float, float, float],
    headings: Sequence[float] | None = None,
) -> PlanningMetrics:
    """Planning L2 (m) and collision rate (%) over a set of samples.

    Args:
        predicted: (S, T_e, 2) planned waypoints.
        ground_truth: (S, T_e, 2) logged ego future.
        obstacles: Per sample, (T_e, k, 5) agent boxes at each future step.
        ego_size: Ego (w, l, h).
        headings: Per-sample initial ego heading, 0 when omitted.
    """
    predicted = np.asarray(predicted, dtype=np.float64)
    ground_truth = np.asarray(ground_truth, dtype=np.float64)
    if predicted.shape != ground_truth.shape or predicted.ndim != 3:
        raise ContractError(f"prediction {list(predicted.shape)} and ground truth {list(ground_truth.shape)} do not align")
    if predicted.shape[1] <= max(HORIZON_INDEX):
        raise ContractError(f"plans need {max(HORIZON_INDEX) + 1} waypoints, got {predicted.shape[1]}")
    if len(obstacles) != len(predicted):
        raise ContractError("one obstacle set per sample is required")
    samples = len(predicted)
    if samples == 0:
        raise ContractError("planning metrics over zero samples")
    dist = np.linalg.norm(predicted - ground_truth, axis=-1)
    l2 = [float(dist[:, i].mean()) for i in HORIZON_INDEX]
    hits = np.stack(
        [
            plan_collisions(predicted[s], obstacles[s], ego_size, 0.0 if headings is None else headings[s])
            for s in range(samples)
        ]
    )
    collided_by = np.logical_or.accumulate(hits, axis=1)
    collision = [100.0 * float(collided_by[:, i].mean()) for i in HORIZON_INDEX]
    return PlanningMetrics(l2=_with_average(l2), collision=_with_average(collision), samples=samples)


def match_centres(pred: np.ndarray, gt: np.ndarray, threshold: float = MATCH_THRESHOLD) -> list[tuple[int, int]]:
    """Hungarian matching on centre distance; pairs further apart than ``threshold`` are dropped."""
    pred = np.asarray(pred, dtype=np.float64).reshape(-1, 2)
    gt = np.asarray(gt, dtype=np.float64).reshape(-1, 2)
    if not len(pred) or not len(gt):
        return []
    dist = np.linalg.norm(pred[:, None] - gt[None], axis=-1)
    rows, cols = linear_sum_assignment(dist)
    return [(int(r), int(c)) for r, c in zip(rows, cols, strict=True) if dist[r, c] <= threshold]


def agent_displacements(modes: np.ndarray, gt: np.ndarray) -> tuple[float, float]:
    """(minADE, minFDE) of one agent's (K, T, 2) modes against its (T, 2) future."""
    err = np.linalg.norm(np.asarray(modes) - np.asarray(gt)[None], axis=-1)
    return float(err.mean(axis=1).min()), float(err[:, -1].min())


def motion_metrics(
    modes: np.ndarray,
    gt_futures: np.ndarray,
    matches: Sequence[tuple[int, int]],
    miss_threshold: float = MISS_THRESHOLD,
) -> MotionMetrics:
    """minADE / minFDE / miss rate over matched agents.

    Args:
        modes: (N_a, K, T_m, 2) predicted trajectories in the ego frame.
        gt_futures: (n, T_m, 2) ground-truth futures.
        matches: (prediction, ground truth) pairs of true positives.
        miss_threshold: minFDE above which an agent counts as a miss.
    """
    if not matches:
        return MotionMetrics()
    ade, fde = zip(*(agent_displacements(modes[p], gt_futures[g]) for p, g in matches), strict=True)
    return MotionMetrics(
        min_ade=float(np.mean(ade)),
        min_fde=float(np.mean(fde)),
        miss_rate=float(np.mean(np.asarray(fde) > miss_threshold)),
        matched=len(matches),
    )


def merge_motion(parts: Sequence[MotionMetrics]) -> MotionMetrics:
    """Match-weighted mean of per-frame motion metrics."""
    used = [m for m in parts if m.matched]
    if not used:
        return MotionMetrics()
    weights = np.array([m.matched for m in used], dtype=np.float64)

    def avg(values: list[float | None]) -> float:
        return float(np.average(np.asarray(values, dtype=np.float64), weights=weights))

    return MotionMetrics(
        min_ade=avg([m.min_ade for m in used]),
        min_fde=avg([m.min_fde for m in used]),
        miss_rate=avg([m.miss_rate for m in used]),
        matched=int(weights.sum()),
    )


def recall_hits(
    pred: np.ndarray, scores: np.ndarray, gt: np.ndarray, threshold: float = RECALL_THRESHOLD, score_threshold: float = 0.0
) -> np.ndarray:
    """(n,) flags: ground-truth agents matched by a confident prediction within ``threshold``."""
    gt = np.asarray(gt, dtype=np.float64).reshape(-1, 2)
    keep = np.asarray(scores) >= score_threshold
    hit = np.zeros(len(gt), dtype=bool)
    for _, g in match_centres(np.asarray(pred).reshape(-1, 2)[keep], gt, threshold):
        hit[g] = True
    return hit


def cipo_mask(gt_centres: np.ndarray, ego_future: np.ndarray, radius: float = CIPO_RADIUS) -> np.ndarray:
    """Agents within ``radius`` of any ground-truth ego waypoint (closest in-path objects)."""
    gt_centres = np.asarray(gt_centres, dtype=np.float64).reshape(-1, 2)
    path = np.concatenate([np.zeros((1, 2)), np.asarray(ego_future, dtype=np.float64).reshape(-1, 2)])
    dist = np.linalg.norm(gt_centres[:, None] - path[None], axis=-1)
    return dist.min(axis=1) <= radius if len(gt_centres) else np.zeros(0, dtype=bool)


def detection_metrics(hits: Sequence[np.ndarray], cipo: Sequence[np.ndarray]) -> DetectionMetrics:
    all_hits = np.concatenate([np.asarray(h, dtype=bool) for h in hits]) if hits else np.zeros(0, dtype=bool)
    all_cipo = np.concatenate([np.asarray(c, dtype=bool) for c in cipo]) if cipo else np.zeros(0, dtype=bool)
    return DetectionMetrics(
        recall=float(all_hits.mean()) if len(all_hits) else None,
        cipo_recall=float(all_hits[all_cipo].mean()) if all_cipo.any() else None,
        ground_truth=len(all_hits),
    )
