"""
Open-loop evaluation of a model over stored episodes.

Every episode is streamed frame by frame with a fresh memory queue. Episodes
are independent, so they are spread over worker threads; results are merged
in input order, which keeps the summary identical for any worker count.
"""

from __future__ import annotations

import asyncio
import logging
import os
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from ..config import EvalConfig
from ..decoder.model import SsmDriveModel, NoiseMode
from ..errors import ContractError
from ..utils.typing import EvaluationSummary, MotionMetrics
from ..world.dataset import FrameSample, StoredEpisode
from ..world.scenarios import EGO_SIZE
from .metrics import (
    cipo_mask,
    detection_metrics,
    match_centres,
    merge_motion,
    motion_metrics,
    planning_metrics,
    recall_hits,
)

THREADS_ENV = "SSMDRIVE_THREADS"


def worker_count() -> int:
    """Worker threads allowed by ``SSMDRIVE_THREADS`` (CPU count when unset)."""
    raw = os.environ.get(THREADS_ENV, "")
    try:
        value = int(raw) if raw else os.cpu_count() or 1
    except ValueError:
        logging.warning(f"Ignoring non-integer {THREADS_ENV}={raw!r}")
        value = os.cpu_count() or 1
    return max(value, 1)


@dataclass
class EpisodeEvaluation:
    episode_id: str
    predicted: list[np.ndarray] = field(default_factory=list)
    ground_truth: list[np.ndarray] = field(default_factory=list)
    obstacles: list[np.ndarray] = field(default_factory=list)
    headings: list[float] = field(default_factory=list)
    motion: list[MotionMetrics] = field(default_factory=list)
    hits: list[np.ndarray] = field(default_factory=list)
    cipo: list[np.ndarray] = field(default_factory=list)

    @property
    def frames(self) -> int:
        return len(self.predicted)


def evaluate_episode(
    model: SsmDriveModel, samples: Sequence[FrameSample], settings: EvalConfig | None = None
) -> EpisodeEvaluation:
    settings = settings or EvalConfig()
    if not samples:
        raise ContractError("cannot evaluate an episode without frames")
    result = EpisodeEvaluation(samples[0].episode_id)
    memory = model.new_memory()
    for sample in samples:
        output = model.step(sample, memory)
        final = output.final
        targets = sample.targets
        result.predicted.append(output.waypoints.copy())
        result.ground_truth.append(targets.ego_future)
        result.obstacles.append(targets.obstacles)
        result.headings.append(targets.ego_heading)

        confident = final.detection.scores() >= settings.score_threshold
        rows = np.flatnonzero(confident)
        gt_centres = targets.boxes[:, :2]
        pairs = match_centres(final.detection.centres[rows], gt_centres, settings.match_threshold)
        modes = final.motion.trajectories(final.detection.centres)[rows]
        result.motion.append(motion_metrics(modes, targets.futures, pairs, settings.miss_threshold))
        result.hits.append(
            recall_hits(
                final.detection.centres,
                final.detection.scores(),
                gt_centres,
                settings.recall_threshold,
                settings.score_threshold,
            )
        )
        result.cipo.append(cipo_mask(gt_centres, targets.ego_future, settings.cipo_radius))
    return result


def summarize(results: Sequence[EpisodeEvaluation]) -> EvaluationSummary:
    if not results:
        raise ContractError("no episodes to summarize")
    predicted = [p for r in results for p in r.predicted]
    ground_truth = [g for r in results for g in r.ground_truth]
    return EvaluationSummary(
        planning=planning_metrics(
            np.stack(predicted),
            np.stack(ground_truth),
            [o for r in results for o in r.obstacles],
            EGO_SIZE,
            [h for r in results for h in r.headings],
        ),
        motion=merge_motion([m for r in results for m in r.motion]),
        detection=detection_metrics([h for r in results for h in r.hits], [c for r in results for c in r.cipo]),
        episodes=len(results),
        frames=len(predicted),
    )


async def evaluate_async(
    model: SsmDriveModel,
    episodes: Sequence[StoredEpisode],
    settings: EvalConfig | None = None,
    workers: int | None = None,
) -> EvaluationSummary:
    """Evaluate ``episodes`` on up to ``workers`` threads."""
    workers = workers or worker_count()
    if model.noise.mode in (NoiseMode.NOISY, NoiseMode.MISCALIBRATED):
        # the noise generator is shared, so its draws must follow episode order
        workers = 1
    gate = asyncio.Semaphore(workers)

    async def run(stored: StoredEpisode) -> EpisodeEvaluation:
        async with gate:
            return await asyncio.to_thread(lambda: evaluate_episode(model, stored.samples(), settings))

    logging.info(f"Evaluating {len(episodes)} episodes on {workers} workers")
    results = await asyncio.gather(*(run(stored) for stored in episodes))
    summary = summarize(results)
    logging.info(
        f"Evaluation: L2 avg {summary.planning.l2['avg']:.3f} m, "
        f"collision avg {summary.planning.collision['avg']:.2f}%, "
        f"recall {summary.detection.recall}"
    )
    return summary


def evaluate(
    model: SsmDriveModel,
    episodes: Sequence[StoredEpisode],
    settings: EvalConfig | None = None,
    workers: int | None = None,
) -> EvaluationSummary:
    return asyncio.run(evaluate_async(model, episodes, settings, workers))


def planning_l2(model: SsmDriveModel, episodes: Sequence[StoredEpisode], workers: int | None = None) -> float:
    """Average held-out planning L2, the figure the ablation runner compares."""
    return evaluate(model, episodes, workers=workers).planning.l2["avg"]
