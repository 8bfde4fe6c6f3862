"""
Streaming training, checkpointing and the experiment / ablation runners.

One optimizer step per episode: a clip of consecutive frames is replayed with
a memory queue that is refreshed from detached outputs, the composite loss of
every frame is averaged, and a single backward pass runs over the clip.
"""

from __future__ import annotations

import json
import logging
import math
from collections.abc import Sequence
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .decoder.model import SsmDriveModel, NoiseSettings
from .errors import CheckpointError, ConfigError
from .evaluation.runner import evaluate, planning_l2
from .heads.augment import augment
from .heads.constraints import ConstraintMargins
from .heads.losses import LOSS_TERMS, LossWeights, composite_loss
from .tensor import AdamW, Tensor, backward, clip_grad_norm, cosine_lr, load_checkpoint, recording, save_checkpoint
from .tokens.types import CameraRig, default_rig
from .utils.results import ResultsDirectory, open_results
from .utils.typing import EpochRecord, EvaluationSummary
from .world.dataset import INDEX_FILE, EpisodeDataset, FrameSample, StoredEpisode, generate_dataset

CHECKPOINT_FILE = "checkpoint.json"
ABLATION_SWITCHES = ("use_vcl", "use_ltf", "use_trm", "residual_combine", "iterative_refine")


def loss_weights(config: ExperimentConfig) -> LossWeights:
    loss = config.loss
    weights = LossWeights(
        det=loss.det_weight,
        map=loss.map_weight,
        depth=loss.depth_weight,
        motion=loss.motion_weight,
        plan=loss.plan_weight,
        constraint=loss.constraint_weight,
        focal_alpha=loss.focal_alpha,
        focal_gamma=loss.focal_gamma,
        margins=ConstraintMargins(loss.collision_margin, loss.overstep_margin, loss.direction_margin_deg),
    )
    return weights.planning_only() if loss.planning_only else weights


def build_model(config: ExperimentConfig) -> SsmDriveModel:
    data = config.data
    noise = NoiseSettings(
        mode=data.noise_mode,
        depth_std=data.depth_noise,
        rotation_std=data.rotation_noise,
        translation_std=data.translation_noise,
        seed=config.train.seed,
    )
    return SsmDriveModel(config.model, config.scan, config.memory, seed=config.train.seed, noise=noise)


def camera_rig(config: ExperimentConfig) -> CameraRig:
    data = config.data
    return default_rig(data.cameras, data.image_height, data.image_width, data.fov_deg, config.model.patch_size)


def ensure_dataset(config: ExperimentConfig, directory: str | Path | None = None) -> EpisodeDataset:
    """Open the configured dataset, generating it first when the directory holds none."""
    data = config.data
    root = Path(directory or data.directory)
    if (root / INDEX_FILE).exists():
        return EpisodeDataset(root)
    logging.info(f"No dataset under {root}, generating {data.episodes} episodes")
    return generate_dataset(
        root, data.templates, data.episodes, data.seed, data.frames, data.held_out, rig=camera_rig(config)
    )


def check_rig(model: SsmDriveModel, episodes: Sequence[StoredEpisode]) -> None:
    patch = model.model_config.patch_size
    for stored in episodes:
        if stored.episode.rig.patch_size != patch:
            raise ConfigError(
                f"episode {stored.episode.episode_id} was rendered for patch size "
                f"{stored.episode.rig.patch_size}, the model uses {patch}"
            )


class Trainer:
    def __init__(self, model: SsmDriveModel, config: ExperimentConfig) -> None:
        self.model = model
        self.config = config
        self.weights = loss_weights(config)
        self.params = model.parameters()
        self.optimizer = AdamW(self.params, lr=config.train.lr, weight_decay=config.train.weight_decay)
        self.epoch = 0
        self.history: list[EpochRecord] = []

    def clip(self, samples: Sequence[FrameSample], rng: np.random.Generator) -> Sequence[FrameSample]:
        length = min(self.config.train.clip_frames, len(samples))
        start = int(rng.integers(0, len(samples) - length + 1))
        return samples[start : start + length]

    def episode_loss(self, samples: Sequence[FrameSample]) -> tuple[Tensor, dict[str, float]]:
        """Mean composite loss over a streamed clip; must run under ``recording``."""
        memory = self.model.new_memory()
        total = Tensor(0.0)
        terms = dict.fromkeys([*LOSS_TERMS, "total"], 0.0)
        for sample in samples:
            output = self.model.forward(sample, memory)
            report = composite_loss(output.layers, output.depth, sample.targets, self.weights)
            total = total + report.total
            for name in terms:
                terms[name] += report.terms[name] / len(samples)
            self.model.propagate(memory, output, sample)
        return total / float(len(samples)), terms

    def train_step(self, samples: Sequence[FrameSample], lr: float) -> tuple[dict[str, float], float]:
        self.optimizer.zero_grad()
        with recording():
            loss, terms = self.episode_loss(samples)
        if not math.isfinite(loss.item()):
            raise FloatingPointError(f"non-finite training loss {loss.item()}")
        backward(loss)
        grad_norm = clip_grad_norm(self.params, self.config.train.grad_clip)
        self.optimizer.lr = lr
        self.optimizer.step()
        return terms, grad_norm

    def train_epoch(self, episodes: Sequence[StoredEpisode], total_epochs: int) -> EpochRecord:
        train = self.config.train
        # per-epoch generator: a resumed run replays the same clips and augmentations
        rng = np.random.default_rng([train.seed, self.epoch])
        order = rng.permutation(len(episodes))
        total_steps = max(total_epochs * len(episodes), 1)
        sums = dict.fromkeys([*LOSS_TERMS, "total"], 0.0)
        norms, lr = [], train.lr
        for i in order:
            stored = episodes[i]
            episode = stored.episode
            if train.augment:
                episode = augment(
                    episode,
                    rng,
                    max_rotation=math.radians(train.max_rotation_deg),
                    max_translation=train.max_translation,
                    flip_probability=train.flip_probability,
                )
            samples = self.clip(stored.samples(episode), rng)
            lr = cosine_lr(train.lr, self.optimizer.step_count, total_steps)
            terms, grad_norm = self.train_step(samples, lr)
            norms.append(grad_norm)
            for name in sums:
                sums[name] += terms[name] / len(episodes)
        self.epoch += 1
        record = EpochRecord(
            epoch=self.epoch,
            L_det=sums["det"],
            L_map=sums["map"],
            L_depth=sums["depth"],
            L_motion=sums["motion"],
            L_plan=sums["plan"],
            total=sums["total"],
            lr=lr,
            grad_norm=float(np.mean(norms)) if norms else 0.0,
        )
        self.history.append(record)
        return record

    def fit(
        self,
        episodes: Sequence[StoredEpisode],
        held_out: Sequence[StoredEpisode] = (),
        results: ResultsDirectory | None = None,
    ) -> list[EpochRecord]:
        epochs = self.config.train.epochs
        check_rig(self.model, [*episodes, *held_out])
        if self.epoch >= epochs:
            logging.info(f"Checkpoint already at epoch {self.epoch} of {epochs}, nothing to train")
        while self.epoch < epochs:
            record = self.train_epoch(episodes, epochs)
            if held_out:
                record.held_out_l2 = planning_l2(self.model, held_out)
            logging.info(
                f"Epoch {record.epoch}/{epochs}: loss {record.total:.4f} "
                f"(plan {record.L_plan:.4f}), held-out L2 {record.held_out_l2}"
            )
            if results is not None:
                results.log_event(record)
                self.save(results.register(CHECKPOINT_FILE))
        return self.history

    # Checkpoints

    def save(self, path: str | Path) -> None:
        meta: dict[str, Any] = {
            "epoch": self.epoch,
            "config": self.config.model_dump(),
            "history": [r.model_dump() for r in self.history],
            "version": __version__,
        }
        save_checkpoint(path, self.model.state_dict(), self.optimizer.state(), meta)

    def resume(self, path: str | Path) -> None:
        params, optimizer, meta = load_checkpoint(path)
        self.model.load_state_dict(params)
        if optimizer is not None:
            if len(optimizer["m"]) != len(self.params):
                raise CheckpointError(f"optimizer state in {path} does not match the model")
            self.optimizer.load_state(optimizer)
        self.epoch = int(meta.get("epoch", 0))
        self.history = [EpochRecord.model_validate(r) for r in meta.get("history", [])]
        logging.info(f"Resumed from {path} at epoch {self.epoch}")


def load_model(config: ExperimentConfig, checkpoint: str | Path) -> SsmDriveModel:
    model = build_model(config)
    params, _, _ = load_checkpoint(checkpoint)
    model.load_state_dict(params)
    return model


def history_rows(history: Sequence[EpochRecord]) -> list[dict[str, Any]]:
    return [r.model_dump(exclude={"log_type"}) for r in history]


def write_config(results: ResultsDirectory, config: ExperimentConfig) -> None:
    results.write_text("config.ini", config.to_ini())
    results.write_text("config.json", json.dumps(config.model_dump(), indent=2))


def run_experiment(
    config: ExperimentConfig,
    out: str | Path,
    config_path: str | None = None,
    overrides: Sequence[str] = (),
    resume: str | Path | None = None,
) -> Path:
    """Train and evaluate per ``config``; returns the results directory."""
    results = open_results(out, "train", config_path, overrides, __version__)
    write_config(results, config)
    dataset = ensure_dataset(config)
    train, held_out = dataset.train(), dataset.held_out()
    model = build_model(config)
    trainer = Trainer(model, config)
    if resume is not None:
        trainer.resume(resume)
    history = trainer.fit(train, held_out, results)
    trainer.save(results.register(CHECKPOINT_FILE))
    results.write_csv("curves.csv", history_rows(history))
    summary = evaluate_and_record(model, held_out or train, config, results)
    logging.info(f"Held-out planning L2 {summary.planning.l2['avg']:.3f} m")
    results.close()
    return results.root


def evaluate_and_record(
    model: SsmDriveModel, episodes: Sequence[StoredEpisode], config: ExperimentConfig, results: ResultsDirectory
) -> EvaluationSummary:
    summary = evaluate(model, episodes, config.eval)
    results.write_json("metrics.json", summary)
    results.log_event(summary)
    return summary


def run_ablation(
    config: ExperimentConfig, out: str | Path, switches: Sequence[str] = ABLATION_SWITCHES
) -> dict[str, float]:
    """Held-out planning L2 of the full model and of one model per disabled switch."""
    unknown = [s for s in switches if s not in ABLATION_SWITCHES]
    if unknown:
        raise ConfigError(f"unknown ablation switches {unknown}; valid: {list(ABLATION_SWITCHES)}")
    results = open_results(out, "ablate", None, list(switches), __version__)
    write_config(results, config)
    dataset = ensure_dataset(config)
    train, held_out = dataset.train(), dataset.held_out() or dataset.train()
    variants = {"full": config, **{f"no_{s[4:] if s.startswith('use_') else s}": _without(config, s) for s in switches}}
    scores: dict[str, float] = {}
    for name, variant in variants.items():
        logging.info(f"Ablation run {name}")
        model = build_model(variant)
        Trainer(model, variant).fit(train)
        scores[name] = planning_l2(model, held_out)
        logging.info(f"Ablation {name}: held-out L2 {scores[name]:.3f} m")
    results.write_csv("ablation.csv", [{"variant": k, "held_out_l2": v} for k, v in scores.items()])
    results.close()
    return scores


def _without(config: ExperimentConfig, switch: str) -> ExperimentConfig:
    return config.model_copy(update={"model": config.model.model_copy(update={switch: False})})
