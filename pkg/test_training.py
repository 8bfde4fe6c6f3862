"""
Tests for training, checkpoints, the experiment runner and parallel evaluation.
"""

import json

import numpy as np
import pytest

from conftest import TINY
from ssmdrive.config import build_config
from ssmdrive.errors import CheckpointError, ConfigError
from ssmdrive.evaluation import evaluate_async, planning_l2
from ssmdrive.training import (
    CHECKPOINT_FILE,
    Trainer,
    build_model,
    ensure_dataset,
    load_model,
    run_ablation,
    run_experiment,
)


def _config(tmp_path, **sections):
    raw = {section: dict(values) for section, values in TINY.items()}
    raw["data"]["directory"] = str(tmp_path / "data")
    raw["data"]["templates"] = "lead-brake, cut-in"
    for section, values in sections.items():
        raw.setdefault(section, {}).update(values)
    return build_config(raw)


def test_train_step_changes_the_parameters(tmp_path):
    config = _config(tmp_path)
    dataset = ensure_dataset(config)
    model = build_model(config)
    trainer = Trainer(model, config)
    before = {name: p.data.copy() for name, p in model.named_parameters()}
    record = trainer.train_epoch(dataset.train(), total_epochs=1)
    assert record.epoch == 1
    assert np.isfinite(record.total) and record.total > 0.0
    assert record.grad_norm > 0.0
    moved = [name for name, p in model.named_parameters() if not np.array_equal(p.data, before[name])]
    assert any(name.startswith("layers.") for name in moved)


def test_run_experiment_writes_its_artifacts(tmp_path):
    config = _config(tmp_path)
    root = run_experiment(config, tmp_path / "run")
    for name in ("config.ini", "config.json", CHECKPOINT_FILE, "curves.csv", "metrics.json", "events.jsonl"):
        assert (root / name).exists(), name
    metadata = json.loads((root / "run_metadata.json").read_text())
    assert metadata["command"] == "train"
    assert "metrics.json" in metadata["artifacts"]
    metrics = json.loads((root / "metrics.json").read_text())
    assert set(metrics["planning"]["l2"]) == {"1s", "2s", "3s", "avg"}
    events = [json.loads(line) for line in (root / "events.jsonl").read_text().splitlines()]
    assert [e["log_type"] for e in events] == ["epoch", "evaluation"]


def test_resume_reproduces_the_run(tmp_path):
    config = _config(tmp_path, train={"epochs": "2"})
    train = ensure_dataset(config).train()
    straight = Trainer(build_model(config), config)
    straight.fit(train)

    interrupted = Trainer(build_model(config), config)
    interrupted.train_epoch(train, total_epochs=2)
    interrupted.save(tmp_path / CHECKPOINT_FILE)
    resumed = Trainer(build_model(config), config)
    resumed.resume(tmp_path / CHECKPOINT_FILE)
    assert resumed.epoch == 1
    resumed.fit(train)

    assert [r.total for r in resumed.history] == pytest.approx([r.total for r in straight.history])
    for (name, a), (_, b) in zip(straight.model.named_parameters(), resumed.model.named_parameters(), strict=True):
        np.testing.assert_allclose(a.data, b.data, rtol=1e-9, atol=1e-12, err_msg=name)


def test_checkpoint_must_fit_the_model(tmp_path):
    config = _config(tmp_path)
    trainer = Trainer(build_model(config), config)
    path = tmp_path / CHECKPOINT_FILE
    trainer.save(path)
    reloaded = load_model(config, path)
    for (name, a), (_, b) in zip(trainer.model.named_parameters(), reloaded.named_parameters(), strict=True):
        np.testing.assert_array_equal(a.data, b.data, err_msg=name)
    wider = _config(tmp_path, model={"width": "24"})
    with pytest.raises(CheckpointError):
        load_model(wider, path)


def test_rig_mismatch_is_reported(tmp_path):
    config = _config(tmp_path)
    dataset = ensure_dataset(config)
    other = _config(tmp_path, model={"patch_size": "8"})
    with pytest.raises(ConfigError, match="patch size"):
        Trainer(build_model(other), other).fit(dataset.train())


@pytest.mark.asyncio
async def test_evaluation_ignores_the_worker_count(tmp_path):
    config = _config(tmp_path)
    dataset = ensure_dataset(config)
    model = build_model(config)
    episodes = list(dataset)
    serial = await evaluate_async(model, episodes, config.eval, workers=1)
    parallel = await evaluate_async(model, episodes, config.eval, workers=4)
    assert serial == parallel
    assert serial.episodes == len(episodes)


def test_unknown_ablation_switch(tmp_path):
    with pytest.raises(ConfigError, match="unknown ablation switches"):
        run_ablation(_config(tmp_path), tmp_path / "ablate", ["use_radar"])


@pytest.mark.slow
def test_training_halves_the_planning_error(tmp_path):
    """Acceptance-scale run on the default model: 200 episodes, 30 epochs."""
    config = build_config(
        {
            "data": {"directory": str(tmp_path / "data"), "episodes": "200", "held_out": "40"},
            "train": {"epochs": "30"},
        }
    )
    held_out = ensure_dataset(config).held_out()
    untrained = planning_l2(build_model(config), held_out)
    root = run_experiment(config, tmp_path / "run")
    metrics = json.loads((root / "metrics.json").read_text())
    assert metrics["planning"]["l2"]["avg"] <= 0.5 * untrained
    assert metrics["detection"]["recall"] > 0.5


@pytest.mark.slow
def test_view_correspondence_matters_most(tmp_path):
    config = build_config(
        {
            "data": {"directory": str(tmp_path / "data"), "episodes": "60", "held_out": "12"},
            "train": {"epochs": "10"},
        }
    )
    scores = run_ablation(config, tmp_path / "ablate", ["use_vcl", "use_ltf", "use_trm"])
    assert set(scores) == {"full", "no_vcl", "no_ltf", "no_trm"}
    assert scores["no_vcl"] == max(scores["no_vcl"], scores["no_ltf"], scores["no_trm"])
