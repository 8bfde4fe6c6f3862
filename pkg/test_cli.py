"""
Tests for the command surface, run through click's CliRunner.
"""

import csv
import json

import pytest
from click.testing import CliRunner

from conftest import TINY
from ssmdrive.experiment_app import cli


@pytest.fixture
def tiny_args(tmp_path):
    args = [f"--set={section}.{key}={value}" for section, values in TINY.items() for key, value in values.items()]
    return [*args, f"--set=data.directory={tmp_path / 'data'}", "--set=data.templates=lead-brake,cut-in"]


def _invoke(*args):
    return CliRunner().invoke(cli, [str(a) for a in args])


def test_generate_data(tmp_path, tiny_args):
    result = _invoke("generate-data", *tiny_args, "--count", 3, "--held-out", 1, "--out", tmp_path / "data")
    assert result.exit_code == 0, result.output
    assert "Dataset written to" in result.output
    assert len(list((tmp_path / "data").glob("episodes/*/manifest.json"))) == 3


def test_train_then_evaluate(tmp_path, tiny_args):
    result = _invoke("train", *tiny_args, "--out", tmp_path / "run")
    assert result.exit_code == 0, result.output
    checkpoint = tmp_path / "run" / "checkpoint.json"
    assert checkpoint.exists()
    metadata = json.loads((tmp_path / "run" / "run_metadata.json").read_text())
    assert any(o.startswith("model.width=") for o in metadata["overrides"])

    result = _invoke("eval", *tiny_args, "--checkpoint", checkpoint, "--split", "all", "--out", tmp_path / "eval")
    assert result.exit_code == 0, result.output
    summary = json.loads((tmp_path / "eval" / "metrics.json").read_text())
    assert summary["episodes"] == 4
    assert summary["planning"]["samples"] == summary["frames"]


def test_bench(tmp_path):
    result = _invoke(
        "bench", "--lengths", "8,16,32,48,64", "--set", "bench.width=8", "--set", "bench.repeats=1", "--out", tmp_path
    )
    assert result.exit_code == 0, result.output
    with open(tmp_path / "scaling.csv") as f:
        rows = list(csv.DictReader(f))
    assert {r["layer"] for r in rows} == {"bmamba", "attention"}
    assert "time slope" in result.output


def test_scan_viz(tmp_path, tiny_args):
    out = tmp_path / "scans" / "trm.csv"
    result = _invoke("scan-viz", *tiny_args, "--frame", 1, "--layer", 1, "--part", "trm", "--out", out)
    assert result.exit_code == 0, result.output
    with open(out) as f:
        rows = list(csv.DictReader(f))
    assert list(rows[0]) == ["slot", "token_id", "kind", "x", "y", "t"]
    assert sorted(int(r["token_id"]) for r in rows) == list(range(len(rows)))


def test_profile(tmp_path, tiny_args):
    result = _invoke("profile", *tiny_args, "--frames", 2, "--out", tmp_path)
    assert result.exit_code == 0, result.output
    report = json.loads((tmp_path / "profile.json").read_text())
    assert report["frames"] == 2
    stages = report["stages"]
    assert stages["backbone"]["calls"] == 2
    assert sum(row["share"] for row in stages.values()) == pytest.approx(1.0)


def test_errors_become_clean_exits(tmp_path, tiny_args):
    result = _invoke("train", *tiny_args, "--set", "model.depth=3", "--out", tmp_path / "run")
    assert result.exit_code == 1
    assert "unknown key 'depth'" in result.output
    result = _invoke("bench", "--lengths", "8,16", "--out", tmp_path)
    assert result.exit_code == 1
    assert "strictly increasing" in result.output
    result = _invoke("scan-viz", *tiny_args, "--template", "teleport", "--out", tmp_path / "scan.csv")
    assert result.exit_code == 1
    assert "unknown scenario template" in result.output
