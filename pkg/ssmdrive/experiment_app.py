"""
Command surface: data generation, training, evaluation, benchmarks and
the scan / profiling diagnostics.
"""

import functools
import json
import logging
from collections.abc import Callable
from pathlib import Path
from typing import Any

import click

from . import __version__
from .agent import DriveAgent
from .config import ExperimentConfig, load_config
from .errors import SsmDriveError
from .evaluation.bench import scaling_benchmark, scaling_rows
from .training import (
    ABLATION_SWITCHES,
    build_model,
    camera_rig,
    ensure_dataset,
    evaluate_and_record,
    load_model,
    run_ablation,
    run_experiment,
    write_config,
)
from .utils.results import ResultsDirectory, open_results
from .utils.tracing import StageTimingSpanExporter, install_profiler, uninstall_profiler
from .world.dataset import build_sample, generate_dataset
from .world.scenarios import TEMPLATES, generate


class ExperimentApp:
    """Per-invocation state: resolved configuration and, when profiling, the stage exporter."""

    def __init__(self, config_path: str | None, overrides: tuple[str, ...]) -> None:
        self.config_path = config_path
        self.overrides = overrides
        self.exporter: StageTimingSpanExporter | None = None

    def set_up(self, profile: bool = False) -> ExperimentConfig:
        """Set up logging and, on request, stage tracing; then load the configuration."""
        logging.basicConfig(level=logging.INFO)
        if profile:
            self.exporter = install_profiler()
        return load_config(self.config_path, self.overrides)

    def results(self, out: str, command: str) -> ResultsDirectory:
        return open_results(out, command, self.config_path, self.overrides, __version__)

    def tear_down(self) -> None:
        if self.exporter is not None:
            uninstall_profiler()
            self.exporter = None


def _config_options(fn: Callable[..., Any]) -> Callable[..., Any]:
    fn = click.option(
        "--set",
        "overrides",
        multiple=True,
        help="Override a config value, e.g. --set model.layers=4 (repeatable)",
    )(fn)
    return click.option("--config", "config_path", default=None, help="Path to the INI config file")(fn)


def _command(fn: Callable[..., Any]) -> Callable[..., Any]:
    """Turn package errors into click errors with a non-zero exit code."""

    @functools.wraps(fn)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return fn(*args, **kwargs)
        except SsmDriveError as exc:
            raise click.ClickException(str(exc)) from exc

    return wrapper


@click.group()
@click.version_option(__version__)
def cli() -> None:
    """Unified state-space driving model experiments."""


@cli.command("generate-data")
@_config_options
@click.option("--template", "templates", multiple=True, help=f"Scenario template ({', '.join(sorted(TEMPLATES))})")
@click.option("--count", type=int, default=None, help="Number of episodes")
@click.option("--seed", type=int, default=None, help="Base seed")
@click.option("--held-out", type=int, default=None, help="Episodes reserved for evaluation")
@click.option("--out", default=None, help="Dataset directory")
@_command
def generate_data(
    config_path: str | None,
    overrides: tuple[str, ...],
    templates: tuple[str, ...],
    count: int | None,
    seed: int | None,
    held_out: int | None,
    out: str | None,
) -> None:
    """Generate toy-world episodes."""
    config = ExperimentApp(config_path, overrides).set_up()
    data = config.data
    dataset = generate_dataset(
        out or data.directory,
        list(templates) or data.templates,
        data.episodes if count is None else count,
        data.seed if seed is None else seed,
        data.frames,
        data.held_out if held_out is None else held_out,
        rig=camera_rig(config),
    )
    click.echo(f"Dataset written to {dataset.root}")


@cli.command()
@_config_options
@click.option("--out", default="results/train", help="Results directory")
@click.option("--resume", default=None, help="Checkpoint to resume from")
@_command
def train(config_path: str | None, overrides: tuple[str, ...], out: str, resume: str | None) -> None:
    """Train and evaluate a model."""
    config = ExperimentApp(config_path, overrides).set_up()
    root = run_experiment(config, out, config_path, overrides, resume)
    click.echo(f"Results written to {root}")


@cli.command("eval")
@_config_options
@click.option("--checkpoint", required=True, help="Checkpoint to evaluate")
@click.option("--split", type=click.Choice(["held_out", "train", "all"]), default="held_out")
@click.option("--out", default="results/eval", help="Results directory")
@_command
def evaluate(config_path: str | None, overrides: tuple[str, ...], checkpoint: str, split: str, out: str) -> None:
    """Evaluate a checkpoint on stored episodes."""
    app = ExperimentApp(config_path, overrides)
    config = app.set_up()
    results = app.results(out, "eval")
    write_config(results, config)
    dataset = ensure_dataset(config)
    episodes = {"held_out": dataset.held_out, "train": dataset.train, "all": lambda: list(dataset)}[split]()
    summary = evaluate_and_record(load_model(config, checkpoint), episodes, config, results)
    results.close()
    click.echo(json.dumps(summary.model_dump(), indent=2))


@cli.command()
@_config_options
@click.option("--lengths", default=None, help="Comma-separated sequence lengths")
@click.option("--out", default="results/bench", help="Results directory")
@_command
def bench(config_path: str | None, overrides: tuple[str, ...], lengths: str | None, out: str) -> None:
    """Time and memory scaling of B-Mamba against quadratic attention."""
    app = ExperimentApp(config_path, (*overrides, *([f"bench.lengths={lengths}"] if lengths else [])))
    config = app.set_up()
    b = config.bench
    report = scaling_benchmark(b.lengths, b.width, b.repeats, b.state)
    results = app.results(out, "bench")
    results.write_csv("scaling.csv", scaling_rows(report))
    results.write_json("scaling.json", report)
    results.close()
    for name, curve in report.curves.items():
        click.echo(f"{name}: time slope {curve.time_slope}, memory slope {curve.memory_slope}")


@cli.command("scan-viz")
@_config_options
@click.option("--template", default="straight-follow", help="Scenario template")
@click.option("--seed", type=int, default=0)
@click.option("--frame", type=int, default=0, help="Frame whose scans are dumped")
@click.option("--layer", type=int, default=0, help="Decoder layer")
@click.option("--part", type=click.Choice(["vcl", "ltf", "trm"]), default="vcl")
@click.option("--out", default="scan.csv", help="Output CSV")
@_command
def scan_viz(
    config_path: str | None,
    overrides: tuple[str, ...],
    template: str,
    seed: int,
    frame: int,
    layer: int,
    part: str,
    out: str,
) -> None:
    """Dump the token sequence one layer scans as CSV (slot, token_id, x, y, t)."""
    config = ExperimentApp(config_path, overrides).set_up()
    episode = generate(template, seed, num_frames=max(frame + 1, config.data.frames), rig=camera_rig(config))
    model = build_model(config)
    memory = model.new_memory()
    # earlier frames fill the memory the temporal scan reads
    for t in range(frame):
        model.step(build_sample(episode, t), memory)
    sample = build_sample(episode, frame)
    scanned = model.scan_orders(sample, memory, layer)[part]
    path = Path(out)
    results = open_results(path.parent, "scan-viz", config_path, overrides, __version__)
    results.write_csv(path.name, scanned.rows())
    results.close()
    click.echo(f"{len(scanned.order)} slots written to {path}")


@cli.command()
@_config_options
@click.option("--template", default="lead-brake", help="Scenario template")
@click.option("--seed", type=int, default=0)
@click.option("--frames", type=int, default=6, help="Frames to stream")
@click.option("--checkpoint", default=None, help="Checkpoint to profile (untrained model when omitted)")
@click.option("--out", default="results/profile", help="Results directory")
@_command
def profile(
    config_path: str | None,
    overrides: tuple[str, ...],
    template: str,
    seed: int,
    frames: int,
    checkpoint: str | None,
    out: str,
) -> None:
    """Stream one episode and write per-stage wall time to profile.json."""
    app = ExperimentApp(config_path, overrides)
    config = app.set_up(profile=True)
    try:
        model = load_model(config, checkpoint) if checkpoint else build_model(config)
        episode = generate(template, seed, num_frames=frames, rig=camera_rig(config))
        agent = DriveAgent(model)
        assert app.exporter is not None
        app.exporter.reset()
        for _ in agent.drive(build_sample(episode, t) for t in range(frames)):
            pass
        report = app.exporter.report()
        report["frames"] = frames
        results = app.results(out, "profile")
        results.write_json("profile.json", report)
        results.close()
    finally:
        app.tear_down()
    for name, row in report["stages"].items():
        click.echo(f"{name:32s} {row['total_ms']:10.2f} ms  {100.0 * row['share']:5.1f}%")


@cli.command()
@_config_options
@click.option("--switch", "switches", multiple=True, type=click.Choice(ABLATION_SWITCHES), help="Switches to ablate")
@click.option("--out", default="results/ablation", help="Results directory")
@_command
def ablate(config_path: str | None, overrides: tuple[str, ...], switches: tuple[str, ...], out: str) -> None:
    """Train one model per disabled component and compare held-out planning L2."""
    config = ExperimentApp(config_path, overrides).set_up()
    scores = run_ablation(config, out, switches or ABLATION_SWITCHES)
    for name, l2 in scores.items():
        click.echo(f"{name:24s} {l2:.3f} m")


if __name__ == "__main__":
    cli()
