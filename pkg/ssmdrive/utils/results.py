import csv
import datetime
import json
import logging
from collections.abc import Iterable, Mapping
from pathlib import Path
from typing import Any

from pydantic import BaseModel

from .typing import RunMetadata


def timestamp() -> str:
    return datetime.datetime.now().isoformat(timespec="seconds")


class ResultsDirectory:
    """Artifacts of one command run.

    Every file written through this object is listed in ``run_metadata.json``
    when the run is closed.
    """

    def __init__(self, root: str | Path, metadata: RunMetadata) -> None:
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.metadata = metadata

    def path(self, name: str) -> Path:
        return self.root / name

    def _register(self, name: str) -> Path:
        if name not in self.metadata.artifacts:
            self.metadata.artifacts.append(name)
        return self.path(name)

    def write_text(self, name: str, text: str) -> Path:
        target = self._register(name)
        target.write_text(text)
        return target

    def write_json(self, name: str, payload: BaseModel | Mapping[str, Any]) -> Path:
        doc = payload.model_dump() if isinstance(payload, BaseModel) else dict(payload)
        return self.write_text(name, json.dumps(doc, indent=2))

    def write_csv(self, name: str, rows: Iterable[Mapping[str, Any]]) -> Path:
        rows = list(rows)
        target = self._register(name)
        fields: list[str] = []
        for row in rows:
            fields.extend(k for k in row if k not in fields)
        with open(target, "w", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=fields)
            writer.writeheader()
            writer.writerows(rows)
        logging.info(f"{len(rows)} rows written to {target}")
        return target

    def log_event(self, record: BaseModel) -> None:
        """Log a structured record and append it to ``events.jsonl``."""
        doc = record.model_dump()
        logging.info(json.dumps(doc))
        target = self._register("events.jsonl")
        with open(target, "a") as f:
            f.write(json.dumps(doc) + "\n")

    def register(self, name: str) -> Path:
        """Path for an artifact written by someone else (a checkpoint, say)."""
        return self._register(name)

    def close(self) -> None:
        self.metadata.finished = timestamp()
        self.path("run_metadata.json").write_text(json.dumps(self.metadata.model_dump(), indent=2))
        logging.info(f"Run metadata written to {self.path('run_metadata.json')}")


def open_results(root: str | Path, command: str, config_path: str | None, overrides: Iterable[str], version: str) -> ResultsDirectory:
    return ResultsDirectory(
        root,
        RunMetadata(
            command=command,
            config_path=config_path,
            overrides=list(overrides),
            started=timestamp(),
            package_version=version,
        ),
    )
