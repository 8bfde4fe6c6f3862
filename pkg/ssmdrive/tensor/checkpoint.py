"""
Parameter checkpoints.

A checkpoint is one JSON document: a magic string, a map from parameter path to
shape and flat row-major values, and optional optimizer state and metadata.
Python's float repr round-trips 64-bit values exactly.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any

import numpy as np

from ..errors import CheckpointError

CHECKPOINT_MAGIC = "SSMDRIVE-CKPT-1"


def _pack(array: np.ndarray) -> dict[str, Any]:
    return {"shape": list(array.shape), "values": array.reshape(-1).tolist()}


def _unpack(entry: dict[str, Any]) -> np.ndarray:
    values = np.asarray(entry["values"], dtype=np.float64)
    shape = tuple(entry["shape"])
    if values.size != int(np.prod(shape)):
        raise CheckpointError(f"entry with shape {list(shape)} holds {values.size} values")
    return values.reshape(shape)


def save_checkpoint(
    path: str | Path,
    params: dict[str, np.ndarray],
    optimizer: dict[str, Any] | None = None,
    meta: dict[str, Any] | None = None,
) -> None:
    doc: dict[str, Any] = {
        "magic": CHECKPOINT_MAGIC,
        "params": {name: _pack(value) for name, value in sorted(params.items())},
        "meta": meta or {},
    }
    if optimizer is not None:
        doc["optimizer"] = {
            "step": optimizer["step"],
            "m": [_pack(a) for a in optimizer["m"]],
            "v": [_pack(a) for a in optimizer["v"]],
        }
    Path(path).write_text(json.dumps(doc))
    logging.info(f"Checkpoint with {len(params)} parameters written to {path}")


def load_checkpoint(path: str | Path) -> tuple[dict[str, np.ndarray], dict[str, Any] | None, dict[str, Any]]:
    """Return (params, optimizer_state, meta)."""
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if doc.get("magic") != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path} is not a {CHECKPOINT_MAGIC} checkpoint")
    params = {name: _unpack(entry) for name, entry in doc["params"].items()}
    optimizer = None
    if "optimizer" in doc:
        opt = doc["optimizer"]
        optimizer = {
            "step": opt["step"],
            "m": [_unpack(e) for e in opt["m"]],
            "v": [_unpack(e) for e in opt["v"]],
        }
    return params, optimizer, doc.get("meta", {})
