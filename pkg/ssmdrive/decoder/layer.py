"""
One unified decoder layer.

Three B-Mamba layers share the block: view correspondence learning over task
and sensor tokens, long-term temporal fusion over memory and current task
tokens, and task relation modelling over the task tokens alone. Each pass
runs on semantic + PE and hands back the semantic part; only task-token
outputs leave a pass.
"""

from __future__ import annotations

import numpy as np

from ..heads.heads import TaskHeads
from ..scan.orders import ScanOrder
from ..ssm.bmamba import BMambaLayer
from ..tensor import Module, Tensor, ops
from ..tokens.queries import TaskQueryLayout
from ..tokens.types import TokenSet


def _with_semantic(tokens: TokenSet, semantic: Tensor) -> TokenSet:
    return TokenSet(
        semantic=semantic,
        ref_pos=tokens.ref_pos,
        timestamp=tokens.timestamp,
        kind=tokens.kind,
        pe=tokens.pe,
        velocity=tokens.velocity,
    )


def _embedded(tokens: TokenSet) -> Tensor:
    return tokens.semantic if tokens.pe is None else tokens.semantic + tokens.pe


def _strip(out: Tensor, tokens: TokenSet) -> Tensor:
    return out if tokens.pe is None else out - tokens.pe


class DecoderLayer(Module):
    def __init__(
        self,
        width: int,
        layout: TaskQueryLayout,
        rng: np.random.Generator,
        state: int = 8,
        expand: int = 2,
        dt_rank: int | None = None,
        motion_steps: int = 6,
        modes: int = 6,
    ) -> None:
        self.vcl = BMambaLayer(width, rng, state, expand, dt_rank)
        self.ltf = BMambaLayer(width, rng, state, expand, dt_rank)
        self.trm = BMambaLayer(width, rng, state, expand, dt_rank)
        self.heads = TaskHeads(width, layout, rng, motion_steps, modes)


def vcl_forward(
    layer: DecoderLayer, tasks: TokenSet, sensors: TokenSet | None, order: ScanOrder
) -> tuple[TokenSet, Tensor | None]:
    """One pass over [task ++ sensor]; returns updated tasks and the sensors' semantic outputs."""
    n = len(tasks)
    parts = [_embedded(tasks)]
    if sensors is not None and len(sensors):
        parts.append(_embedded(sensors))
    out = layer.vcl(ops.concat(parts), order)
    task_sem = _strip(out[:n], tasks)
    sensor_sem = _strip(out[n:], sensors) if len(parts) > 1 and sensors is not None else None
    return _with_semantic(tasks, task_sem), sensor_sem


def ltf_forward(layer: DecoderLayer, tasks: TokenSet, memory: TokenSet | None, order: ScanOrder) -> TokenSet:
    """One pass over [history ++ current]; with no history it runs on the current tokens alone."""
    if memory is None or not len(memory):
        return _with_semantic(tasks, _strip(layer.ltf(_embedded(tasks), order), tasks))
    out = layer.ltf(ops.concat([_embedded(memory), _embedded(tasks)]), order)
    return _with_semantic(tasks, _strip(out[len(memory) :], tasks))


def trm_forward(layer: DecoderLayer, tasks: TokenSet, order: ScanOrder) -> TokenSet:
    return _with_semantic(tasks, _strip(layer.trm(_embedded(tasks), order), tasks))
