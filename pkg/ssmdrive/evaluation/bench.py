"""
Sequence-length scaling benchmark: B-Mamba layer against quadratic attention.

For each length both layers run a forward pass on random tokens ``repeats``
times; the median wall time and the peak traced allocation are recorded and
a least-squares line is fitted to the log-log points of each curve. A length
that runs out of memory is retried with backoff and then marked failed.
"""

from __future__ import annotations

import gc
import logging
import statistics
import time
import tracemalloc
from collections.abc import Callable, Sequence
from typing import Any

import backoff
import numpy as np

from ..errors import ContractError
from ..ssm.attention import SelfAttentionLayer
from ..ssm.bmamba import BMambaLayer
from ..tensor import Tensor
from ..utils.typing import ScalingCurve, ScalingPoint, ScalingReport

MEMORY_RETRIES = 3
MIN_POINTS = 5
MIN_SPAN = 8


def _on_backoff(details: dict[str, Any]) -> None:
    logging.warning(f"Out of memory, retrying in {details['wait']:.1f}s (attempt {details['tries']})")


@backoff.on_exception(backoff.expo, MemoryError, max_tries=MEMORY_RETRIES, on_backoff=_on_backoff, factor=0.5)
def measure(fn: Callable[[], object], repeats: int) -> tuple[float, int]:
    """Median wall time (ms) over ``repeats`` calls and the peak traced allocation (bytes)."""
    gc.collect()
    times = []
    tracemalloc.start()
    try:
        for _ in range(repeats):
            start = time.perf_counter()
            fn()
            times.append(1000.0 * (time.perf_counter() - start))
        _, peak = tracemalloc.get_traced_memory()
    finally:
        tracemalloc.stop()
    return statistics.median(times), int(peak)


def loglog_slope(lengths: Sequence[int], values: Sequence[float]) -> float | None:
    if len(lengths) < 2:
        return None
    slope, _ = np.polyfit(np.log(np.asarray(lengths, dtype=np.float64)), np.log(np.asarray(values, dtype=np.float64)), 1)
    return float(slope)


def _curve(name: str, layer: Callable[[Tensor], Tensor], lengths: Sequence[int], width: int, repeats: int, rng: np.random.Generator) -> ScalingCurve:
    points = []
    for length in lengths:
        tokens = Tensor(rng.normal(size=(length, width)))
        try:
            ms, peak = measure(lambda tokens=tokens: layer(tokens), repeats)
            points.append(ScalingPoint(length=length, time_ms=ms, peak_bytes=peak))
            logging.info(f"{name} length {length}: {ms:.2f} ms, peak {peak / 2**20:.1f} MiB")
        except MemoryError:
            logging.warning(f"{name} length {length}: out of memory, point marked failed")
            points.append(ScalingPoint(length=length, failed=True))
        del tokens
    ok = [p for p in points if not p.failed]
    return ScalingCurve(
        layer=name,
        points=points,
        time_slope=loglog_slope([p.length for p in ok], [p.time_ms or 0.0 for p in ok]),
        memory_slope=loglog_slope([p.length for p in ok], [max(p.peak_bytes or 1, 1) for p in ok]),
    )


def scaling_benchmark(
    lengths: Sequence[int], width: int = 64, repeats: int = 5, state: int = 8, seed: int = 0
) -> ScalingReport:
    """Time and memory scaling of one B-Mamba layer and one self-attention layer of equal width."""
    lengths = list(lengths)
    if len(lengths) < MIN_POINTS or any(b <= a for a, b in zip(lengths, lengths[1:])):
        raise ContractError(f"need at least {MIN_POINTS} strictly increasing lengths, got {lengths}")
    if lengths[-1] < MIN_SPAN * lengths[0]:
        raise ContractError(f"lengths must span at least {MIN_SPAN}x, got {lengths[0]} to {lengths[-1]}")
    rng = np.random.default_rng(seed)
    mamba = BMambaLayer(width, rng, state=state)
    attention = SelfAttentionLayer(width, rng)
    curves = {
        "bmamba": _curve("bmamba", mamba, lengths, width, repeats, rng),
        "attention": _curve("attention", attention, lengths, width, repeats, rng),
    }
    return ScalingReport(width=width, repeats=repeats, curves=curves)


def scaling_rows(report: ScalingReport) -> list[dict[str, object]]:
    """Flat rows for ``scaling.csv``."""
    rows: list[dict[str, object]] = []
    for name, curve in report.curves.items():
        for p in curve.points:
            rows.append({"layer": name, "length": p.length, "time_ms": p.time_ms, "peak_bytes": p.peak_bytes, "failed": p.failed})
    return rows
