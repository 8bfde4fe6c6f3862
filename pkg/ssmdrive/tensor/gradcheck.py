"""
Central finite-difference gradient checking.
"""

from __future__ import annotations

from collections.abc import Callable, Iterable
from dataclasses import dataclass

import numpy as np

from .core import Tensor, backward, recording

FD_STEP = 1e-5
ABS_FLOOR = 1e-7


@dataclass
class GradCheckResult:
    name: str
    index: tuple[int, ...]
    analytic: float
    numeric: float

    @property
    def relative_error(self) -> float:
        return abs(self.analytic - self.numeric) / (abs(self.analytic) + 1e-8)

    def passed(self, rtol: float = 1e-4) -> bool:
        if max(abs(self.analytic), abs(self.numeric)) < ABS_FLOOR:
            return abs(self.analytic - self.numeric) < ABS_FLOOR
        return self.relative_error < rtol


def numeric_gradient(fn: Callable[[], Tensor], tensor: Tensor, index: tuple[int, ...], step: float = FD_STEP) -> float:
    original = tensor.data
    bumped = original.copy()
    bumped[index] = original[index] + step
    tensor.data = bumped
    upper = fn().item()
    lowered = original.copy()
    lowered[index] = original[index] - step
    tensor.data = lowered
    lower = fn().item()
    tensor.data = original
    return (upper - lower) / (2.0 * step)


def check_gradients(
    fn: Callable[[], Tensor],
    tensors: Iterable[tuple[str, Tensor]],
    samples_per_tensor: int = 3,
    rng: np.random.Generator | None = None,
) -> list[GradCheckResult]:
    """Compare analytic and central-difference gradients.

    ``fn`` must rebuild the scalar loss from the tensors' current data each call.
    For every tensor the largest-magnitude analytic entry is always checked, plus
    ``samples_per_tensor - 1`` random entries.
    """
    rng = rng or np.random.default_rng(0)
    named = list(tensors)
    for _, t in named:
        t.grad = None
    with recording():
        loss = fn()
        backward(loss)

    results = []
    for name, t in named:
        grad = t.grad if t.grad is not None else np.zeros_like(t.data)
        picks = {tuple(int(i) for i in np.unravel_index(np.argmax(np.abs(grad)), grad.shape))}
        while len(picks) < min(samples_per_tensor, t.size):
            picks.add(tuple(int(rng.integers(0, n)) for n in t.shape))
        for index in sorted(picks):
            results.append(
                GradCheckResult(name, index, float(grad[index]), numeric_gradient(fn, t, index))
            )
    return results
