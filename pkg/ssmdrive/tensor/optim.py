"""
AdamW with cosine-annealed learning rate and global gradient clipping.
"""

from __future__ import annotations

import math

import numpy as np

from .nn import Parameter


def clip_grad_norm(params: list[Parameter], max_norm: float) -> float:
    """Scale gradients so their global L2 norm is at most ``max_norm``."""
    total = math.sqrt(sum(float(np.sum(p.grad**2)) for p in params if p.grad is not None))
    if max_norm > 0 and total > max_norm:
        scale = max_norm / (total + 1e-12)
        for p in params:
            if p.grad is not None:
                p.grad = p.grad * scale
    return total


def cosine_lr(base_lr: float, step: int, total_steps: int, min_ratio: float = 0.01) -> float:
    if total_steps <= 1:
        return base_lr
    progress = min(step / (total_steps - 1), 1.0)
    return base_lr * (min_ratio + (1.0 - min_ratio) * 0.5 * (1.0 + math.cos(math.pi * progress)))


class AdamW:
    def __init__(
        self,
        params: list[Parameter],
        lr: float = 1e-3,
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
        weight_decay: float = 0.01,
    ) -> None:
        self.params = params
        self.lr = lr
        self.betas = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.step_count = 0
        self.m = [np.zeros_like(p.data) for p in params]
        self.v = [np.zeros_like(p.data) for p in params]

    def step(self) -> None:
        self.step_count += 1
        b1, b2 = self.betas
        c1 = 1.0 - b1**self.step_count
        c2 = 1.0 - b2**self.step_count
        for i, p in enumerate(self.params):
            if p.grad is None:
                continue
            self.m[i] = b1 * self.m[i] + (1.0 - b1) * p.grad
            self.v[i] = b2 * self.v[i] + (1.0 - b2) * p.grad**2
            update = (self.m[i] / c1) / (np.sqrt(self.v[i] / c2) + self.eps)
            # Rebind rather than mutate: earlier tapes may still reference the old array.
            p.data = p.data * (1.0 - self.lr * self.weight_decay) - self.lr * update

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None

    def state(self) -> dict[str, object]:
        return {"step": self.step_count, "m": self.m, "v": self.v}

    def load_state(self, state: dict[str, object]) -> None:
        self.step_count = int(state["step"])  # type: ignore[call-overload]
        self.m = [np.asarray(a, dtype=np.float64) for a in state["m"]]  # type: ignore[attr-defined]
        self.v = [np.asarray(a, dtype=np.float64) for a in state["v"]]  # type: ignore[attr-defined]
