"""
Parameter containers and the small layer set used across the decoder.
"""

from __future__ import annotations

from collections.abc import Iterator
from typing import Any

import numpy as np

from ..errors import CheckpointError
from . import ops
from .core import Tensor


class Parameter(Tensor):
    """A trainable leaf tensor."""

    __slots__ = ()

    def __init__(self, data: Any) -> None:
        super().__init__(data, requires_grad=True)


class Module:
    """Base class; parameters are discovered from attributes, lists included."""

    def __call__(self, *args: Any, **kwargs: Any) -> Any:
        return self.forward(*args, **kwargs)

    def forward(self, *args: Any, **kwargs: Any) -> Any:
        raise NotImplementedError

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Parameter]]:
        for name, value in vars(self).items():
            yield from _walk(value, f"{prefix}{name}")

    def parameters(self) -> list[Parameter]:
        return [p for _, p in self.named_parameters()]

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.grad = None

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.named_parameters()}

    def load_state_dict(self, state: dict[str, np.ndarray], strict: bool = True) -> None:
        own = dict(self.named_parameters())
        missing = sorted(set(own) - set(state))
        unexpected = sorted(set(state) - set(own))
        if strict and (missing or unexpected):
            raise CheckpointError(f"parameter mismatch: missing={missing} unexpected={unexpected}")
        for name, value in state.items():
            if name not in own:
                continue
            value = np.asarray(value, dtype=np.float64)
            if value.shape != own[name].shape:
                raise CheckpointError(
                    f"{name}: checkpoint shape {list(value.shape)} != model shape {list(own[name].shape)}"
                )
            own[name].data = value.copy()


def _walk(value: Any, path: str) -> Iterator[tuple[str, Parameter]]:
    if isinstance(value, Parameter):
        yield path, value
    elif isinstance(value, Module):
        yield from value.named_parameters(f"{path}.")
    elif isinstance(value, (list, tuple)):
        for i, item in enumerate(value):
            yield from _walk(item, f"{path}.{i}")
    elif isinstance(value, dict):
        for key in sorted(value):
            yield from _walk(value[key], f"{path}.{key}")


class Linear(Module):
    """y = x @ weight + bias with weight stored as (in, out)."""

    def __init__(
        self,
        in_features: int,
        out_features: int,
        rng: np.random.Generator,
        bias: bool = True,
        zero_init: bool = False,
    ) -> None:
        bound = 1.0 / np.sqrt(in_features)
        weight = (
            np.zeros((in_features, out_features))
            if zero_init
            else rng.uniform(-bound, bound, size=(in_features, out_features))
        )
        self.weight = Parameter(weight)
        self.bias = Parameter(np.zeros(out_features)) if bias else None

    def forward(self, x: Tensor) -> Tensor:
        out = ops.matmul(x, self.weight)
        return out + self.bias if self.bias is not None else out


class Mlp(Module):
    """Two fully connected layers with a ReLU in between."""

    def __init__(
        self,
        in_features: int,
        hidden: int,
        out_features: int,
        rng: np.random.Generator,
        zero_last: bool = False,
    ) -> None:
        self.fc1 = Linear(in_features, hidden, rng)
        self.fc2 = Linear(hidden, out_features, rng, zero_init=zero_last)

    def forward(self, x: Tensor) -> Tensor:
        return self.fc2(ops.relu(self.fc1(x)))


class LayerNorm(Module):
    def __init__(self, width: int, eps: float = 1e-5) -> None:
        self.gamma = Parameter(np.ones(width))
        self.beta = Parameter(np.zeros(width))
        self.eps = eps

    def forward(self, x: Tensor) -> Tensor:
        return ops.layer_norm(x, self.eps) * self.gamma + self.beta
