"""
Tensor Core

Dense 64-bit tensors and the computation tape that records primitive operations
for reverse-mode differentiation.
"""

from __future__ import annotations

import contextlib
import contextvars
from collections.abc import Callable, Iterator, Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np

from ..errors import ContractError

BackwardFn = Callable[[np.ndarray], Sequence[np.ndarray | None]]


class Tensor:
    """A float64 array that can take part in gradient computation.

    Tensors are never mutated in place once an operation has consumed them;
    parameters are updated by rebinding ``data``.
    """

    __slots__ = ("_tape", "data", "grad", "requires_grad")
    __array_priority__ = 100

    def __init__(self, data: Any, requires_grad: bool = False) -> None:
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self._tape: ComputationTape | None = None

    def __repr__(self) -> str:
        return f"Tensor(shape={list(self.shape)}, requires_grad={self.requires_grad})"

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.data.shape)

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def detach(self) -> Tensor:
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    # Operator sugar, implemented in ops.
    def __add__(self, other: Any) -> Tensor:
        return _ops.add(self, other)

    def __radd__(self, other: Any) -> Tensor:
        return _ops.add(other, self)

    def __sub__(self, other: Any) -> Tensor:
        return _ops.sub(self, other)

    def __rsub__(self, other: Any) -> Tensor:
        return _ops.sub(other, self)

    def __mul__(self, other: Any) -> Tensor:
        return _ops.mul(self, other)

    def __rmul__(self, other: Any) -> Tensor:
        return _ops.mul(other, self)

    def __truediv__(self, other: Any) -> Tensor:
        return _ops.div(self, other)

    def __rtruediv__(self, other: Any) -> Tensor:
        return _ops.div(other, self)

    def __neg__(self) -> Tensor:
        return _ops.neg(self)

    def __pow__(self, exponent: float) -> Tensor:
        return _ops.power(self, exponent)

    def __matmul__(self, other: Any) -> Tensor:
        return _ops.matmul(self, other)

    def __rmatmul__(self, other: Any) -> Tensor:
        return _ops.matmul(other, self)

    def __getitem__(self, index: Any) -> Tensor:
        return _ops.getitem(self, index)

    def sum(self, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> Tensor:
        return _ops.sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> Tensor:
        return _ops.mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape: int) -> Tensor:
        return _ops.reshape(self, shape)

    def transpose(self, *axes: int) -> Tensor:
        return _ops.transpose(self, axes or None)

    @property
    def T(self) -> Tensor:
        return _ops.transpose(self, None)


@dataclass
class TapeNode:
    output: Tensor
    inputs: tuple[Tensor, ...]
    backward: BackwardFn


class ComputationTape:
    """Ordered record of the primitive operations of one forward pass."""

    def __init__(self) -> None:
        self.nodes: list[TapeNode] = []

    def __len__(self) -> int:
        return len(self.nodes)


_ACTIVE_TAPE: contextvars.ContextVar[ComputationTape | None] = contextvars.ContextVar(
    "ssmdrive_active_tape", default=None
)


@contextlib.contextmanager
def recording() -> Iterator[ComputationTape]:
    """Record every operation on gradient-requiring tensors inside the block."""
    tape = ComputationTape()
    token = _ACTIVE_TAPE.set(tape)
    try:
        yield tape
    finally:
        _ACTIVE_TAPE.reset(token)


def is_recording() -> bool:
    return _ACTIVE_TAPE.get() is not None


def apply(value: np.ndarray, inputs: Sequence[Tensor], backward_fn: BackwardFn) -> Tensor:
    """Wrap a primitive's result, recording it when a tape is active."""
    out = Tensor(value)
    tape = _ACTIVE_TAPE.get()
    if tape is not None and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        out._tape = tape
        tape.nodes.append(TapeNode(out, tuple(inputs), backward_fn))
    return out


def backward(root: Tensor) -> None:
    """Accumulate d(root)/d(leaf) into ``grad`` of every reachable leaf."""
    if root.data.size != 1:
        raise ContractError(f"backward needs a scalar root, got shape {list(root.shape)}")
    tape = root._tape
    if tape is None:
        return

    grads: dict[int, np.ndarray] = {id(root): np.ones_like(root.data)}
    leaves: dict[int, Tensor] = {}
    for node in reversed(tape.nodes):
        upstream = grads.pop(id(node.output), None)
        if upstream is None:
            continue
        for tensor, grad in zip(node.inputs, node.backward(upstream), strict=True):
            if grad is None or not tensor.requires_grad:
                continue
            key = id(tensor)
            grads[key] = grads[key] + grad if key in grads else grad
            if tensor._tape is not tape:
                leaves[key] = tensor

    for key, leaf in leaves.items():
        grad = grads[key].reshape(leaf.shape)
        leaf.grad = grad.copy() if leaf.grad is None else leaf.grad + grad


from . import ops as _ops  # noqa: E402
