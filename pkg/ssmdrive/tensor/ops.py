"""
Primitive Operations

Every differentiable primitive the decoder is built from. Each primitive
computes its value with numpy and registers a closure that maps the upstream
gradient to one gradient per input.
"""

from __future__ import annotations

import builtins
from collections.abc import Callable, Sequence
from typing import Any

import numpy as np
from scipy.special import expit

from ..errors import DimensionError
from .core import Tensor, apply

Axis = int | tuple[int, ...] | None


def as_tensor(value: Any) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _broadcast(a: Tensor, b: Tensor) -> tuple[int, ...]:
    try:
        return tuple(np.broadcast_shapes(a.shape, b.shape))
    except ValueError as exc:
        raise DimensionError("shapes are not broadcast-compatible", a.shape, b.shape) from exc


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if grad.shape == shape:
        return grad
    lead = grad.ndim - len(shape)
    if lead > 0:
        grad = grad.sum(axis=tuple(range(lead)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


# Binary arithmetic


def add(a: Any, b: Any) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast(a, b)
    return apply(
        a.data + b.data,
        (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)),
    )


def sub(a: Any, b: Any) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast(a, b)
    return apply(
        a.data - b.data,
        (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)),
    )


def mul(a: Any, b: Any) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast(a, b)
    return apply(
        a.data * b.data,
        (a, b),
        lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)),
    )


def div(a: Any, b: Any) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast(a, b)
    out = a.data / b.data
    return apply(
        out,
        (a, b),
        lambda g: (
            _unbroadcast(g / b.data, a.shape),
            _unbroadcast(-g * out / b.data, b.shape),
        ),
    )


def maximum(a: Any, b: Any) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast(a, b)
    pick_a = a.data >= b.data
    return apply(
        np.where(pick_a, a.data, b.data),
        (a, b),
        lambda g: (
            _unbroadcast(np.where(pick_a, g, 0.0), a.shape),
            _unbroadcast(np.where(pick_a, 0.0, g), b.shape),
        ),
    )


def minimum(a: Any, b: Any) -> Tensor:
    return neg(maximum(neg(a), neg(b)))


def matmul(a: Any, b: Any) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise DimensionError("matmul inner extents disagree", a.shape, b.shape)
    try:
        out = np.matmul(a.data, b.data)
    except ValueError as exc:
        raise DimensionError("matmul batch extents disagree", a.shape, b.shape) from exc
    return apply(
        out,
        (a, b),
        lambda g: (
            _unbroadcast(np.matmul(g, np.swapaxes(b.data, -1, -2)), a.shape),
            _unbroadcast(np.matmul(np.swapaxes(a.data, -1, -2), g), b.shape),
        ),
    )


# Unary elementwise


def _unary(
    x: Any, value: np.ndarray | Callable[[np.ndarray], np.ndarray], local: Callable[[np.ndarray], np.ndarray]
) -> Tensor:
    x = as_tensor(x)
    out = value(x.data) if callable(value) else value
    return apply(out, (x,), lambda g: (g * local(out),))


def neg(x: Any) -> Tensor:
    x = as_tensor(x)
    return apply(-x.data, (x,), lambda g: (-g,))


def power(x: Any, exponent: float) -> Tensor:
    x = as_tensor(x)
    return apply(
        x.data**exponent,
        (x,),
        lambda g: (g * exponent * x.data ** (exponent - 1),),
    )


def exp(x: Any) -> Tensor:
    return _unary(x, np.exp, lambda out: out)


def log(x: Any) -> Tensor:
    x = as_tensor(x)
    return apply(np.log(x.data), (x,), lambda g: (g / x.data,))


def sqrt(x: Any) -> Tensor:
    return _unary(x, np.sqrt, lambda out: 0.5 / out)


def abs(x: Any) -> Tensor:
    x = as_tensor(x)
    return apply(np.abs(x.data), (x,), lambda g: (g * np.sign(x.data),))


def relu(x: Any) -> Tensor:
    x = as_tensor(x)
    mask = x.data > 0
    return apply(np.where(mask, x.data, 0.0), (x,), lambda g: (g * mask,))


def sigmoid(x: Any) -> Tensor:
    return _unary(x, expit, lambda out: out * (1.0 - out))


def silu(x: Any) -> Tensor:
    """Sigmoid-linear gate x * sigmoid(x)."""
    x = as_tensor(x)
    s = expit(x.data)
    return apply(x.data * s, (x,), lambda g: (g * (s + x.data * s * (1.0 - s)),))


def softplus(x: Any) -> Tensor:
    x = as_tensor(x)
    return apply(np.logaddexp(0.0, x.data), (x,), lambda g: (g * expit(x.data),))


def tanh(x: Any) -> Tensor:
    return _unary(x, np.tanh, lambda out: 1.0 - out * out)


def sin(x: Any) -> Tensor:
    x = as_tensor(x)
    return apply(np.sin(x.data), (x,), lambda g: (g * np.cos(x.data),))


def cos(x: Any) -> Tensor:
    x = as_tensor(x)
    return apply(np.cos(x.data), (x,), lambda g: (-g * np.sin(x.data),))


def layer_norm(x: Any, eps: float = 1e-5) -> Tensor:
    """Normalise over the last axis without affine; constant rows map to zeros."""
    x = as_tensor(x)
    centred = x.data - x.data.mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt((centred**2).mean(axis=-1, keepdims=True) + eps)
    xhat = centred * inv_std

    def grad_fn(g: np.ndarray) -> tuple[np.ndarray]:
        g_mean = g.mean(axis=-1, keepdims=True)
        gx_mean = (g * xhat).mean(axis=-1, keepdims=True)
        return (inv_std * (g - g_mean - xhat * gx_mean),)

    return apply(xhat, (x,), grad_fn)


ELEMENTWISE: dict[str, Callable[..., Tensor]] = {
    "add": add,
    "sub": sub,
    "multiply": mul,
    "divide": div,
    "exp": exp,
    "log": log,
    "silu": silu,
    "sigmoid": sigmoid,
    "softplus": softplus,
    "relu": relu,
    "layer_norm": layer_norm,
    "sin": sin,
    "cos": cos,
}


def elementwise(op_kind: str, *inputs: Any) -> Tensor:
    """Dispatch an elementwise primitive by name."""
    try:
        fn = ELEMENTWISE[op_kind]
    except KeyError as exc:
        raise KeyError(f"unknown elementwise op {op_kind!r}; known: {sorted(ELEMENTWISE)}") from exc
    return fn(*inputs)


# Reductions


def sum(x: Any, axis: Axis = None, keepdims: bool = False) -> Tensor:
    x = as_tensor(x)
    shape = x.shape

    def grad_fn(g: np.ndarray) -> tuple[np.ndarray]:
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, shape).copy(),)

    return apply(x.data.sum(axis=axis, keepdims=keepdims), (x,), grad_fn)


def mean(x: Any, axis: Axis = None, keepdims: bool = False) -> Tensor:
    x = as_tensor(x)
    if axis is None:
        count = x.size
    else:
        axes = (axis,) if isinstance(axis, int) else axis
        count = int(np.prod([x.shape[a] for a in axes]))
    return sum(x, axis=axis, keepdims=keepdims) / float(builtins.max(count, 1))


def _extreme(x: Tensor, axis: int, pick: Callable[..., np.ndarray]) -> Tensor:
    idx = pick(x.data, axis=axis)
    value = np.take_along_axis(x.data, np.expand_dims(idx, axis), axis=axis).squeeze(axis)

    def grad_fn(g: np.ndarray) -> tuple[np.ndarray]:
        out = np.zeros_like(x.data)
        np.put_along_axis(out, np.expand_dims(idx, axis), np.expand_dims(g, axis), axis=axis)
        return (out,)

    return apply(value, (x,), grad_fn)


def min(x: Any, axis: int = -1) -> Tensor:
    """Minimum along an axis; the gradient goes to the first minimiser."""
    return _extreme(as_tensor(x), axis, np.argmin)


def max(x: Any, axis: int = -1) -> Tensor:
    return _extreme(as_tensor(x), axis, np.argmax)


def softmax(x: Any, axis: int = -1) -> Tensor:
    x = as_tensor(x)
    out = x.data - x.data.max(axis=axis, keepdims=True)
    np.exp(out, out=out)
    out /= out.sum(axis=axis, keepdims=True)
    return apply(
        out,
        (x,),
        lambda g: (out * (g - (g * out).sum(axis=axis, keepdims=True)),),
    )


def log_softmax(x: Any, axis: int = -1) -> Tensor:
    x = as_tensor(x)
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    out = shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    return apply(
        out,
        (x,),
        lambda g: (g - np.exp(out) * g.sum(axis=axis, keepdims=True),),
    )


# Shape manipulation


def reshape(x: Any, shape: Sequence[int]) -> Tensor:
    x = as_tensor(x)
    if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
        shape = tuple(shape[0])
    try:
        out = x.data.reshape(shape)
    except ValueError as exc:
        raise DimensionError(f"cannot reshape to {list(shape)}", x.shape) from exc
    return apply(out, (x,), lambda g: (g.reshape(x.shape),))


def transpose(x: Any, axes: Sequence[int] | None = None) -> Tensor:
    x = as_tensor(x)
    if axes is None:
        axes = tuple(reversed(range(x.ndim)))
    inverse = tuple(np.argsort(axes))
    return apply(np.transpose(x.data, axes), (x,), lambda g: (np.transpose(g, inverse),))


def getitem(x: Any, index: Any) -> Tensor:
    x = as_tensor(x)

    def grad_fn(g: np.ndarray) -> tuple[np.ndarray]:
        out = np.zeros_like(x.data)
        np.add.at(out, index, g)
        return (out,)

    return apply(x.data[index], (x,), grad_fn)


def take(x: Any, indices: Sequence[int] | np.ndarray, axis: int = 0) -> Tensor:
    """Gather slices along ``axis``; used to apply scan permutations."""
    x = as_tensor(x)
    idx = np.asarray(indices, dtype=np.int64)

    def grad_fn(g: np.ndarray) -> tuple[np.ndarray]:
        out = np.zeros_like(x.data)
        moved = np.moveaxis(out, axis, 0)
        np.add.at(moved, idx, np.moveaxis(g, axis, 0))
        return (out,)

    return apply(np.take(x.data, idx, axis=axis), (x,), grad_fn)


def concat(tensors: Sequence[Any], axis: int = 0) -> Tensor:
    parts = [as_tensor(t) for t in tensors]
    try:
        out = np.concatenate([p.data for p in parts], axis=axis)
    except ValueError as exc:
        raise DimensionError("cannot concatenate", *(p.shape for p in parts)) from exc
    bounds = np.cumsum([p.shape[axis] for p in parts])[:-1]
    return apply(out, parts, lambda g: tuple(np.split(g, bounds, axis=axis)))


def stack(tensors: Sequence[Any], axis: int = 0) -> Tensor:
    parts = [as_tensor(t) for t in tensors]
    try:
        out = np.stack([p.data for p in parts], axis=axis)
    except ValueError as exc:
        raise DimensionError("cannot stack", *(p.shape for p in parts)) from exc
    return apply(
        out,
        parts,
        lambda g: tuple(np.squeeze(s, axis=axis) for s in np.split(g, len(parts), axis=axis)),
    )


def norm(x: Any, axis: int = -1, eps: float = 1e-12) -> Tensor:
    """Euclidean norm along an axis, smoothed at the origin."""
    return sqrt(sum(as_tensor(x) * as_tensor(x), axis=axis) + eps)
