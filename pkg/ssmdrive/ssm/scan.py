"""
Selective Scan

The input-dependent recurrence

    h_t = a_bar_t * h_{t-1} + b_bar_t * x_t,   y_t = C_t . h_t,   h_{-1} = 0

run sequentially over the sequence. ``scan_recurrence`` is a single tape
primitive whose backward pass is the reversed recurrence, so gradients cost
one extra sweep instead of one tape node per position.
"""

from __future__ import annotations

from typing import Any

import numpy as np

from ..errors import ContractError, DimensionError
from ..tensor import Tensor, apply, ops


def scan_recurrence(a_bar: Any, bx: Any, c: Any) -> Tensor:
    """Run the recurrence on pre-discretized inputs.

    Args:
        a_bar: (M, D, N) per-position state decay.
        bx: (M, D, N) per-position state input, b_bar * x.
        c: (M, N) per-position readout.

    Returns:
        (M, D) outputs.
    """
    a_bar, bx, c = ops.as_tensor(a_bar), ops.as_tensor(bx), ops.as_tensor(c)
    if a_bar.ndim != 3 or a_bar.shape != bx.shape:
        raise DimensionError("a_bar and bx must share an (M, D, N) shape", a_bar.shape, bx.shape)
    length, _, state = a_bar.shape
    if c.shape != (length, state):
        raise DimensionError("readout must be (M, N)", c.shape, a_bar.shape)
    if length == 0:
        raise ContractError("selective scan over an empty sequence")

    a, u = a_bar.data, bx.data
    hidden = np.empty_like(u)
    h = np.zeros(u.shape[1:])
    for t in range(length):
        h = a[t] * h + u[t]
        hidden[t] = h
    out = np.einsum("mdn,mn->md", hidden, c.data)

    def grad_fn(g: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        cd = c.data
        dh_all = np.empty_like(hidden)
        carry = np.zeros(hidden.shape[1:])
        for t in range(length - 1, -1, -1):
            dh = g[t][:, None] * cd[t][None, :] + carry
            dh_all[t] = dh
            carry = a[t] * dh
        previous = np.concatenate([np.zeros((1,) + hidden.shape[1:]), hidden[:-1]], axis=0)
        grad_c = np.einsum("md,mdn->mn", g, hidden)
        return dh_all * previous, dh_all, grad_c

    return apply(out, (a_bar, bx, c), grad_fn)


def selective_scan_discrete(x: Any, a_bar: Any, b_bar: Any, c: Any) -> Tensor:
    """Selective scan from already-discretized parameters.

    ``x`` is (M, D); ``a_bar`` and ``b_bar`` are (M, D, N); ``c`` is (M, N).
    Bypasses the input projections, so fixed parameters can be fed in directly.
    """
    x = ops.as_tensor(x)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ContractError(f"selective scan needs a non-empty (M, D) sequence, got {list(x.shape)}")
    bx = ops.as_tensor(b_bar) * ops.reshape(x, (x.shape[0], x.shape[1], 1))
    return scan_recurrence(a_bar, bx, c)


def naive_selective_scan(x: np.ndarray, a_bar: np.ndarray, b_bar: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Position-by-position, channel-by-channel reference recurrence."""
    x, a_bar, b_bar, c = (np.asarray(v, dtype=np.float64) for v in (x, a_bar, b_bar, c))
    length, width = x.shape
    state = c.shape[1]
    y = np.zeros((length, width))
    for d in range(width):
        h = [0.0] * state
        for t in range(length):
            acc = 0.0
            for n in range(state):
                h[n] = a_bar[t, d, n] * h[n] + b_bar[t, d, n] * x[t, d]
                acc += c[t, n] * h[n]
            y[t, d] = acc
    return y
