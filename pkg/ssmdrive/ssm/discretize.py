"""
Zero-order-hold discretization of a diagonal continuous-time SSM.

For a diagonal state matrix the exact hold solution is elementwise:

    a_bar = exp(delta * a)
    b_bar = (exp(delta * a) - 1) / (delta * a) * delta * b

The ratio (e^z - 1) / z is evaluated by its series near z = 0.
"""

from __future__ import annotations

from typing import Any

import numpy as np

from ..errors import ContractError
from ..tensor import Tensor, apply, ops

SERIES_THRESHOLD = 1e-6


def expm1_ratio_values(z: np.ndarray) -> np.ndarray:
    """(e^z - 1) / z, with the limit 1 + z/2 for |z| < 1e-6."""
    z = np.asarray(z, dtype=np.float64)
    small = np.abs(z) < SERIES_THRESHOLD
    safe = np.where(small, 1.0, z)
    return np.where(small, 1.0 + 0.5 * z, np.expm1(safe) / safe)


def _expm1_ratio_slope(z: np.ndarray, ratio: np.ndarray) -> np.ndarray:
    # d/dz (e^z - 1)/z = (e^z - ratio) / z
    small = np.abs(z) < SERIES_THRESHOLD
    safe = np.where(small, 1.0, z)
    return np.where(small, 0.5 + z / 3.0, (np.exp(safe) - ratio) / safe)


def expm1_ratio(z: Any) -> Tensor:
    z = ops.as_tensor(z)
    out = expm1_ratio_values(z.data)
    return apply(out, (z,), lambda g: (g * _expm1_ratio_slope(z.data, out),))


def zoh_discretize(a: Any, b: Any, delta: Any) -> tuple[Tensor, Tensor]:
    """Discretize (a, b) under time-scale ``delta``; inputs broadcast elementwise.

    Args:
        a: Diagonal of the continuous state matrix (negative).
        b: Input projection.
        delta: Non-negative time-scale.

    Returns:
        (a_bar, b_bar) as tensors of the broadcast shape.
    """
    a, b, delta = ops.as_tensor(a), ops.as_tensor(b), ops.as_tensor(delta)
    if np.any(delta.data < 0):
        raise ContractError("zoh_discretize needs delta >= 0")
    delta_a = delta * a
    a_bar = ops.exp(delta_a)
    b_bar = expm1_ratio(delta_a) * delta * b
    return a_bar, b_bar
