"""
Selective SSM parameters (S6).

A is diagonal and stored as ``a_log`` so that A = -exp(a_log) stays strictly
negative; Δ, B and C are computed from the input at every position.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import DimensionError
from ..tensor import Linear, Module, Parameter, Tensor, ops
from .discretize import zoh_discretize
from .scan import scan_recurrence

DT_MIN = 1e-3
DT_MAX = 1e-1


def default_dt_rank(width: int) -> int:
    return max(1, math.ceil(width / 16))


class SsmParams(Module):
    """Per-direction selective-scan parameters for a channel width D and state N."""

    def __init__(self, width: int, state: int, rng: np.random.Generator, dt_rank: int | None = None) -> None:
        self.width = width
        self.state = state
        self.dt_rank = dt_rank or default_dt_rank(width)
        # S4D-real initialisation: A_n = -(n + 1) on every channel.
        self.a_log = Parameter(np.log(np.tile(np.arange(1, state + 1, dtype=np.float64), (width, 1))))
        self.delta_down = Linear(width, self.dt_rank, rng, bias=False)
        self.delta_proj = Linear(self.dt_rank, width, rng)
        dt = np.exp(rng.uniform(math.log(DT_MIN), math.log(DT_MAX), size=width))
        # inverse softplus, so softplus(bias) == dt at init
        self.delta_proj.bias = Parameter(dt + np.log(-np.expm1(-dt)))
        self.b_proj = Linear(width, state, rng, bias=False)
        self.c_proj = Linear(width, state, rng, bias=False)
        self.d_skip = Parameter(np.ones(width))

    @property
    def a(self) -> Tensor:
        return -ops.exp(self.a_log)

    def select(self, x: Tensor) -> tuple[Tensor, Tensor, Tensor]:
        """Return (delta (M, D), B (M, N), C (M, N)) for the sequence ``x``."""
        delta = ops.softplus(self.delta_proj(self.delta_down(x)))
        return delta, self.b_proj(x), self.c_proj(x)


def selective_scan(x: Tensor, params: SsmParams) -> Tensor:
    """y_t = C_t . h_t over an (M, D) sequence with input-dependent Δ, B, C."""
    x = ops.as_tensor(x)
    if x.ndim != 2 or x.shape[1] != params.width:
        raise DimensionError("selective_scan input must be (M, D)", x.shape, (params.width,))
    length, width = x.shape
    delta, b, c = params.select(x)
    a_bar, b_bar = zoh_discretize(
        ops.reshape(params.a, (1, width, params.state)),
        ops.reshape(b, (length, 1, params.state)),
        ops.reshape(delta, (length, width, 1)),
    )
    return scan_recurrence(a_bar, b_bar * ops.reshape(x, (length, width, 1)), c)
