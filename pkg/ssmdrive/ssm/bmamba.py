"""
Bidirectional Mamba layer.

Tokens are permuted into scan order, normalised and projected to an inner
stream x and a gate z. The forward and backward directions each run their
own selective SSM over SiLU(x) (the backward one over the reversed sequence),
are gated by SiLU(z) and averaged; the result is projected back, added to the
input and un-permuted.
"""

from __future__ import annotations

import numpy as np

from ..errors import ContractError, DimensionError
from ..scan.orders import ScanOrder
from ..tensor import LayerNorm, Linear, Module, Tensor, ops
from .selective import SsmParams, selective_scan


class BMambaLayer(Module):
    def __init__(
        self,
        width: int,
        rng: np.random.Generator,
        state: int = 8,
        expand: int = 2,
        dt_rank: int | None = None,
    ) -> None:
        self.width = width
        self.inner = expand * width
        self.norm = LayerNorm(width)
        self.in_proj = Linear(width, 2 * self.inner, rng, bias=False)
        self.forward_ssm = SsmParams(self.inner, state, rng, dt_rank)
        self.backward_ssm = SsmParams(self.inner, state, rng, dt_rank)
        self.out_proj = Linear(self.inner, width, rng, bias=False)

    def _direction(self, params: SsmParams, x: Tensor) -> Tensor:
        return selective_scan(x, params) + x * params.d_skip

    def mix(self, seq: Tensor) -> Tensor:
        """The layer on a sequence that is already in scan order."""
        length = seq.shape[0]
        xz = self.in_proj(self.norm(seq))
        x = ops.silu(xz[:, : self.inner])
        gate = ops.silu(xz[:, self.inner :])
        reverse = np.arange(length - 1, -1, -1)
        fwd = self._direction(self.forward_ssm, x)
        bwd = ops.take(self._direction(self.backward_ssm, ops.take(x, reverse)), reverse)
        return seq + self.out_proj((fwd + bwd) * gate * 0.5)

    def forward(self, tokens: Tensor, order: ScanOrder | None = None) -> Tensor:
        """Apply the layer to (M, C) token embeddings under ``order``.

        Args:
            tokens: Token embeddings in storage order.
            order: Scan order over the M tokens; identity when omitted.

        Returns:
            Updated embeddings, back in storage order.
        """
        tokens = ops.as_tensor(tokens)
        if tokens.ndim != 2 or tokens.shape[1] != self.width:
            raise DimensionError("B-Mamba input must be (M, C)", tokens.shape, (self.width,))
        if tokens.shape[0] == 0:
            raise ContractError("B-Mamba layer over an empty token sequence")
        if order is None:
            return self.mix(tokens)
        if len(order) != tokens.shape[0]:
            raise ContractError(f"scan order covers {len(order)} tokens, sequence has {tokens.shape[0]}")
        return ops.take(self.mix(ops.take(tokens, order.perm)), order.inv)
