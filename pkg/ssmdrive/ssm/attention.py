"""
Quadratic self-attention reference layer of the same width as ``BMambaLayer``.

Only used by the scaling benchmark: pre-norm, single-head scaled dot-product
attention over the whole sequence, output projection and residual.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import DimensionError
from ..tensor import LayerNorm, Linear, Module, Tensor, ops


class SelfAttentionLayer(Module):
    def __init__(self, width: int, rng: np.random.Generator) -> None:
        self.width = width
        self.norm = LayerNorm(width)
        self.q_proj = Linear(width, width, rng, bias=False)
        self.k_proj = Linear(width, width, rng, bias=False)
        self.v_proj = Linear(width, width, rng, bias=False)
        self.out_proj = Linear(width, width, rng, bias=False)

    def forward(self, tokens: Tensor) -> Tensor:
        tokens = ops.as_tensor(tokens)
        if tokens.ndim != 2 or tokens.shape[1] != self.width:
            raise DimensionError("attention input must be (M, C)", tokens.shape, (self.width,))
        h = self.norm(tokens)
        q, k, v = self.q_proj(h), self.k_proj(h), self.v_proj(h)
        scores = ops.matmul(q, k.T) * (1.0 / math.sqrt(self.width))
        return tokens + self.out_proj(ops.matmul(ops.softmax(scores, axis=-1), v))
