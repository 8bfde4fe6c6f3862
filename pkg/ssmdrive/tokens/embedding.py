"""
Positional Embedding

PE = Linear(Cat(SE(position), SE(age), TE[kind])). SE is a fixed sinusoidal
encoding; sin and cos of each band are interleaved.
"""

from __future__ import annotations

import numpy as np

from ..errors import ContractError
from ..tensor import Linear, Module, Parameter, Tensor, ops
from .types import TokenKind

DEFAULT_BANDS = 32
MIN_WAVELENGTH = 0.5
MAX_WAVELENGTH = 120.0
KIND_WIDTH = 32


def band_wavelengths(bands: int = DEFAULT_BANDS) -> np.ndarray:
    return np.geomspace(MIN_WAVELENGTH, MAX_WAVELENGTH, bands)


def sine_encoding(values: np.ndarray, bands: int = DEFAULT_BANDS) -> np.ndarray:
    """Encode every column of ``values`` (n, k) into (n, k * 2 * bands)."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1:
        values = values[:, None]
    phase = 2.0 * np.pi * values[:, :, None] / band_wavelengths(bands)[None, None, :]
    out = np.empty(phase.shape + (2,))
    out[..., 0] = np.sin(phase)
    out[..., 1] = np.cos(phase)
    return out.reshape(len(values), -1)


class PositionalEmbedding(Module):
    """Spatial, temporal and task-kind embedding projected to the model width."""

    def __init__(self, width: int, rng: np.random.Generator, bands: int = DEFAULT_BANDS) -> None:
        self.bands = bands
        self.kind_table = Parameter(rng.normal(0.0, 0.02, size=(len(TokenKind), KIND_WIDTH)))
        self.proj = Linear(self.raw_width, width, rng)

    @property
    def raw_width(self) -> int:
        return 3 * 2 * self.bands + 2 * self.bands + KIND_WIDTH

    def raw(self, ref_pos: np.ndarray, age: np.ndarray, kind: np.ndarray) -> Tensor:
        """Concatenated pre-projection embedding (n, raw_width)."""
        ref_pos = np.asarray(ref_pos, dtype=np.float64)
        if ref_pos.ndim != 2 or ref_pos.shape[1] != 3 or not np.all(np.isfinite(ref_pos)):
            raise ContractError("positional embedding needs a finite (n, 3) reference position per token")
        fixed = np.concatenate([sine_encoding(ref_pos, self.bands), sine_encoding(age, self.bands)], axis=1)
        kinds = ops.take(self.kind_table, np.asarray(kind, dtype=np.int64))
        return ops.concat([Tensor(fixed), kinds], axis=1)

    def forward(self, ref_pos: np.ndarray, age: np.ndarray, kind: np.ndarray) -> Tensor:
        return self.proj(self.raw(ref_pos, age, kind))
