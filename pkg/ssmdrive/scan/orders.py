"""
Scan Orders

Every strategy returns a ``ScanOrder``: ``perm[slot]`` is the token placed at
sequence position ``slot`` and ``inv`` undoes it. All sorts are stable with
the token index as the final key, so the result does not depend on how the
tokens happened to be stored.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from ..errors import ContractError
from ..tokens.types import PerceptionRange, TokenKind
from .spiral import spiral_indices


class Axis(str, Enum):
    HORIZONTAL = "horizontal"
    VERTICAL = "vertical"


class TemporalMode(str, Enum):
    SPATIAL_FIRST = "spatial_first"
    TEMPORAL_FIRST = "temporal_first"


class SpiralOrientation(str, Enum):
    CENTER_FIRST = "center_first"
    BORDER_FIRST = "border_first"


@dataclass(frozen=True)
class ScanOrder:
    perm: np.ndarray
    inv: np.ndarray

    @classmethod
    def from_perm(cls, perm: np.ndarray) -> ScanOrder:
        perm = np.asarray(perm, dtype=np.int64)
        n = len(perm)
        if perm.ndim != 1 or not np.array_equal(np.sort(perm), np.arange(n)):
            raise ContractError("scan order is not a permutation")
        inv = np.empty(n, dtype=np.int64)
        inv[perm] = np.arange(n)
        return cls(perm, inv)

    @classmethod
    def identity(cls, n: int) -> ScanOrder:
        return cls(np.arange(n, dtype=np.int64), np.arange(n, dtype=np.int64))

    def __len__(self) -> int:
        return len(self.perm)

    def is_valid(self) -> bool:
        n = len(self.perm)
        return (
            len(self.inv) == n
            and np.array_equal(np.sort(self.perm), np.arange(n))
            and np.array_equal(self.inv[self.perm], np.arange(n))
        )


def _lexsort(*keys: np.ndarray) -> ScanOrder:
    """Sort by keys[0], then keys[1], ..., then token index."""
    n = len(keys[0]) if keys else 0
    index = np.arange(n)
    # np.lexsort treats the last key as primary
    return ScanOrder.from_perm(np.lexsort((index, *reversed(keys))))


def bev_cells(xy: np.ndarray, grid: int, bev: PerceptionRange) -> tuple[np.ndarray, np.ndarray]:
    """Bin BEV points into a grid-by-grid raster; points outside are clamped to the border."""
    xy = np.asarray(xy, dtype=np.float64).reshape(-1, 2)
    ex, ey = bev.extent
    cx = np.floor((xy[:, 0] - bev.x_min) / ex * grid).astype(np.int64)
    cy = np.floor((xy[:, 1] - bev.y_min) / ey * grid).astype(np.int64)
    return np.clip(cx, 0, grid - 1), np.clip(cy, 0, grid - 1)


def axis_order(xy: np.ndarray, axis: Axis | str) -> ScanOrder:
    """Horizontal-first sorts by x then y; vertical-first by y then x."""
    xy = np.asarray(xy, dtype=np.float64).reshape(-1, 2)
    if Axis(axis) is Axis.HORIZONTAL:
        return _lexsort(xy[:, 0], xy[:, 1])
    return _lexsort(xy[:, 1], xy[:, 0])


def ego_local2global_order(
    xy: np.ndarray,
    grid: int = 50,
    bev: PerceptionRange | None = None,
    orientation: SpiralOrientation | str = SpiralOrientation.CENTER_FIRST,
) -> ScanOrder:
    """Spiral traversal of the BEV grid; cells around the ego come first by default."""
    cx, cy = bev_cells(xy, grid, bev or PerceptionRange())
    k = spiral_indices(cx, cy, grid)
    if SpiralOrientation(orientation) is SpiralOrientation.CENTER_FIRST:
        k = grid * grid - 1 - k
    return _lexsort(k)


def temporal_order(
    xy: np.ndarray,
    timestamps: np.ndarray,
    mode: TemporalMode | str = TemporalMode.SPATIAL_FIRST,
    grid: int = 50,
    bev: PerceptionRange | None = None,
) -> ScanOrder:
    """Order a multi-frame token set.

    Spatial-first sorts every frame spatially and stacks frames oldest to
    newest. Temporal-first groups tokens by BEV cell and walks each cell's
    history before moving to the next cell.
    """
    xy = np.asarray(xy, dtype=np.float64).reshape(-1, 2)
    t = np.asarray(timestamps, dtype=np.int64)
    if TemporalMode(mode) is TemporalMode.SPATIAL_FIRST:
        return _lexsort(t, xy[:, 0], xy[:, 1])
    cx, cy = bev_cells(xy, grid, bev or PerceptionRange())
    return _lexsort(cx, cy, t, xy[:, 0], xy[:, 1])


def trajectory_local2global_order(
    kinds: np.ndarray, importance: np.ndarray, descending: bool = True
) -> ScanOrder:
    """Ego and waypoint tokens first, then the rest by importance.

    Args:
        kinds: (n,) TokenKind values of the task tokens.
        importance: (n,) weights; entries of the ego block are ignored.
        descending: Put the most important (closest in-path) queries first.
    """
    kinds = np.asarray(kinds, dtype=np.int64)
    importance = np.asarray(importance, dtype=np.float64)
    if importance.shape != kinds.shape:
        raise ContractError("importance and kinds must align")
    ego_block = np.isin(kinds, [TokenKind.EGO, TokenKind.WAYPOINT])
    # ego first, then waypoints in index order
    block_rank = np.where(kinds == TokenKind.EGO, 0, np.where(ego_block, 1, 2))
    key = np.where(ego_block, 0.0, -importance if descending else importance)
    return _lexsort(block_rank, key)
