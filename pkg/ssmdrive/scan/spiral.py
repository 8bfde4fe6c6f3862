"""
Concentric-ring spiral indexing of an n-by-n grid.

Ring l is the distance of a cell to the nearest border. Cells are numbered
ring by ring from the border inwards; inside a ring the walk runs up the
x = l edge, along y = n-1-l, down x = n-1-l and back along y = l.
"""

from __future__ import annotations

import numpy as np

from ..errors import ContractError


def spiral_index(x: int, y: int, n: int) -> int:
    if not (0 <= x < n and 0 <= y < n):
        raise ContractError(f"cell ({x}, {y}) lies outside a {n}x{n} grid")
    ring = min(x, y, n - 1 - x, n - 1 - y)
    side = n - 1 - 2 * ring
    base = 4 * ring * (n - ring)
    if x == ring:
        return base + (y - ring)
    if y == n - 1 - ring:
        return base + side + (x - ring)
    if x == n - 1 - ring:
        return base + 2 * side + (n - 1 - ring - y)
    return base + 3 * side + (n - 1 - ring - x)


def spiral_indices(x: np.ndarray, y: np.ndarray, n: int) -> np.ndarray:
    """Vectorised ``spiral_index`` for integer cell arrays."""
    x = np.asarray(x, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    if np.any((x < 0) | (x >= n) | (y < 0) | (y >= n)):
        raise ContractError(f"cells outside a {n}x{n} grid")
    ring = np.minimum(np.minimum(x, y), np.minimum(n - 1 - x, n - 1 - y))
    side = n - 1 - 2 * ring
    base = 4 * ring * (n - ring)
    return np.select(
        [x == ring, y == n - 1 - ring, x == n - 1 - ring],
        [base + (y - ring), base + side + (x - ring), base + 2 * side + (n - 1 - ring - y)],
        default=base + 3 * side + (n - 1 - ring - x),
    )
