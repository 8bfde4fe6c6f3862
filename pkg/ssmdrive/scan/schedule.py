"""
Per-layer scan schedule.

The hybrid default alternates horizontal- and vertical-first scans for view
correspondence across consecutive layers, uses the trajectory-centric order
for task relations and the spatial-first order for temporal fusion.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .orders import Axis, TemporalMode


class SpatialStrategy(str, Enum):
    HORIZONTAL = "horizontal"
    VERTICAL = "vertical"
    EGO_SPIRAL = "ego_spiral"
    TRAJECTORY = "trajectory"


class VclPattern(str, Enum):
    HYBRID = "hybrid"
    HORIZONTAL = "horizontal"
    VERTICAL = "vertical"
    EGO_SPIRAL = "ego_spiral"
    TRAJECTORY = "trajectory"


@dataclass(frozen=True)
class LayerScan:
    vcl: SpatialStrategy
    trm: SpatialStrategy
    ltf: TemporalMode


@dataclass(frozen=True)
class ScanSchedule:
    layers: tuple[LayerScan, ...]

    def __len__(self) -> int:
        return len(self.layers)

    def __getitem__(self, i: int) -> LayerScan:
        return self.layers[i]


def build_schedule(
    num_layers: int,
    vcl: VclPattern | str = VclPattern.HYBRID,
    trm: SpatialStrategy | str = SpatialStrategy.TRAJECTORY,
    ltf: TemporalMode | str = TemporalMode.SPATIAL_FIRST,
) -> ScanSchedule:
    pattern = VclPattern(vcl)
    layers = []
    for i in range(num_layers):
        if pattern is VclPattern.HYBRID:
            vcl_i = SpatialStrategy(Axis.HORIZONTAL.value if i % 2 == 0 else Axis.VERTICAL.value)
        else:
            vcl_i = SpatialStrategy(pattern.value)
        layers.append(LayerScan(vcl=vcl_i, trm=SpatialStrategy(trm), ltf=TemporalMode(ltf)))
    return ScanSchedule(tuple(layers))
