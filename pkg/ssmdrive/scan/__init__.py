"""Token serialization for the bidirectional scans."""

from .orders import (
    Axis,
    ScanOrder,
    SpiralOrientation,
    TemporalMode,
    axis_order,
    bev_cells,
    ego_local2global_order,
    temporal_order,
    trajectory_local2global_order,
)
from .schedule import LayerScan, ScanSchedule, SpatialStrategy, VclPattern, build_schedule
from .spiral import spiral_index, spiral_indices
from .trajectory import DENSE_WAYPOINTS, path_distances, resample_polyline, resample_waypoints, trajectory_importance

__all__ = [
    "DENSE_WAYPOINTS",
    "Axis",
    "LayerScan",
    "ScanOrder",
    "ScanSchedule",
    "SpatialStrategy",
    "SpiralOrientation",
    "TemporalMode",
    "VclPattern",
    "axis_order",
    "bev_cells",
    "build_schedule",
    "ego_local2global_order",
    "path_distances",
    "resample_polyline",
    "resample_waypoints",
    "spiral_index",
    "spiral_indices",
    "temporal_order",
    "trajectory_importance",
    "trajectory_local2global_order",
]
