"""Building-model LiDAR simulation: rasterization, coverage, scanning, drift."""

from .coverage import coverage_path, eroded_free_mask, load_goals, save_goals, subsample_goals
from .lidar import SENSOR_HEIGHT, LidarSpec, raycast_scan
from .occupancy import FREE, OCCUPIED, UNKNOWN, OccupancyGrid, rasterize
from .sessions import (
    DriftModel,
    apply_global_offset,
    inject_drift,
    interpolate_goals,
    simulate_session,
)

__all__ = [
    "FREE",
    "OCCUPIED",
    "UNKNOWN",
    "SENSOR_HEIGHT",
    "DriftModel",
    "LidarSpec",
    "OccupancyGrid",
    "apply_global_offset",
    "coverage_path",
    "eroded_free_mask",
    "inject_drift",
    "interpolate_goals",
    "load_goals",
    "rasterize",
    "raycast_scan",
    "save_goals",
    "simulate_session",
    "subsample_goals",
]
