"""Spinning-LiDAR simulation by ray casting against triangle meshes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..mesh import TriangleMesh
from ..se3 import Pose

SENSOR_HEIGHT = 0.5


@dataclass(frozen=True)
class LidarSpec:
    """Scanner geometry: evenly spaced channels over a vertical field of view,
    evenly spaced azimuth steps over a full turn."""

    channels: int = 16
    vertical_fov: tuple[float, float] = (-15.0, 15.0)
    horizontal_steps: int = 900
    max_range: float = 30.0
    noise_sigma: float = 0.01

    def __post_init__(self):
        if self.channels < 1:
            raise ValueError(f"channels must be >= 1, got {self.channels}")
        if self.horizontal_steps < 1:
            raise ValueError(f"horizontal_steps must be >= 1, got {self.horizontal_steps}")
        if not self.max_range > 0:
            raise ValueError(f"max_range must be positive, got {self.max_range}")
        if self.noise_sigma < 0:
            raise ValueError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if self.vertical_fov[0] > self.vertical_fov[1]:
            raise ValueError(f"vertical_fov min exceeds max: {self.vertical_fov}")

    def directions(self) -> np.ndarray:
        """Unit ray directions in the sensor frame, azimuth-major then channel."""
        lo, hi = np.radians(self.vertical_fov[0]), np.radians(self.vertical_fov[1])
        if self.channels == 1:
            elev = np.array([(lo + hi) / 2])
        else:
            elev = np.linspace(lo, hi, self.channels)
        az = np.arange(self.horizontal_steps) * (2 * np.pi / self.horizontal_steps)
        ce, se = np.cos(elev), np.sin(elev)
        ca, sa = np.cos(az), np.sin(az)
        dirs = np.empty((self.horizontal_steps, self.channels, 3))
        dirs[:, :, 0] = ca[:, None] * ce[None, :]
        dirs[:, :, 1] = sa[:, None] * ce[None, :]
        dirs[:, :, 2] = se[None, :]
        return dirs.reshape(-1, 3)


def _ray_mesh_ranges(
    origin: np.ndarray, dirs: np.ndarray, mesh: TriangleMesh, max_range: float
) -> np.ndarray:
    """Distance to the nearest triangle per ray (inf when missed)."""
    best = np.full(len(dirs), np.inf)
    tris = mesh.triangles()
    if len(tris) == 0:
        return best
    v0 = tris[:, 0]
    e1 = tris[:, 1] - tris[:, 0]
    e2 = tris[:, 2] - tris[:, 0]
    # One shared origin lets the s and q terms collapse to per-triangle constants.
    s = origin[None, :] - v0
    q = np.cross(s, e1)
    t_num = np.einsum("tk,tk->t", e2, q)

    chunk = max(1, 2_000_000 // max(len(tris), 1))
    for a in range(0, len(dirs), chunk):
        d = dirs[a : a + chunk]
        h = np.cross(d[:, None, :], e2[None, :, :])
        det = np.einsum("tk,rtk->rt", e1, h)
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = 1.0 / det
            u = np.einsum("tk,rtk->rt", s, h) * inv
            v = (d @ q.T) * inv
            t = t_num[None, :] * inv
            # comparisons stay inside errstate: NaNs from parallel rays are fine
            valid = (
                (np.abs(det) > 1e-12)
                & (u >= 0.0)
                & (u <= 1.0)
                & (v >= 0.0)
                & (u + v <= 1.0)
                & (t > 1e-6)
                & (t <= max_range)
            )
        t = np.where(valid, t, np.inf)
        best[a : a + chunk] = t.min(axis=1)
    return best


def raycast_scan(
    model: TriangleMesh,
    pose: Pose,
    spec: LidarSpec | None = None,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Simulate one scan from the sensor pose.

    Returns hit points in the sensor frame with Gaussian range noise; rays
    that miss every triangle within max_range produce no point.
    """
    spec = spec or LidarSpec()
    rng = rng if rng is not None else np.random.default_rng(0)
    dirs_sensor = spec.directions()
    dirs_world = dirs_sensor @ pose.rotation_matrix().T
    ranges = _ray_mesh_ranges(pose.t, dirs_world, model, spec.max_range)
    hit = np.isfinite(ranges)
    r = ranges[hit]
    if spec.noise_sigma > 0:
        r = r + rng.normal(0.0, spec.noise_sigma, size=len(r))
    return dirs_sensor[hit] * r[:, None]
