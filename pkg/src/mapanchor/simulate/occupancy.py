"""Occupancy grids rasterized from building meshes.

A cell is occupied when any model triangle intersects the cell's vertical
prism within a horizontal slice band; the free region is flood-filled from an
interior seed and must be enclosed by occupied cells.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ..exceptions import NoInterior
from ..mesh import TriangleMesh
from ..validation import check_positive

UNKNOWN = 0
FREE = 1
OCCUPIED = 2

_PAD_CELLS = 2


@dataclass(eq=False)
class OccupancyGrid:
    """Cell states indexed ``cells[ix, iy]``; ``origin`` is the min corner of cell (0, 0)."""

    resolution: float
    origin: np.ndarray
    cells: np.ndarray

    def __post_init__(self):
        check_positive(self.resolution, "resolution")
        self.origin = np.asarray(self.origin, dtype=float).reshape(2)
        self.cells = np.asarray(self.cells, dtype=np.int8)
        if self.cells.ndim != 2 or min(self.cells.shape) < 1:
            raise ValueError(f"grid must be at least 1x1, got {self.cells.shape}")

    @property
    def shape(self) -> tuple[int, int]:
        return self.cells.shape

    def cell_center(self, ix, iy) -> np.ndarray:
        return np.stack(
            [
                self.origin[0] + (np.asarray(ix) + 0.5) * self.resolution,
                self.origin[1] + (np.asarray(iy) + 0.5) * self.resolution,
            ],
            axis=-1,
        )

    def world_to_cell(self, x: float, y: float) -> tuple[int, int]:
        ix = int(np.floor((x - self.origin[0]) / self.resolution))
        iy = int(np.floor((y - self.origin[1]) / self.resolution))
        return ix, iy


def _separating_axis(verts: np.ndarray, centers: np.ndarray, half: np.ndarray, axis: np.ndarray):
    """True where ``axis`` separates the triangle from the box at each center."""
    pv = verts @ axis
    pc = centers @ axis
    r = float(np.abs(axis) @ half)
    return (pv.min() - pc > r + 1e-12) | (pc - pv.max() > r + 1e-12)


def _triangle_hits_prisms(verts: np.ndarray, centers: np.ndarray, half: np.ndarray) -> np.ndarray:
    """Exact SAT overlap test of one triangle against many axis-aligned boxes."""
    alive = np.ones(len(centers), dtype=bool)
    edges = [verts[1] - verts[0], verts[2] - verts[1], verts[0] - verts[2]]
    axes = [np.eye(3)[k] for k in range(3)]
    axes.append(np.cross(edges[0], edges[1]))
    for e in edges:
        for u in np.eye(3):
            a = np.cross(e, u)
            if np.linalg.norm(a) > 1e-12:
                axes.append(a)
    for a in axes:
        if not alive.any():
            break
        alive[alive] &= ~_separating_axis(verts, centers[alive], half, a)
    return alive


def rasterize(
    model: TriangleMesh,
    resolution: float,
    slice_z: tuple[float, float] = (0.2, 1.5),
    seed_xy: tuple[float, float] | None = None,
) -> OccupancyGrid:
    """Project a building model into a 2-D occupancy grid.

    ``slice_z`` bounds the horizontal band that counts as an obstacle; the
    free region grows from ``seed_xy`` (model footprint center by default) and
    raises NoInterior when the seed is blocked or the region leaks to the
    grid border, i.e. the model does not enclose it.
    """
    check_positive(resolution, "resolution")
    z0, z1 = float(slice_z[0]), float(slice_z[1])
    if not z0 < z1:
        raise ValueError(f"slice band must satisfy min < max, got ({z0}, {z1})")

    lo, hi = model.bounds()
    origin = lo[:2] - _PAD_CELLS * resolution
    nx = int(np.ceil((hi[0] - lo[0]) / resolution)) + 2 * _PAD_CELLS
    ny = int(np.ceil((hi[1] - lo[1]) / resolution)) + 2 * _PAD_CELLS
    nx, ny = max(nx, 2 * _PAD_CELLS), max(ny, 2 * _PAD_CELLS)
    cells = np.full((nx, ny), UNKNOWN, dtype=np.int8)

    half = np.array([resolution / 2, resolution / 2, (z1 - z0) / 2])
    zc = (z0 + z1) / 2
    for tri in model.triangles():
        if tri[:, 2].max() < z0 or tri[:, 2].min() > z1:
            continue
        ix0 = max(int(np.floor((tri[:, 0].min() - origin[0]) / resolution)), 0)
        ix1 = min(int(np.floor((tri[:, 0].max() - origin[0]) / resolution)), nx - 1)
        iy0 = max(int(np.floor((tri[:, 1].min() - origin[1]) / resolution)), 0)
        iy1 = min(int(np.floor((tri[:, 1].max() - origin[1]) / resolution)), ny - 1)
        if ix1 < ix0 or iy1 < iy0:
            continue
        gx, gy = np.meshgrid(np.arange(ix0, ix1 + 1), np.arange(iy0, iy1 + 1), indexing="ij")
        gx, gy = gx.ravel(), gy.ravel()
        centers = np.column_stack(
            [
                origin[0] + (gx + 0.5) * resolution,
                origin[1] + (gy + 0.5) * resolution,
                np.full(gx.shape, zc),
            ]
        )
        hit = _triangle_hits_prisms(tri, centers, half)
        cells[gx[hit], gy[hit]] = OCCUPIED

    grid = OccupancyGrid(resolution=resolution, origin=origin, cells=cells)
    if seed_xy is None:
        center = 0.5 * (lo + hi)
        seed_xy = (float(center[0]), float(center[1]))
    sx, sy = grid.world_to_cell(*seed_xy)
    if not (0 <= sx < nx and 0 <= sy < ny):
        raise NoInterior(f"seed {seed_xy} lies outside the grid")
    if cells[sx, sy] == OCCUPIED:
        raise NoInterior(f"seed {seed_xy} lies in an occupied cell")

    four = ndimage.generate_binary_structure(2, 1)
    labels, _ = ndimage.label(cells != OCCUPIED, structure=four)
    region = labels == labels[sx, sy]
    touches_border = (
        region[0, :].any() or region[-1, :].any() or region[:, 0].any() or region[:, -1].any()
    )
    if touches_border:
        raise NoInterior("seed region is not enclosed by occupied cells")
    cells[region] = FREE
    return grid
