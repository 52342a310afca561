"""Synthetic building models for demos and tests."""

from __future__ import annotations

import numpy as np

from .mesh import TriangleMesh


class _Builder:
    def __init__(self):
        self.verts: list[np.ndarray] = []
        self.faces: list[list[int]] = []

    def quad(self, a, b, c, d) -> None:
        base = len(self.verts)
        self.verts += [np.asarray(a, float), np.asarray(b, float), np.asarray(c, float), np.asarray(d, float)]
        self.faces += [[base, base + 1, base + 2], [base, base + 2, base + 3]]

    def wall_x(self, x: float, y0: float, y1: float, z0: float, z1: float) -> None:
        self.quad((x, y0, z0), (x, y1, z0), (x, y1, z1), (x, y0, z1))

    def wall_y(self, y: float, x0: float, x1: float, z0: float, z1: float) -> None:
        self.quad((x0, y, z0), (x1, y, z0), (x1, y, z1), (x0, y, z1))

    def slab(self, z: float, x0: float, x1: float, y0: float, y1: float) -> None:
        self.quad((x0, y0, z), (x1, y0, z), (x1, y1, z), (x0, y1, z))

    def mesh(self) -> TriangleMesh:
        return TriangleMesh(np.array(self.verts), np.array(self.faces))


def box_shell(lo, hi) -> TriangleMesh:
    """Closed axis-aligned box: four walls, floor, and ceiling (12 triangles)."""
    lo = np.asarray(lo, float)
    hi = np.asarray(hi, float)
    b = _Builder()
    b.wall_x(lo[0], lo[1], hi[1], lo[2], hi[2])
    b.wall_x(hi[0], lo[1], hi[1], lo[2], hi[2])
    b.wall_y(lo[1], lo[0], hi[0], lo[2], hi[2])
    b.wall_y(hi[1], lo[0], hi[0], lo[2], hi[2])
    b.slab(lo[2], lo[0], hi[0], lo[1], hi[1])
    b.slab(hi[2], lo[0], hi[0], lo[1], hi[1])
    return b.mesh()


def box_room(size: float = 4.0, height: float = 3.0) -> TriangleMesh:
    """Square room centered on the origin with the floor at z=0."""
    h = size / 2
    return box_shell((-h, -h, 0.0), (h, h, height))


def walls_only_box(size: float = 4.0, height: float = 3.0) -> TriangleMesh:
    """Four walls without floor or ceiling, centered on the origin."""
    h = size / 2
    b = _Builder()
    b.wall_x(-h, -h, h, 0.0, height)
    b.wall_x(h, -h, h, 0.0, height)
    b.wall_y(-h, -h, h, 0.0, height)
    b.wall_y(h, -h, h, 0.0, height)
    return b.mesh()


def two_room_model(
    width: float = 20.0,
    depth: float = 15.0,
    height: float = 3.0,
    door: tuple[float, float] = (6.0, 9.0),
) -> TriangleMesh:
    """Two rooms separated by a wall at x = width/2 with a door gap in y."""
    b = _Builder()
    b.wall_x(0.0, 0.0, depth, 0.0, height)
    b.wall_x(width, 0.0, depth, 0.0, height)
    b.wall_y(0.0, 0.0, width, 0.0, height)
    b.wall_y(depth, 0.0, width, 0.0, height)
    mid = width / 2
    y0, y1 = door
    if y0 > 0:
        b.wall_x(mid, 0.0, y0, 0.0, height)
    if y1 < depth:
        b.wall_x(mid, y1, depth, 0.0, height)
    b.slab(0.0, 0.0, width, 0.0, depth)
    b.slab(height, 0.0, width, 0.0, depth)
    return b.mesh()


def box_obstacle(center, size: float = 0.5, lift: float = 0.0) -> TriangleMesh:
    """Small closed box for change-detection scenarios.

    Sits on the floor by default; ``lift`` raises it so every face clears the
    floor (a grounded box hides its bottom face inside the floor band).
    """
    cx, cy = float(center[0]), float(center[1])
    h = size / 2
    return box_shell((cx - h, cy - h, lift), (cx + h, cy + h, lift + size))
