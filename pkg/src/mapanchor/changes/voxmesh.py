"""Cube meshing of clustered points on a fixed voxel grid.

The grid is anchored at the world origin (cell = floor(p / voxel)), so the
mesh for a given point set never depends on its bounding box.  Faces between
two occupied voxels are dropped; each face-connected voxel component gets its
own vertex pool, which keeps every component a closed 2-manifold even when
two components touch along an edge or corner.
"""

from __future__ import annotations

import numpy as np

from ..mesh import TriangleMesh
from ..validation import as_points, check_positive

# For each face: outward axis step and the 4 corner offsets in CCW order
# viewed from outside.
_FACES = (
    ((1, 0, 0), ((1, 0, 0), (1, 1, 0), (1, 1, 1), (1, 0, 1))),
    ((-1, 0, 0), ((0, 0, 0), (0, 0, 1), (0, 1, 1), (0, 1, 0))),
    ((0, 1, 0), ((0, 1, 0), (0, 1, 1), (1, 1, 1), (1, 1, 0))),
    ((0, -1, 0), ((0, 0, 0), (1, 0, 0), (1, 0, 1), (0, 0, 1))),
    ((0, 0, 1), ((0, 0, 1), (1, 0, 1), (1, 1, 1), (0, 1, 1))),
    ((0, 0, -1), ((0, 0, 0), (0, 1, 0), (1, 1, 0), (1, 0, 0))),
)


def occupied_cells(points: np.ndarray, voxel: float) -> np.ndarray:
    pts = as_points(points, "cluster", min_points=1)
    check_positive(voxel, "voxel")
    cells = np.floor(pts / voxel).astype(np.int64)
    return np.unique(cells, axis=0)


def _components(cells: np.ndarray) -> list[list[tuple[int, int, int]]]:
    index = {tuple(c): i for i, c in enumerate(cells)}
    parent = np.arange(len(cells))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for cell, i in index.items():
        for axis in range(3):
            nb = list(cell)
            nb[axis] += 1
            j = index.get(tuple(nb))
            if j is not None:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)

    groups: dict[int, list[tuple[int, int, int]]] = {}
    for cell, i in index.items():
        groups.setdefault(find(i), []).append(cell)
    return [sorted(groups[r]) for r in sorted(groups)]


def voxel_mesh(points: np.ndarray, voxel: float = 0.1) -> TriangleMesh:
    """Surface mesh of the voxels occupied by the points."""
    cells = occupied_cells(points, voxel)
    occupied = set(map(tuple, cells))

    vertices: list[tuple[float, float, float]] = []
    faces: list[tuple[int, int, int]] = []
    for component in _components(cells):
        corner_index: dict[tuple[int, int, int], int] = {}
        for cell in component:
            for step, corners in _FACES:
                neighbor = (cell[0] + step[0], cell[1] + step[1], cell[2] + step[2])
                if neighbor in occupied:
                    continue
                quad = []
                for off in corners:
                    corner = (cell[0] + off[0], cell[1] + off[1], cell[2] + off[2])
                    if corner not in corner_index:
                        corner_index[corner] = len(vertices)
                        vertices.append(
                            (corner[0] * voxel, corner[1] * voxel, corner[2] * voxel)
                        )
                    quad.append(corner_index[corner])
                faces.append((quad[0], quad[1], quad[2]))
                faces.append((quad[0], quad[2], quad[3]))

    return TriangleMesh(
        vertices=np.asarray(vertices, dtype=np.float64),
        faces=np.asarray(faces, dtype=np.int64).reshape(-1, 3),
    )
