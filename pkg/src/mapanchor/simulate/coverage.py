"""Wavefront coverage planning over occupancy grids.

The sweep repeatedly walks to the nearest not-yet-visited cell of the eroded
free space (breadth-first distance, scanline tie-break), which yields the
classic boustrophedon-like wavefront coverage order and an adjacent-step path.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from scipy import ndimage

from ..exceptions import FormatError, NoInterior
from .occupancy import FREE, OccupancyGrid

_NEIGHBORS = ((1, 0), (-1, 0), (0, 1), (0, -1))


def eroded_free_mask(grid: OccupancyGrid, clearance: float) -> np.ndarray:
    """Free cells whose center keeps at least ``clearance`` metres of free space around it."""
    free = grid.cells == FREE
    if clearance <= 0:
        return free
    dist = ndimage.distance_transform_edt(free) * grid.resolution
    return free & (dist >= clearance)


def _bfs_nearest_unvisited(
    start: tuple[int, int], traversable: np.ndarray, visited: np.ndarray
) -> list[tuple[int, int]] | None:
    """Shortest 4-connected path from start to the nearest unvisited traversable
    cell; ties at equal distance resolve by (ix, iy) scanline order."""
    nx, ny = traversable.shape
    parent = {start: None}
    frontier = [start]
    while frontier:
        goals = [c for c in frontier if not visited[c]]
        if goals:
            target = min(goals)
            path = []
            cur = target
            while cur is not None:
                path.append(cur)
                cur = parent[cur]
            return path[::-1]
        nxt = []
        for cx, cy in frontier:
            for dx, dy in _NEIGHBORS:
                nb = (cx + dx, cy + dy)
                if 0 <= nb[0] < nx and 0 <= nb[1] < ny and traversable[nb] and nb not in parent:
                    parent[nb] = (cx, cy)
                    nxt.append(nb)
        frontier = sorted(nxt)
    return None


def coverage_path(
    grid: OccupancyGrid, start: tuple[int, int] | None = None, clearance: float = 0.0
) -> np.ndarray:
    """Sweep the eroded free space starting from ``start``.

    Returns an (N, 3) array of world-frame ``x y yaw`` waypoints at cell
    centers, consecutive waypoints one cell apart, covering every reachable
    eroded-free cell.  With no start given, begins at the first free cell in
    scanline order.  Raises NoInterior when erosion leaves nothing.
    """
    mask = eroded_free_mask(grid, clearance)
    if not mask.any():
        raise NoInterior("no free cells survive the clearance erosion")
    if start is None:
        ix, iy = np.nonzero(grid.cells == FREE)
        order = np.lexsort((iy, ix))
        start = (int(ix[order[0]]), int(iy[order[0]]))
    start = (int(start[0]), int(start[1]))
    nx, ny = grid.shape
    if not (0 <= start[0] < nx and 0 <= start[1] < ny) or grid.cells[start] != FREE:
        raise ValueError(f"start cell {start} is not free")
    if not mask[start]:
        start = _snap_to_mask(start, mask)

    visited = np.zeros_like(mask)
    visited[start] = True
    cells = [start]
    cur = start
    while True:
        hop = _bfs_nearest_unvisited(cur, mask, visited)
        if hop is None:
            break
        for c in hop[1:]:
            visited[c] = True
            cells.append(c)
        cur = cells[-1]

    xy = grid.cell_center([c[0] for c in cells], [c[1] for c in cells])
    return _with_headings(np.atleast_2d(xy))


def _snap_to_mask(start: tuple[int, int], mask: np.ndarray) -> tuple[int, int]:
    """Nearest surviving cell to a start that the erosion removed."""
    ix, iy = np.nonzero(mask)
    d2 = (ix - start[0]) ** 2 + (iy - start[1]) ** 2
    order = np.lexsort((iy, ix, d2))
    return int(ix[order[0]]), int(iy[order[0]])


def _with_headings(xy: np.ndarray) -> np.ndarray:
    n = len(xy)
    yaw = np.zeros(n)
    if n > 1:
        diff = np.diff(xy, axis=0)
        seg = np.arctan2(diff[:, 1], diff[:, 0])
        yaw[:-1] = seg
        yaw[-1] = seg[-1]
    return np.column_stack([xy, yaw])


def subsample_goals(waypoints: np.ndarray, stride: int = 20) -> np.ndarray:
    """Keep every stride-th waypoint plus the final one, headings toward successors."""
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    waypoints = np.atleast_2d(np.asarray(waypoints, dtype=float))
    n = len(waypoints)
    if n == 0:
        raise ValueError("waypoint list is empty")
    idx = list(range(0, n, stride))
    if idx[-1] != n - 1:
        idx.append(n - 1)
    goals = waypoints[idx, :2]
    yaw = np.zeros(len(goals))
    for k in range(len(goals)):
        if k + 1 < len(goals) and not np.allclose(goals[k + 1], goals[k]):
            d = goals[k + 1] - goals[k]
            yaw[k] = np.arctan2(d[1], d[0])
        elif k > 0:
            yaw[k] = yaw[k - 1]
    return np.column_stack([goals, yaw])


def save_goals(goals: np.ndarray, path: str | Path) -> None:
    lines = [f"{g[0]:.9g} {g[1]:.9g} {g[2]:.9g}" for g in np.atleast_2d(goals)]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def load_goals(path: str | Path) -> np.ndarray:
    rows = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if len(tokens) != 3:
            raise FormatError("goal line needs x y yaw", str(path), lineno)
        try:
            rows.append([float(t) for t in tokens])
        except ValueError as err:
            raise FormatError(f"malformed goal line: {err}", str(path), lineno)
    return np.array(rows).reshape(-1, 3)
