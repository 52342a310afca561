"""Shared oracles for the test suite.

Everything here is implemented independently of the package internals (brute
force, closed forms, or BFS) so tests compare two routes to the same answer.
"""

from __future__ import annotations

import numpy as np

from mapanchor import se3


def brute_dbscan(points: np.ndarray, eps: float, min_pts: int):
    """O(n^2) DBSCAN reference: pairwise distances, union-find over cores.

    Border points join their nearest core (ties by smallest core coordinate
    tuple), matching the order-invariant rule under test.  Returns a set of
    frozensets of indices plus the noise index set.
    """
    n = len(points)
    if n == 0:
        return set(), frozenset()
    d = np.linalg.norm(points[:, None, :] - points[None, :, :], axis=2)
    within = d <= eps
    core = within.sum(axis=1) >= min_pts

    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        if not core[i]:
            continue
        for j in range(i + 1, n):
            if core[j] and within[i, j]:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)

    assign = {}
    for i in range(n):
        if core[i]:
            assign[i] = find(i)
        else:
            cands = [j for j in range(n) if core[j] and within[i, j]]
            if cands:
                best = min(cands, key=lambda j: (d[i, j], tuple(points[j])))
                assign[i] = find(best)

    groups: dict[int, set] = {}
    for i, root in assign.items():
        groups.setdefault(root, set()).add(i)
    clusters = {frozenset(g) for g in groups.values()}
    noise = frozenset(i for i in range(n) if i not in assign)
    return clusters, noise


def partition_of(clusters) -> set:
    return {frozenset(int(i) for i in c) for c in clusters}


def edge_use_counts(faces: np.ndarray) -> dict[tuple[int, int], int]:
    counts: dict[tuple[int, int], int] = {}
    for a, b, c in faces:
        for u, v in ((a, b), (b, c), (c, a)):
            key = (min(u, v), max(u, v))
            counts[key] = counts.get(key, 0) + 1
    return counts


def assert_closed_manifold(mesh) -> None:
    """Every edge must be shared by exactly two triangles."""
    counts = edge_use_counts(mesh.faces)
    bad = {e: k for e, k in counts.items() if k != 2}
    assert not bad, f"non-manifold edges: {list(bad.items())[:5]}"


def sample_mesh_surface(mesh, per_edge: int = 8) -> np.ndarray:
    """Barycentric grid samples on every triangle, for Hausdorff bounds."""
    out = []
    for tri in mesh.triangles():
        for a in np.linspace(0.0, 1.0, per_edge):
            for b in np.linspace(0.0, 1.0 - a, per_edge):
                out.append(tri[0] + a * (tri[1] - tri[0]) + b * (tri[2] - tri[0]))
    return np.asarray(out)


def max_pin_displacement(reference, solution) -> tuple[float, float]:
    """Largest translation (m) and rotation (deg) any reference pose moved."""
    worst_t = 0.0
    worst_r = 0.0
    for i, stored in enumerate(reference.graph.nodes):
        solved = solution.values[("ref", i)]
        worst_t = max(worst_t, se3.translation_error_m(stored, solved))
        worst_r = max(worst_r, se3.rotation_error_deg(stored, solved))
    anchor = solution.values["ref_anchor"]
    worst_t = max(worst_t, se3.translation_error_m(anchor, se3.Pose.identity()))
    worst_r = max(worst_r, se3.rotation_error_deg(anchor, se3.Pose.identity()))
    return worst_t, worst_r


def bfs_cells(mask: np.ndarray, start: tuple[int, int]) -> set:
    """4-connected reachability oracle over a boolean mask."""
    seen = {start}
    frontier = [start]
    while frontier:
        nxt = []
        for x, y in frontier:
            for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                c = (x + dx, y + dy)
                if (
                    0 <= c[0] < mask.shape[0]
                    and 0 <= c[1] < mask.shape[1]
                    and mask[c]
                    and c not in seen
                ):
                    seen.add(c)
                    nxt.append(c)
        frontier = nxt
    return seen


def random_pose(rng: np.random.Generator, max_trans: float = 2.0, max_angle: float = 2.5):
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    phi = axis * rng.uniform(0.0, max_angle)
    rho = rng.uniform(-max_trans, max_trans, size=3)
    return se3.exp(se3.Twist(rho=rho, phi=phi))
