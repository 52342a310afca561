"""Density clustering with an order-invariant partition.

Standard DBSCAN leaves border-point membership dependent on visit order when
a border point sits within eps of two clusters.  Here border points join the
cluster of their nearest core point, with exact-distance ties broken by the
lexicographically smallest core coordinate, so shuffling the input can never
change the resulting partition.  Core and noise sets match the textbook
definition (neighbor counts include the point itself).
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from ..validation import as_points, check_positive


def _find(parent: np.ndarray, i: int) -> int:
    root = i
    while parent[root] != root:
        root = parent[root]
    while parent[i] != root:
        parent[i], i = root, parent[i]
    return root


def dbscan(
    points: np.ndarray, eps: float = 0.3, min_pts: int = 10
) -> tuple[list[np.ndarray], np.ndarray]:
    """Cluster points; returns (clusters, noise) as index arrays.

    Clusters are ordered by their smallest member index; each cluster's
    indices are sorted.  Noise holds every unclustered index.
    """
    pts = as_points(points, "points")
    check_positive(eps, "eps")
    if not isinstance(min_pts, (int, np.integer)) or min_pts < 1:
        raise ValueError(f"min_pts must be a positive integer, got {min_pts!r}")
    n = len(pts)
    if n == 0:
        return [], np.empty(0, dtype=np.int64)

    tree = cKDTree(pts)
    neigh = tree.query_ball_point(pts, eps)
    counts = np.fromiter((len(x) for x in neigh), dtype=np.int64, count=n)
    core = counts >= min_pts

    parent = np.arange(n)
    for i in np.flatnonzero(core):
        for j in neigh[i]:
            if core[j]:
                ri, rj = _find(parent, i), _find(parent, j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)

    labels = np.full(n, -1, dtype=np.int64)
    root_to_label: dict[int, int] = {}
    for i in np.flatnonzero(core):
        root = _find(parent, i)
        if root not in root_to_label:
            root_to_label[root] = len(root_to_label)
        labels[i] = root_to_label[root]

    for i in np.flatnonzero(~core):
        cand = [j for j in neigh[i] if core[j]]
        if not cand:
            continue
        dists = np.linalg.norm(pts[cand] - pts[i], axis=1)
        # nearest core wins; exact ties fall back to smallest coordinates
        best = min(range(len(cand)), key=lambda k: (dists[k], tuple(pts[cand[k]])))
        labels[i] = labels[cand[best]]

    clusters = [np.flatnonzero(labels == lab) for lab in range(len(root_to_label))]
    clusters.sort(key=lambda idx: int(idx[0]))
    noise = np.flatnonzero(labels == -1)
    return clusters, noise


def labels_from_clusters(n: int, clusters: list[np.ndarray]) -> np.ndarray:
    """Dense labels array: cluster id per point, -1 for noise."""
    labels = np.full(n, -1, dtype=np.int64)
    for lab, idx in enumerate(clusters):
        labels[idx] = lab
    return labels
