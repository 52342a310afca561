"""Model-vs-map comparison: classify, cluster, and mesh the differences."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from ..mesh import TriangleMesh
from ..validation import as_points, check_positive
from .clustering import dbscan, labels_from_clusters
from .distance import MeshDistanceIndex, mesh_distances
from .voxmesh import voxel_mesh

DEFAULT_THRESHOLD = 0.15
DEFAULT_EPS = 0.3
DEFAULT_MIN_PTS = 10
DEFAULT_VOXEL = 0.1


@dataclass
class ChangeSet:
    """Outcome of comparing an aligned map against the building model.

    confirmed and positive partition the input map.  clusters and noise are
    index arrays into positive; every positive index lands in exactly one of
    them.  meshes[k] is the cube mesh of clusters[k].
    """

    confirmed: np.ndarray
    positive: np.ndarray
    clusters: list[np.ndarray] = field(default_factory=list)
    noise: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    meshes: list[TriangleMesh] = field(default_factory=list)
    threshold: float = DEFAULT_THRESHOLD
    eps: float = DEFAULT_EPS
    min_pts: int = DEFAULT_MIN_PTS
    voxel: float = DEFAULT_VOXEL

    def validate(self) -> None:
        covered = np.concatenate([self.noise] + [c for c in self.clusters]) if (
            len(self.noise) or self.clusters
        ) else np.empty(0, dtype=np.int64)
        if len(covered) != len(self.positive) or (
            len(covered) and not np.array_equal(np.sort(covered), np.arange(len(self.positive)))
        ):
            raise ValueError("clusters and noise must partition the positive points")
        if len(self.meshes) != len(self.clusters):
            raise ValueError("each cluster needs exactly one mesh")


def classify(
    points: np.ndarray,
    model: TriangleMesh | MeshDistanceIndex,
    threshold: float = DEFAULT_THRESHOLD,
) -> tuple[np.ndarray, np.ndarray]:
    """Split map points into (confirmed, positive) by distance to the model."""
    pts = as_points(points, "map")
    check_positive(threshold, "threshold")
    dist = mesh_distances(pts, model)
    near = dist <= threshold
    return pts[near], pts[~near]


def detect_changes(
    points: np.ndarray,
    model: TriangleMesh | MeshDistanceIndex,
    threshold: float = DEFAULT_THRESHOLD,
    eps: float = DEFAULT_EPS,
    min_pts: int = DEFAULT_MIN_PTS,
    voxel: float = DEFAULT_VOXEL,
    crop_z: tuple[float, float] | None = None,
) -> ChangeSet:
    """Full comparison pipeline.

    crop_z, when given, keeps only positives with z inside [a, b] for the
    clustering stage (floor and ceiling stripping); cropped points stay in
    the positive set but count as noise.
    """
    confirmed, positive = classify(points, model, threshold)
    if crop_z is not None:
        a, b = float(crop_z[0]), float(crop_z[1])
        if not a < b:
            raise ValueError(f"crop_z must be an increasing interval, got ({a}, {b})")
        keep = np.flatnonzero((positive[:, 2] >= a) & (positive[:, 2] <= b))
    else:
        keep = np.arange(len(positive))

    clusters_local, _ = dbscan(positive[keep], eps=eps, min_pts=min_pts)
    clusters = [keep[c] for c in clusters_local]
    labels = labels_from_clusters(len(positive), clusters)
    noise = np.flatnonzero(labels == -1)
    meshes = [voxel_mesh(positive[c], voxel=voxel) for c in clusters]

    out = ChangeSet(
        confirmed=confirmed,
        positive=positive,
        clusters=clusters,
        noise=noise,
        meshes=meshes,
        threshold=threshold,
        eps=eps,
        min_pts=min_pts,
        voxel=voxel,
    )
    out.validate()
    return out


def changeset_report(cs: ChangeSet) -> str:
    """Plain-text summary: counts and per-cluster bounding boxes."""
    lines = [
        f"threshold_m={cs.threshold:.9g}",
        f"eps_m={cs.eps:.9g}",
        f"min_pts={cs.min_pts}",
        f"voxel_m={cs.voxel:.9g}",
        f"n_map={len(cs.confirmed) + len(cs.positive)}",
        f"n_confirmed={len(cs.confirmed)}",
        f"n_positive={len(cs.positive)}",
        f"n_noise={len(cs.noise)}",
        f"n_clusters={len(cs.clusters)}",
    ]
    for k, idx in enumerate(cs.clusters):
        pts = cs.positive[idx]
        lo = pts.min(axis=0)
        hi = pts.max(axis=0)
        lines.append(
            f"cluster_{k:02d}: points={len(idx)} "
            f"bbox_min=({lo[0]:.3f}, {lo[1]:.3f}, {lo[2]:.3f}) "
            f"bbox_max=({hi[0]:.3f}, {hi[1]:.3f}, {hi[2]:.3f})"
        )
    return "\n".join(lines) + "\n"


class ChangeDetector(BaseEstimator):
    """Estimator wrapper: fit() indexes the model, detect()/predict() compare maps.

    predict() returns one label per point: the cluster id for clustered
    positives, -1 for unclustered positives, -2 for confirmed points.
    """

    def __init__(
        self,
        threshold: float = DEFAULT_THRESHOLD,
        eps: float = DEFAULT_EPS,
        min_pts: int = DEFAULT_MIN_PTS,
        voxel: float = DEFAULT_VOXEL,
        crop_z: tuple[float, float] | None = None,
    ):
        self.threshold = threshold
        self.eps = eps
        self.min_pts = min_pts
        self.voxel = voxel
        self.crop_z = crop_z

    def fit(self, model: TriangleMesh) -> "ChangeDetector":
        self.model_ = model
        self.index_ = MeshDistanceIndex(model)
        return self

    def detect(self, points: np.ndarray) -> ChangeSet:
        if not hasattr(self, "index_"):
            raise ValueError("fit must run before detect")
        return detect_changes(
            points,
            self.index_,
            threshold=self.threshold,
            eps=self.eps,
            min_pts=self.min_pts,
            voxel=self.voxel,
            crop_z=self.crop_z,
        )

    def predict(self, points: np.ndarray) -> np.ndarray:
        pts = as_points(points, "map")
        cs = self.detect(pts)
        dist = mesh_distances(pts, self.index_)
        near = dist <= self.threshold
        labels = np.full(len(pts), -2, dtype=np.int64)
        pos_labels = labels_from_clusters(len(cs.positive), cs.clusters)
        labels[~near] = pos_labels
        return labels
