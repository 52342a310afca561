from .clustering import dbscan, labels_from_clusters
from .detector import (
    ChangeDetector,
    ChangeSet,
    changeset_report,
    classify,
    detect_changes,
)
from .distance import (
    MeshDistanceIndex,
    closest_point_on_triangles,
    mesh_distances,
    point_mesh_distance,
)
from .voxmesh import occupied_cells, voxel_mesh

__all__ = [
    "ChangeDetector",
    "ChangeSet",
    "MeshDistanceIndex",
    "changeset_report",
    "classify",
    "closest_point_on_triangles",
    "dbscan",
    "detect_changes",
    "labels_from_clusters",
    "mesh_distances",
    "occupied_cells",
    "point_mesh_distance",
    "voxel_mesh",
]
