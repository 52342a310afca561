"""Multi-session LiDAR mapping anchored to a building model.

Pipeline: simulate scans of a triangle-mesh building model along a coverage
path, corrupt a second session with odometry drift, recover its placement in
the model frame by optimising a per-session anchor over inter-session ICP
encounters, then compare the aligned map against the model to find what the
model does not explain.
"""

from . import se3
from .anchoring import SessionAnchorer, Solution, build_graph, optimize, to_global
from .changes import ChangeDetector, ChangeSet, dbscan, detect_changes, voxel_mesh
from .exceptions import (
    DimensionMismatch,
    FormatError,
    GimbalBoundary,
    LengthMismatch,
    MapAnchorError,
    MissingKeyframe,
    NoCorrespondences,
    NoInterior,
    SingularSystem,
    TooFewPoints,
)
from .mesh import TriangleMesh, load_obj, save_obj
from .metrics import AteReport, ate
from .registration import Encounter, IcpParams, IcpResult, build_encounters, icp
from .scancontext import (
    Descriptor,
    ScanContextExtractor,
    ScanContextIndex,
    compute_descriptor,
    descriptor_distance,
    query,
)
from .se3 import Pose, Twist, between, compose, exp, inverse, log
from .session import GraphEdge, PoseGraph, Session, sample_keyframes
from .session_io import load_session, load_trajectory, save_session, save_trajectory
from .simulate import (
    DriftModel,
    LidarSpec,
    OccupancyGrid,
    coverage_path,
    inject_drift,
    rasterize,
    raycast_scan,
    simulate_session,
)
from .worlds import box_obstacle, box_room, two_room_model

__version__ = "0.1.0"

__all__ = [
    "AteReport",
    "ChangeDetector",
    "ChangeSet",
    "Descriptor",
    "DimensionMismatch",
    "DriftModel",
    "Encounter",
    "FormatError",
    "GimbalBoundary",
    "GraphEdge",
    "IcpParams",
    "IcpResult",
    "LengthMismatch",
    "LidarSpec",
    "MapAnchorError",
    "MissingKeyframe",
    "NoCorrespondences",
    "NoInterior",
    "OccupancyGrid",
    "Pose",
    "PoseGraph",
    "ScanContextExtractor",
    "ScanContextIndex",
    "Session",
    "SessionAnchorer",
    "SingularSystem",
    "Solution",
    "TooFewPoints",
    "TriangleMesh",
    "Twist",
    "ate",
    "between",
    "box_obstacle",
    "box_room",
    "build_encounters",
    "build_graph",
    "compose",
    "compute_descriptor",
    "coverage_path",
    "dbscan",
    "descriptor_distance",
    "detect_changes",
    "exp",
    "icp",
    "inject_drift",
    "inverse",
    "load_obj",
    "load_session",
    "load_trajectory",
    "log",
    "optimize",
    "query",
    "rasterize",
    "raycast_scan",
    "sample_keyframes",
    "save_obj",
    "save_session",
    "save_trajectory",
    "se3",
    "simulate_session",
    "to_global",
    "two_room_model",
    "voxel_mesh",
]
