"""End-to-end session synthesis: goal following, scanning, and drift injection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import scancontext, se3
from ..mesh import TriangleMesh
from ..se3 import Pose
from ..session import GraphEdge, PoseGraph, Session, sample_indices
from ..validation import check_nonnegative, check_positive
from .lidar import SENSOR_HEIGHT, LidarSpec, raycast_scan


@dataclass(frozen=True)
class DriftModel:
    """Odometry corruption rates, per metre travelled.

    ``trans_drift_per_m`` is a unitless scale error, ``yaw_drift_per_m`` a
    heading bias in rad/m.  The optional white-noise sigmas (per sqrt-metre)
    default to zero so the bias-only behaviour is exactly reproducible.
    """

    trans_drift_per_m: float = 0.0
    yaw_drift_per_m: float = 0.0
    trans_noise_sigma: float = 0.0
    yaw_noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        check_nonnegative(self.trans_drift_per_m, "trans_drift_per_m")
        check_nonnegative(self.yaw_drift_per_m, "yaw_drift_per_m")
        check_nonnegative(self.trans_noise_sigma, "trans_noise_sigma")
        check_nonnegative(self.yaw_noise_sigma, "yaw_noise_sigma")


def _wrap_angle(a: float) -> float:
    return float(np.arctan2(np.sin(a), np.cos(a)))


def interpolate_goals(goals: np.ndarray, step: float) -> list[Pose]:
    """Constant-speed linear interpolation through ``x y yaw`` goals.

    Poses are emitted every ``step`` metres of path length plus the exact
    final goal; yaw blends along each segment by shortest angular difference.
    The sensor sits SENSOR_HEIGHT above the path plane.
    """
    check_positive(step, "step")
    goals = np.atleast_2d(np.asarray(goals, dtype=float))
    if goals.shape[1] != 3:
        raise ValueError(f"goals must be rows of x y yaw, got shape {goals.shape}")
    keep = [0] + [k for k in range(1, len(goals)) if np.linalg.norm(goals[k, :2] - goals[k - 1, :2]) > 1e-12]
    goals = goals[keep]
    if len(goals) == 1:
        return [Pose.from_xy_yaw(goals[0, 0], goals[0, 1], goals[0, 2], z=SENSOR_HEIGHT)]

    seg_vec = np.diff(goals[:, :2], axis=0)
    seg_len = np.linalg.norm(seg_vec, axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg_len)])
    total = float(cum[-1])
    stations = list(np.arange(0.0, total, step))
    if total - stations[-1] > 1e-9:
        stations.append(total)
    else:
        stations[-1] = total

    poses = []
    seg = 0
    for s in stations:
        while seg < len(seg_len) - 1 and s > cum[seg + 1]:
            seg += 1
        f = (s - cum[seg]) / seg_len[seg]
        xy = goals[seg, :2] + f * seg_vec[seg]
        dyaw = _wrap_angle(goals[seg + 1, 2] - goals[seg, 2])
        yaw = goals[seg, 2] + f * dyaw
        poses.append(Pose.from_xy_yaw(xy[0], xy[1], yaw, z=SENSOR_HEIGHT))
    return poses


def simulate_session(
    model: TriangleMesh,
    goals: np.ndarray,
    spec: LidarSpec | None = None,
    speed: float = 1.0,
    scan_spacing: float = 0.25,
    spacing: float = 1.0,
    seed: int = 0,
    sc_radius: float = scancontext.DEFAULT_MAX_RADIUS,
    frame_label: str = "world",
) -> Session:
    """Drive through the goal list, scan the model, and keep equidistant keyframes.

    Node poses are exact ground truth.  Each pose along the path owns an
    independent noise stream derived from (seed, pose index), so the clouds
    attached to kept keyframes do not depend on how many scans are realised.
    """
    check_positive(speed, "speed")
    spec = spec or LidarSpec()
    dense = interpolate_goals(goals, scan_spacing)
    kept = sample_indices(dense, spacing)

    nodes, clouds, descriptors = [], [], []
    for idx in kept:
        pose = dense[idx]
        rng = np.random.default_rng([seed, idx])
        cloud = raycast_scan(model, pose, spec, rng)
        nodes.append(pose)
        clouds.append(cloud)
        descriptors.append(scancontext.compute_descriptor(cloud, max_radius=sc_radius))

    edges = [
        GraphEdge(i, i + 1, se3.between(nodes[i], nodes[i + 1]), np.eye(6))
        for i in range(len(nodes) - 1)
    ]
    meta = {
        "lidar_channels": str(spec.channels),
        "lidar_vfov_min": f"{spec.vertical_fov[0]:.9g}",
        "lidar_vfov_max": f"{spec.vertical_fov[1]:.9g}",
        "lidar_horizontal_steps": str(spec.horizontal_steps),
        "lidar_max_range": f"{spec.max_range:.9g}",
        "lidar_noise_sigma": f"{spec.noise_sigma:.9g}",
        "sc_max_radius": f"{sc_radius:.9g}",
        "scan_spacing": f"{scan_spacing:.9g}",
        "seed": str(seed),
    }
    return Session(
        graph=PoseGraph(nodes=nodes, odometry_edges=edges),
        clouds=clouds,
        descriptors=descriptors,
        frame_label=frame_label,
        spacing=spacing,
        meta=meta,
    )


def inject_drift(gt: Session, drift: DriftModel, frame_label: str | None = None) -> Session:
    """Corrupt odometry and rebuild node poses by chaining from node 0.

    Every edge of length L gets its translation scaled by (1 + rate), its
    rotation right-composed with a yaw bias of yaw_rate * L, and optional
    white noise; keyframe clouds and descriptors are reused untouched.
    """
    rng = np.random.default_rng(drift.seed)
    new_edges = []
    for e in gt.graph.odometry_edges:
        length = float(np.linalg.norm(e.relative.t))
        t_noise = rng.normal(0.0, 1.0, size=3) * drift.trans_noise_sigma * np.sqrt(length)
        y_noise = float(rng.normal(0.0, 1.0)) * drift.yaw_noise_sigma * np.sqrt(length)
        t_new = e.relative.t * (1.0 + drift.trans_drift_per_m) + t_noise
        dyaw = drift.yaw_drift_per_m * length + y_noise
        bias = Pose.from_xy_yaw(0.0, 0.0, dyaw)
        rel = se3.compose(Pose(t_new, e.relative.q), bias)
        new_edges.append(GraphEdge(e.i, e.j, rel, e.information.copy()))

    nodes = [gt.graph.nodes[0]] if gt.n else []
    for e in new_edges:
        nodes.append(se3.compose(nodes[-1], e.relative))
    loops = [GraphEdge(e.i, e.j, e.relative, e.information.copy()) for e in gt.graph.loop_edges]

    meta = dict(gt.meta)
    meta["drift_trans_per_m"] = f"{drift.trans_drift_per_m:.9g}"
    meta["drift_yaw_per_m"] = f"{drift.yaw_drift_per_m:.9g}"
    meta["drift_seed"] = str(drift.seed)
    return Session(
        graph=PoseGraph(nodes=nodes, odometry_edges=new_edges, loop_edges=loops),
        clouds=list(gt.clouds),
        descriptors=list(gt.descriptors) if gt.descriptors is not None else None,
        frame_label=frame_label or (gt.frame_label + "-drifted"),
        spacing=gt.spacing,
        meta=meta,
    )


def apply_global_offset(session: Session, offset: Pose, frame_label: str | None = None) -> Session:
    """Left-compose every node pose with a rigid offset (relative edges are unchanged)."""
    nodes = [se3.compose(offset, p) for p in session.graph.nodes]
    graph = PoseGraph(
        nodes=nodes,
        odometry_edges=[GraphEdge(e.i, e.j, e.relative, e.information.copy()) for e in session.graph.odometry_edges],
        loop_edges=[GraphEdge(e.i, e.j, e.relative, e.information.copy()) for e in session.graph.loop_edges],
    )
    return Session(
        graph=graph,
        clouds=list(session.clouds),
        descriptors=list(session.descriptors) if session.descriptors is not None else None,
        frame_label=frame_label or session.frame_label,
        spacing=session.spacing,
        meta=dict(session.meta),
    )
