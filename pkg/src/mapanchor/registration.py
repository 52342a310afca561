"""Inter-session loop detection and scan registration.

Candidates come from two routes: place-recognition descriptor matches (which
also seed the yaw) and pose proximity under the current anchor guess.  Each
candidate pair is registered with point-to-point ICP against a local submap
around the reference keyframe; registrations that pass the fitness gate
become encounters carrying an adaptive covariance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.spatial import cKDTree

from . import scancontext, se3
from .exceptions import NoCorrespondences, TooFewPoints
from .se3 import Pose
from .session import Session
from .validation import as_points, check_positive

COVARIANCE_FLOOR = 1e-4
_ROT_VAR_RATIO = 4.0


@dataclass(frozen=True)
class IcpParams:
    max_corr_dist: float = 2.0
    max_iterations: int = 60
    convergence_eps: float = 1e-6
    fitness_threshold: float = 0.04

    def __post_init__(self):
        check_positive(self.max_corr_dist, "max_corr_dist")
        check_positive(self.max_iterations, "max_iterations")
        check_positive(self.convergence_eps, "convergence_eps")
        check_positive(self.fitness_threshold, "fitness_threshold")


@dataclass(eq=False)
class IcpResult:
    transform: Pose
    fitness: float
    iterations: int
    converged: bool
    history: list[tuple[float, float, int]]


@dataclass(eq=False)
class Encounter:
    """Registered inter-session loop: query keyframe ``j`` seen from reference
    keyframe ``i``, with the registration fitness mapped to a covariance."""

    i: int
    j: int
    relative: Pose
    covariance: np.ndarray
    fitness: float

    def __post_init__(self):
        self.covariance = np.asarray(self.covariance, dtype=float)
        if self.covariance.shape != (6, 6):
            raise ValueError(f"covariance must be 6x6, got {self.covariance.shape}")
        if self.fitness < 0:
            raise ValueError(f"fitness must be >= 0, got {self.fitness}")


class Candidate(NamedTuple):
    i: int
    j: int
    init: Pose
    route: str


def _kabsch(src: np.ndarray, tgt: np.ndarray) -> Pose:
    """Least-squares rigid transform mapping src points onto tgt points."""
    cs = src.mean(axis=0)
    ct = tgt.mean(axis=0)
    h = (src - cs).T @ (tgt - ct)
    u, _, vt = np.linalg.svd(h)
    d = np.sign(np.linalg.det(vt.T @ u.T))
    r = vt.T @ np.diag([1.0, 1.0, d]) @ u.T
    m = np.eye(4)
    m[:3, :3] = r
    m[:3, 3] = ct - r @ cs
    return Pose.from_matrix(m)


def icp(
    source: np.ndarray,
    target: np.ndarray,
    init: Pose | None = None,
    params: IcpParams | None = None,
    target_tree: cKDTree | None = None,
) -> IcpResult:
    """Point-to-point ICP; the result maps source-frame points into the target frame.

    Correspondences are nearest neighbours gated at max_corr_dist, the update
    is the closed-form SVD solution on the centered pairs, and fitness is the
    mean squared distance over the final inlier set.
    """
    params = params or IcpParams()
    source = as_points(source, "source", min_points=10)
    target = as_points(target, "target", min_points=10)
    pose = init or Pose.identity()
    tree = target_tree if target_tree is not None else cKDTree(target)

    history: list[tuple[float, float, int]] = []
    converged = False
    iterations = 0
    for iterations in range(1, params.max_iterations + 1):
        moved = pose.transform_points(source)
        dist, idx = tree.query(moved)
        mask = dist <= params.max_corr_dist
        if not mask.any():
            raise NoCorrespondences(
                f"no correspondences within {params.max_corr_dist} m at iteration {iterations}"
            )
        src_in = moved[mask]
        tgt_in = target[idx[mask]]
        err_before = float(np.mean(dist[mask] ** 2))
        delta = _kabsch(src_in, tgt_in)
        err_after = float(np.mean(np.sum((delta.transform_points(src_in) - tgt_in) ** 2, axis=1)))
        history.append((err_before, err_after, int(mask.sum())))
        pose = se3.compose(delta, pose)
        if np.linalg.norm(se3.log(delta).vector()) < params.convergence_eps:
            converged = True
            break

    moved = pose.transform_points(source)
    dist, _ = tree.query(moved)
    final_mask = dist <= params.max_corr_dist
    if not final_mask.any():
        raise NoCorrespondences("no correspondences within gate after convergence")
    fitness = float(np.mean(dist[final_mask] ** 2))
    return IcpResult(
        transform=pose,
        fitness=fitness,
        iterations=iterations,
        converged=converged,
        history=history,
    )


def adaptive_covariance(fitness: float, floor: float = COVARIANCE_FLOOR) -> np.ndarray:
    """Diagonal covariance scaled by registration fitness (clamped below)."""
    if fitness < 0:
        raise ValueError(f"fitness must be >= 0, got {fitness}")
    scale = max(float(fitness), float(floor))
    return scale * np.diag([1.0, 1.0, 1.0, _ROT_VAR_RATIO, _ROT_VAR_RATIO, _ROT_VAR_RATIO])


def voxel_downsample(points: np.ndarray, voxel: float) -> np.ndarray:
    """Average points per occupied voxel; deterministic for a given input order."""
    pts = as_points(points)
    if len(pts) == 0 or voxel <= 0:
        return pts
    keys = np.floor(pts / voxel).astype(np.int64)
    _, inverse, counts = np.unique(keys, axis=0, return_inverse=True, return_counts=True)
    sums = np.zeros((len(counts), 3))
    np.add.at(sums, inverse, pts)
    return sums / counts[:, None]


def local_submap(session: Session, i: int, half_width: int = 2) -> np.ndarray:
    """Keyframe cloud ``i`` merged with its neighbours, expressed in frame ``i``."""
    lo = max(0, i - half_width)
    hi = min(session.n - 1, i + half_width)
    parts = []
    pose_i = session.graph.nodes[i]
    for k in range(lo, hi + 1):
        rel = se3.between(pose_i, session.graph.nodes[k])
        parts.append(rel.transform_points(session.clouds[k]))
    return np.vstack(parts)


def _shift_to_yaw(shift: int, sectors: int) -> float:
    """Encounter yaw implied by a descriptor match shift (see detect_candidates)."""
    yaw = -shift * (2.0 * np.pi / sectors)
    return float(np.arctan2(np.sin(yaw), np.cos(yaw)))


def detect_candidates(
    reference: Session,
    query: Session,
    current_anchor_guess: Pose | None = None,
    radius: float = 10.0,
    sc_threshold: float = 0.6,
    top_k: int = 1,
    query_world_poses: list[Pose] | None = None,
) -> list[Candidate]:
    """Union of descriptor matches and pose-proximity pairs, sorted by (i, j).

    Descriptor matches carry a yaw-only initial guess recovered from the best
    sector shift.  The proximity route maps query poses through the anchor
    guess (or explicit world-pose estimates) and pairs each query keyframe
    with its nearest reference keyframe inside ``radius``; its initial guess
    is the current relative pose.  When both routes propose a pair, the
    descriptor-derived guess wins.
    """
    if reference.n == 0 or query.n == 0:
        raise ValueError("sessions must be nonempty")
    found: dict[tuple[int, int], Candidate] = {}

    if query_world_poses is None and current_anchor_guess is not None:
        query_world_poses = [
            se3.compose(current_anchor_guess, p) for p in query.graph.nodes
        ]
    if query_world_poses is not None:
        ref_t = np.stack([p.t for p in reference.graph.nodes])
        for j, wp in enumerate(query_world_poses):
            d = np.linalg.norm(ref_t - wp.t[None, :], axis=1)
            i = int(np.argmin(d))
            if d[i] <= radius:
                init = se3.between(reference.graph.nodes[i], wp)
                found[(i, j)] = Candidate(i, j, init, "proximity")

    if reference.descriptors is not None and query.descriptors is not None:
        for j, probe in enumerate(query.descriptors):
            for m in scancontext.query(
                reference.descriptors, probe, sim_threshold=sc_threshold, top_k=top_k
            ):
                yaw = _shift_to_yaw(m.shift, probe.sectors)
                found[(m.index, j)] = Candidate(
                    m.index, j, Pose.from_xy_yaw(0.0, 0.0, yaw), "descriptor"
                )

    return [found[key] for key in sorted(found)]


def build_encounters(
    reference: Session,
    query: Session,
    anchor_guess: Pose | None = None,
    icp_params: IcpParams | None = None,
    radius: float = 10.0,
    sc_threshold: float = 0.6,
    query_world_poses: list[Pose] | None = None,
    voxel: float = 0.1,
) -> tuple[list[Encounter], dict]:
    """Register all candidate pairs and keep those that pass the fitness gate.

    Returns the encounters sorted by (i, j) plus a report of candidate and
    rejection counts.  ICP runs on voxel-downsampled clouds against a local
    submap around the reference keyframe.
    """
    icp_params = icp_params or IcpParams()
    candidates = detect_candidates(
        reference,
        query,
        current_anchor_guess=anchor_guess,
        radius=radius,
        sc_threshold=sc_threshold,
        query_world_poses=query_world_poses,
    )
    report = {
        "candidates": len(candidates),
        "registered": 0,
        "rejected_fitness": 0,
        "rejected_error": 0,
    }
    submaps: dict[int, tuple[np.ndarray, cKDTree]] = {}
    encounters: list[Encounter] = []
    for cand in candidates:
        if cand.i not in submaps:
            cloud = local_submap(reference, cand.i)
            cloud = voxel_downsample(cloud, voxel)
            submaps[cand.i] = (cloud, cKDTree(cloud))
        target, tree = submaps[cand.i]
        source = voxel_downsample(query.clouds[cand.j], voxel)
        try:
            result = icp(source, target, cand.init, icp_params, target_tree=tree)
        except (NoCorrespondences, TooFewPoints):
            report["rejected_error"] += 1
            continue
        if result.fitness > icp_params.fitness_threshold:
            report["rejected_fitness"] += 1
            continue
        encounters.append(
            Encounter(
                i=cand.i,
                j=cand.j,
                relative=result.transform,
                covariance=adaptive_covariance(result.fitness),
                fitness=result.fitness,
            )
        )
    report["registered"] = len(encounters)
    return encounters, report


def estimate_initial_anchor(
    reference: Session,
    query: Session,
    icp_params: IcpParams | None = None,
    sc_threshold: float = 0.6,
    max_attempts: int = 5,
    voxel: float = 0.1,
) -> tuple[Pose, tuple[int, int] | None]:
    """Bootstrap the query anchor from the best verified descriptor match.

    Tries the globally most similar (reference, query) descriptor pairs in
    order; the first ICP that passes the fitness gate fixes the anchor as
    ref_pose_i * relative * inverse(query_pose_j).  Falls back to identity.
    """
    icp_params = icp_params or IcpParams()
    if reference.descriptors is None or query.descriptors is None:
        return Pose.identity(), None
    scored = []
    for j, probe in enumerate(query.descriptors):
        for m in scancontext.query(
            reference.descriptors, probe, sim_threshold=sc_threshold, top_k=1
        ):
            scored.append((-m.similarity, m.index, j, m.shift))
    scored.sort()
    for neg_sim, i, j, shift in scored[:max_attempts]:
        init = Pose.from_xy_yaw(0.0, 0.0, _shift_to_yaw(shift, query.descriptors[j].sectors))
        target = voxel_downsample(local_submap(reference, i), voxel)
        source = voxel_downsample(query.clouds[j], voxel)
        try:
            result = icp(source, target, init, icp_params)
        except (NoCorrespondences, TooFewPoints):
            continue
        if result.fitness > icp_params.fitness_threshold:
            continue
        anchor = se3.compose(
            reference.graph.nodes[i],
            se3.compose(result.transform, se3.inverse(query.graph.nodes[j])),
        )
        return anchor, (i, j)
    return Pose.identity(), None


def save_encounters(encounters: list[Encounter], path) -> None:
    """Debug dump: one `i j x y z qx qy qz qw fitness` line per encounter."""
    from pathlib import Path

    lines = []
    for e in encounters:
        w, x, y, z = e.relative.q
        t = e.relative.t
        lines.append(
            f"{e.i} {e.j} {t[0]:.9g} {t[1]:.9g} {t[2]:.9g} "
            f"{x:.9g} {y:.9g} {z:.9g} {w:.9g} {e.fitness:.9g}"
        )
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))
