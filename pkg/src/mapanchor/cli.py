"""Batch command line: simulate, drift, anchor, diff, eval.

Every subcommand is a pure function of its flags and input files, so rerunning
with the same seeds reproduces outputs byte for byte.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .anchoring import SessionAnchorer
from .changes import changeset_report, detect_changes
from .exceptions import MapAnchorError
from .mesh import TriangleMesh, load_obj, save_obj
from .metrics import ate, report_lines, report_table
from .registration import save_encounters
from .session_io import (
    cloud_from_bytes,
    cloud_to_bytes,
    load_session,
    load_trajectory,
    save_session,
    save_trajectory,
)
from .simulate import (
    DriftModel,
    LidarSpec,
    coverage_path,
    inject_drift,
    rasterize,
    save_goals,
    simulate_session,
    subsample_goals,
)


def _fmt_pose(pose) -> str:
    t = pose.t
    q = pose.q
    vals = [t[0], t[1], t[2], q[1], q[2], q[3], q[0]]
    return " ".join(f"{v:.9g}" for v in vals)


def _require_dir(path: str, what: str) -> None:
    if not os.path.isdir(path):
        raise FileNotFoundError(f"{what} directory not found: {path}")


def _require_file(path: str, what: str) -> None:
    if not os.path.isfile(path):
        raise FileNotFoundError(f"{what} file not found: {path}")


def _cmd_simulate(args) -> int:
    _require_file(args.model, "model")
    model = load_obj(args.model)
    grid = rasterize(model, resolution=args.resolution)
    waypoints = coverage_path(grid, clearance=args.clearance)
    goals = subsample_goals(waypoints, stride=args.goal_stride)
    spec = LidarSpec(
        channels=args.channels,
        horizontal_steps=args.horizontal_steps,
        max_range=args.max_range,
        noise_sigma=args.noise_sigma,
    )
    session = simulate_session(
        model,
        goals,
        spec=spec,
        scan_spacing=args.scan_spacing,
        spacing=args.spacing,
        seed=args.seed,
        sc_radius=args.sc_radius,
    )
    os.makedirs(args.out, exist_ok=True)
    save_session(session, args.out)
    save_goals(goals, os.path.join(args.out, "goals.txt"))
    save_trajectory(session.graph.nodes, os.path.join(args.out, "trajectory.txt"))
    print(f"simulated {session.n} keyframes into {args.out}")
    return 0


def _cmd_drift(args) -> int:
    _require_dir(getattr(args, "in"), "input session")
    session = load_session(getattr(args, "in"))
    drift = DriftModel(
        trans_drift_per_m=args.trans_drift,
        yaw_drift_per_m=args.yaw_drift,
        trans_noise_sigma=args.trans_noise,
        yaw_noise_sigma=args.yaw_noise,
        seed=args.seed,
    )
    drifted = inject_drift(session, drift)
    os.makedirs(args.out, exist_ok=True)
    save_session(drifted, args.out)
    print(f"drifted {drifted.n} keyframes into {args.out}")
    return 0


def _cmd_anchor(args) -> int:
    _require_dir(args.ref, "reference session")
    _require_dir(args.query, "query session")
    reference = load_session(args.ref)
    query = load_session(args.query)
    anchorer = SessionAnchorer(
        proximity_radius=args.sc_radius,
        sc_threshold=args.sc_threshold,
        fitness_threshold=args.fitness_threshold,
        max_corr_dist=args.max_corr_dist,
        voxel=args.voxel,
        rounds=args.rounds,
    )
    anchorer.fit(reference, query)

    os.makedirs(args.out, exist_ok=True)
    save_trajectory(
        anchorer.reference_world_trajectory_, os.path.join(args.out, "traj_ref_world.txt")
    )
    save_trajectory(query.graph.nodes, os.path.join(args.out, "traj_query_local.txt"))
    save_trajectory(
        anchorer.query_world_trajectory_, os.path.join(args.out, "traj_query_world.txt")
    )
    with open(os.path.join(args.out, "map.pc"), "wb") as fh:
        fh.write(cloud_to_bytes(anchorer.assemble_query_map()))
    save_encounters(anchorer.encounters_, os.path.join(args.out, "encounters.txt"))

    rep = anchorer.report_
    sol = anchorer.solution_
    lines = [
        f"query_anchor={_fmt_pose(anchorer.query_anchor_)}",
        f"initial_anchor={_fmt_pose(anchorer.initial_anchor_)}",
        f"n_ref={reference.n}",
        f"n_query={query.n}",
        f"candidates={rep['candidates']}",
        f"registered={rep['registered']}",
        f"rejected_fitness={rep['rejected_fitness']}",
        f"rejected_error={rep['rejected_error']}",
        f"solver_error={sol.final_error:.9g}",
        f"solver_iterations={sol.iterations}",
        f"solver_converged={sol.converged}",
    ]
    with open(os.path.join(args.out, "report.txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")
    print(f"anchored {query.n} query keyframes with {len(anchorer.encounters_)} encounters")
    return 0


def _parse_crop(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise ValueError(f"--crop-z expects 'a,b', got {text!r}")
    return float(parts[0]), float(parts[1])


def _cmd_diff(args) -> int:
    _require_file(args.model, "model")
    _require_file(args.map, "map")
    model = load_obj(args.model)
    with open(args.map, "rb") as fh:
        points = cloud_from_bytes(fh.read(), path=args.map)
    crop = _parse_crop(args.crop_z) if args.crop_z else None
    changes = detect_changes(
        points,
        model,
        threshold=args.threshold,
        eps=args.eps,
        min_pts=args.min_pts,
        voxel=args.voxel,
        crop_z=crop,
    )
    os.makedirs(args.out, exist_ok=True)
    combined = TriangleMesh(vertices=np.empty((0, 3)), faces=np.empty((0, 3), dtype=np.int64))
    for k, mesh in enumerate(changes.meshes):
        save_obj(mesh, os.path.join(args.out, f"cluster_{k:03d}.obj"))
        combined = combined.merged_with(mesh)
    save_obj(combined, os.path.join(args.out, "changes.obj"))
    with open(os.path.join(args.out, "changes_report.txt"), "w") as fh:
        fh.write(changeset_report(changes))
    print(f"{len(changes.clusters)} change clusters, {len(changes.positive)} positive points")
    return 0


def _cmd_eval(args) -> int:
    _require_file(args.est, "estimate trajectory")
    _require_file(args.gt, "ground-truth trajectory")
    est = load_trajectory(args.est)
    gt = load_trajectory(args.gt)
    report = ate(est, gt)
    sys.stdout.write(report_table(report))
    sys.stdout.write("\n")
    sys.stdout.write(report_lines(report))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mapanchor",
        description="Simulate building scans, anchor sessions, and detect changes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="scan a building model along a coverage path")
    p.add_argument("--model", required=True, help="building model OBJ file")
    p.add_argument("--out", required=True, help="output session directory")
    p.add_argument("--resolution", type=float, default=0.1, help="occupancy grid cell size (m)")
    p.add_argument("--spacing", type=float, default=1.0, help="keyframe spacing (m)")
    p.add_argument("--seed", type=int, default=0, help="noise seed")
    p.add_argument("--clearance", type=float, default=0.3, help="wall clearance for planning (m)")
    p.add_argument("--goal-stride", type=int, default=20, help="keep every Nth coverage cell")
    p.add_argument("--scan-spacing", type=float, default=0.25, help="dense scan step (m)")
    p.add_argument("--sc-radius", type=float, default=10.0, help="descriptor max radius (m)")
    p.add_argument("--channels", type=int, default=16, help="lidar vertical channels")
    p.add_argument("--horizontal-steps", type=int, default=900, help="lidar azimuth steps")
    p.add_argument("--max-range", type=float, default=30.0, help="lidar max range (m)")
    p.add_argument("--noise-sigma", type=float, default=0.01, help="range noise sigma (m)")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("drift", help="corrupt a session's odometry with drift")
    p.add_argument("--in", required=True, help="input session directory")
    p.add_argument("--out", required=True, help="output session directory")
    p.add_argument("--trans-drift", type=float, required=True, help="translation drift per metre")
    p.add_argument("--yaw-drift", type=float, required=True, help="yaw drift (rad) per metre")
    p.add_argument("--seed", type=int, default=0, help="noise seed")
    p.add_argument("--trans-noise", type=float, default=0.0, help="translation noise sigma")
    p.add_argument("--yaw-noise", type=float, default=0.0, help="yaw noise sigma (rad)")
    p.set_defaults(func=_cmd_drift)

    p = sub.add_parser("anchor", help="align a query session to a reference session")
    p.add_argument("--ref", required=True, help="reference session directory")
    p.add_argument("--query", required=True, help="query session directory")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--sc-threshold", type=float, default=0.6, help="descriptor similarity gate")
    p.add_argument("--sc-radius", type=float, default=10.0, help="candidate search radius (m)")
    p.add_argument("--fitness-threshold", type=float, default=0.04, help="ICP acceptance gate")
    p.add_argument("--max-corr-dist", type=float, default=2.0, help="ICP pairing distance (m)")
    p.add_argument("--voxel", type=float, default=0.1, help="registration downsampling (m)")
    p.add_argument("--rounds", type=int, default=2, help="detect/solve rounds")
    p.set_defaults(func=_cmd_anchor)

    p = sub.add_parser("diff", help="compare an aligned map against the model")
    p.add_argument("--model", required=True, help="building model OBJ file")
    p.add_argument("--map", required=True, help="assembled world map (.pc)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--threshold", type=float, default=0.15, help="confirm distance (m)")
    p.add_argument("--eps", type=float, default=0.3, help="clustering radius (m)")
    p.add_argument("--min-pts", type=int, default=10, help="clustering density")
    p.add_argument("--voxel", type=float, default=0.1, help="mesh voxel size (m)")
    p.add_argument("--crop-z", default=None, help="keep positives with z in 'a,b' (m)")
    p.set_defaults(func=_cmd_diff)

    p = sub.add_parser("eval", help="trajectory error against ground truth")
    p.add_argument("--est", required=True, help="estimated trajectory file")
    p.add_argument("--gt", required=True, help="ground-truth trajectory file")
    p.set_defaults(func=_cmd_eval)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (MapAnchorError, FileNotFoundError, NotADirectoryError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
