"""Shared fixtures.

Simulated sessions dominate the suite's runtime, so each bundle is built once
per session and handed around as a plain dict.  Parameters are fixed; every
derived quantity downstream (keyframe counts, encounter counts, ATE values)
is reproducible from the seeds recorded here.
"""

from __future__ import annotations

import time

import numpy as np
import pytest

from mapanchor import (
    DriftModel,
    LidarSpec,
    Pose,
    SessionAnchorer,
    box_obstacle,
    coverage_path,
    inject_drift,
    rasterize,
    simulate_session,
    two_room_model,
)
from mapanchor.anchoring import assemble_map
from mapanchor.changes import detect_changes
from mapanchor.simulate import apply_global_offset, subsample_goals
from mapanchor.worlds import box_room


@pytest.fixture(scope="session")
def mini_pair():
    """Small single-room reference/query pair for registration and anchoring
    unit tests.  Query carries drift plus a fixed global offset."""
    model = box_room(6.0, 3.0)
    grid = rasterize(model, resolution=0.5)
    goals = subsample_goals(coverage_path(grid, clearance=0.6), stride=4)
    spec = LidarSpec(channels=8, horizontal_steps=240, max_range=20.0, noise_sigma=0.01)
    gt = simulate_session(model, goals, spec=spec, scan_spacing=0.5, spacing=1.0, seed=7)
    drifted = inject_drift(gt, DriftModel(0.02, 0.004, seed=3), frame_label="local")
    offset = Pose.from_xy_yaw(1.5, -2.0, 0.8)
    query = apply_global_offset(drifted, offset, frame_label="local")
    return {
        "model": model,
        "gt": gt,
        "drifted": drifted,
        "query": query,
        "offset": offset,
        "spec": spec,
    }


@pytest.fixture(scope="session")
def two_room_bundle():
    """Acceptance-scale pair: two connected rooms, ~70 keyframes, plus both
    anchorer fits (drift only, and drift with a random global offset)."""
    timings = {}
    t0 = time.perf_counter()
    model = two_room_model(20.0, 15.0, 3.0)
    grid = rasterize(model, resolution=1.0)
    goals = subsample_goals(coverage_path(grid, clearance=1.0), stride=4)
    spec = LidarSpec(channels=16, horizontal_steps=512, max_range=30.0, noise_sigma=0.01)
    gt = simulate_session(model, goals, spec=spec, scan_spacing=0.5, spacing=3.0, seed=1)
    drifted = inject_drift(
        gt, DriftModel(trans_drift_per_m=0.005, yaw_drift_per_m=0.002, seed=5), frame_label="local"
    )
    rng = np.random.default_rng(9)
    ang = rng.uniform(-np.pi, np.pi)
    offset = Pose.from_xy_yaw(rng.uniform(-5, 5), rng.uniform(-5, 5), ang)
    shifted = apply_global_offset(drifted, offset, frame_label="local")
    timings["simulate"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    plain = SessionAnchorer().fit(gt, drifted)
    timings["fit_drifted"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    offset_fit = SessionAnchorer().fit(gt, shifted)
    timings["fit_offset"] = time.perf_counter() - t0

    return {
        "model": model,
        "gt": gt,
        "drifted": drifted,
        "shifted": shifted,
        "offset": offset,
        "plain": plain,
        "offset_fit": offset_fit,
        "timings": timings,
    }


@pytest.fixture(scope="session")
def obstacle_bundle():
    """Two-room world with two added boxes, scanned and diffed against the
    box-free base model."""
    timings = {}
    t0 = time.perf_counter()
    model = two_room_model(20.0, 15.0, 3.0)
    boxes = [
        box_obstacle((5.0, 7.5), 0.5, lift=0.2),
        box_obstacle((15.0, 7.5), 0.5, lift=0.2),
    ]
    world = model.merged_with(boxes[0]).merged_with(boxes[1])
    grid = rasterize(world, resolution=1.0)
    goals = subsample_goals(coverage_path(grid, clearance=1.0), stride=4)
    spec = LidarSpec(channels=16, horizontal_steps=512, max_range=30.0, noise_sigma=0.01)
    session = simulate_session(world, goals, spec=spec, scan_spacing=0.5, spacing=3.0, seed=2)
    cloud = assemble_map(session, session.graph.nodes)
    timings["simulate"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    changes = detect_changes(cloud, model)
    timings["detect"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    control = detect_changes(cloud, world)
    timings["detect_control"] = time.perf_counter() - t0

    return {
        "model": model,
        "world": world,
        "boxes": boxes,
        "session": session,
        "cloud": cloud,
        "changes": changes,
        "control": control,
        "timings": timings,
    }
