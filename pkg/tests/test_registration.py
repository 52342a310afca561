"""ICP, candidate detection, and encounter building."""

from __future__ import annotations

import numpy as np
import pytest

from helpers import random_pose
from mapanchor import IcpParams, LidarSpec, Pose, icp, raycast_scan, se3, simulate_session
from mapanchor.exceptions import NoCorrespondences, TooFewPoints
from mapanchor.registration import (
    adaptive_covariance,
    build_encounters,
    detect_candidates,
    estimate_initial_anchor,
    local_submap,
    save_encounters,
    voxel_downsample,
)
from mapanchor.scancontext import compute_descriptor
from mapanchor.session import PoseGraph, Session
from mapanchor.simulate import apply_global_offset
from mapanchor.worlds import box_room


def _box_scan(seed: int = 0, yaw: float = 0.0) -> np.ndarray:
    """Dense sensor-frame scan of a 6 m box room from slightly off centre."""
    model = box_room(6.0, 3.0)
    spec = LidarSpec(channels=8, horizontal_steps=240, noise_sigma=0.0)
    pose = Pose.from_xy_yaw(0.4, -0.3, yaw, z=1.0)
    return raycast_scan(model, pose, spec, np.random.default_rng(seed))


@pytest.fixture(scope="module")
def small_session():
    model = box_room(6.0, 3.0)
    goals = np.array([[-2.0, 0.0, 0.0], [2.0, 0.0, 0.0]])
    spec = LidarSpec(channels=8, horizontal_steps=240, noise_sigma=0.005)
    return simulate_session(model, goals, spec=spec, scan_spacing=0.25, spacing=1.0, seed=7)


# --------------------------------------------------------------------- icp


def test_icp_identity_on_identical_clouds():
    cloud = _box_scan()
    res = icp(cloud, cloud)
    assert res.converged
    assert res.fitness < 1e-12
    assert se3.translation_error_m(res.transform, Pose.identity()) < 1e-9
    assert se3.rotation_error_deg(res.transform, Pose.identity()) < 1e-7


def test_icp_recovers_known_transform():
    # Wide vertical FOV so floor and ceiling pin z, roll and pitch; fine
    # azimuth grid so the yaw lattice lock stays far below the tolerance.
    model = box_room(6.0, 3.0)
    spec = LidarSpec(channels=8, vertical_fov=(-60.0, 60.0), horizontal_steps=1440, noise_sigma=0.01)
    pose = Pose.from_xy_yaw(0.4, -0.3, 0.0, z=1.0)
    rng = np.random.default_rng(1)
    for _ in range(5):
        source = raycast_scan(model, pose, spec, rng)
        base = raycast_scan(model, pose, spec, rng)
        truth = random_pose(rng, max_trans=0.8, max_angle=np.radians(18.0))
        target = truth.transform_points(base)
        init_err = se3.exp(
            se3.Twist(rho=rng.uniform(-0.2, 0.2, 3), phi=rng.uniform(-0.1, 0.1, 3))
        )
        res = icp(source, target, init=se3.compose(init_err, truth))
        assert se3.translation_error_m(res.transform, truth) < 5e-3
        assert se3.rotation_error_deg(res.transform, truth) < 0.2


def test_icp_error_monotone_per_iteration():
    cloud = _box_scan()
    truth = Pose.from_xy_yaw(0.3, -0.2, 0.15)
    res = icp(cloud, truth.transform_points(cloud), init=Pose.identity())
    assert len(res.history) == res.iterations
    for err_before, err_after, n_pairs in res.history:
        assert err_after <= err_before + 1e-12
        assert n_pairs > 0


def test_icp_disjoint_clouds_raise():
    cloud = _box_scan()
    far = cloud + np.array([100.0, 0.0, 0.0])
    with pytest.raises(NoCorrespondences):
        icp(cloud, far, params=IcpParams(max_corr_dist=1.0))


def test_icp_too_few_points():
    with pytest.raises(TooFewPoints):
        icp(np.zeros((3, 3)), _box_scan())
    with pytest.raises(TooFewPoints):
        icp(_box_scan(), np.zeros((9, 3)))


def test_icp_respects_iteration_cap():
    cloud = _box_scan()
    target = Pose.from_xy_yaw(0.4, 0.1, 0.2).transform_points(cloud)
    res = icp(cloud, target, params=IcpParams(max_iterations=2, convergence_eps=1e-12))
    assert res.iterations == 2
    assert not res.converged


def test_icp_params_validated():
    with pytest.raises(ValueError):
        IcpParams(max_corr_dist=0.0)
    with pytest.raises(ValueError):
        IcpParams(fitness_threshold=-1.0)


# ------------------------------------------------------- covariance, voxels


def test_adaptive_covariance_values():
    floor = adaptive_covariance(0.0)
    assert np.allclose(floor, 1e-4 * np.diag([1, 1, 1, 4, 4, 4]))
    cov = adaptive_covariance(0.01)
    assert np.allclose(np.diag(cov), [0.01, 0.01, 0.01, 0.04, 0.04, 0.04])
    assert np.allclose(cov, cov.T)
    assert (np.linalg.eigvalsh(cov) > 0).all()


def test_adaptive_covariance_monotone():
    lo, hi = adaptive_covariance(0.02), adaptive_covariance(0.05)
    assert (np.diag(hi) >= np.diag(lo)).all()
    with pytest.raises(ValueError):
        adaptive_covariance(-0.1)


def test_voxel_downsample_averages_cells():
    pts = np.array(
        [[0.01, 0.01, 0.01], [0.09, 0.01, 0.01], [0.55, 0.0, 0.0]],
    )
    out = voxel_downsample(pts, 0.1)
    assert len(out) == 2
    assert np.allclose(sorted(out[:, 0]), [0.05, 0.55])


def test_voxel_downsample_edge_cases():
    assert voxel_downsample(np.zeros((0, 3)), 0.1).shape == (0, 3)
    pts = np.random.default_rng(0).normal(size=(100, 3))
    assert np.array_equal(voxel_downsample(pts, 0.0), pts)
    dense = np.random.default_rng(1).uniform(0, 1, size=(5000, 3))
    assert len(voxel_downsample(dense, 0.25)) <= 64


def test_voxel_downsample_deterministic():
    pts = np.random.default_rng(2).normal(size=(500, 3))
    assert np.array_equal(voxel_downsample(pts, 0.2), voxel_downsample(pts, 0.2))


# ------------------------------------------------------------ local submap


def test_local_submap_merges_neighbours(small_session):
    s = small_session
    i = 2
    sub = local_submap(s, i, half_width=1)
    want = len(s.clouds[1]) + len(s.clouds[2]) + len(s.clouds[3])
    assert len(sub) == want
    # own cloud appears unmoved, neighbours re-expressed in frame i
    assert np.allclose(sub[len(s.clouds[1]) : len(s.clouds[1]) + len(s.clouds[2])], s.clouds[2])


def test_local_submap_clamps_at_ends(small_session):
    s = small_session
    first = local_submap(s, 0, half_width=2)
    assert len(first) == sum(len(c) for c in s.clouds[:3])
    last = local_submap(s, s.n - 1, half_width=2)
    assert len(last) == sum(len(c) for c in s.clouds[-3:])


# ------------------------------------------------------------- candidates


def _one_node_session(cloud: np.ndarray, pose: Pose | None = None) -> Session:
    return Session(
        graph=PoseGraph(nodes=[pose or Pose.identity()]),
        clouds=[cloud],
        descriptors=[compute_descriptor(cloud)],
    )


def test_candidates_self_match(small_session):
    cands = detect_candidates(small_session, small_session, current_anchor_guess=Pose.identity())
    pairs = {(c.i, c.j) for c in cands}
    assert {(i, i) for i in range(small_session.n)} <= pairs
    assert [(c.i, c.j) for c in cands] == sorted((c.i, c.j) for c in cands)


def test_candidates_descriptor_guess_wins(small_session):
    cands = detect_candidates(small_session, small_session, current_anchor_guess=Pose.identity())
    diag = {c for c in cands if c.i == c.j}
    assert diag and all(c.route == "descriptor" for c in diag)
    # descriptor inits are yaw-only
    assert all(np.allclose(c.init.t, 0.0) for c in diag)


def test_candidates_far_anchor_no_proximity(small_session):
    stripped = Session(
        graph=small_session.graph, clouds=small_session.clouds, descriptors=None
    )
    far = Pose.from_xy_yaw(100.0, 0.0, 0.0)
    assert detect_candidates(stripped, stripped, current_anchor_guess=far) == []


def test_candidates_rotated_query_yaw_within_one_sector():
    cloud = _box_scan()
    rotated = Pose.from_xy_yaw(0.0, 0.0, np.pi / 2).transform_points(cloud)
    ref = _one_node_session(cloud)
    qry = _one_node_session(rotated)
    cands = detect_candidates(ref, qry)
    assert [(c.i, c.j) for c in cands] == [(0, 0)]
    # a cloud rotated by +90 deg means the query sensor is yawed -90 deg
    err = abs(np.arctan2(np.sin(cands[0].init.yaw() + np.pi / 2), np.cos(cands[0].init.yaw() + np.pi / 2)))
    assert np.degrees(err) <= 6.0 + 1e-9


def test_candidates_proximity_picks_nearest(small_session):
    s = small_session
    stripped = Session(graph=s.graph, clouds=s.clouds, descriptors=None)
    # nudge the whole query 0.4 m; nearest reference node is still index j
    guess = Pose.from_xy_yaw(0.4, 0.0, 0.0)
    cands = detect_candidates(stripped, stripped, current_anchor_guess=guess, radius=10.0)
    assert all(c.route == "proximity" for c in cands)
    assert len({c.j for c in cands}) == len(cands)  # one candidate per query node


def test_candidates_world_poses_override(small_session):
    s = small_session
    stripped = Session(graph=s.graph, clouds=s.clouds, descriptors=None)
    world = [se3.compose(Pose.from_xy_yaw(0.1, 0.0, 0.0), p) for p in s.graph.nodes]
    cands = detect_candidates(
        stripped, stripped, current_anchor_guess=Pose.from_xy_yaw(500.0, 0.0, 0.0),
        query_world_poses=world,
    )
    assert len(cands) == s.n


def test_candidates_empty_sessions_rejected(small_session):
    empty = Session(graph=PoseGraph(), clouds=[])
    with pytest.raises(ValueError):
        detect_candidates(empty, small_session)
    with pytest.raises(ValueError):
        detect_candidates(small_session, empty)


# ------------------------------------------------------------- encounters


def test_encounters_identical_sessions(small_session):
    s = small_session
    encounters, report = build_encounters(s, s, anchor_guess=Pose.identity())
    assert len(encounters) >= s.n
    assert report["registered"] == len(encounters)
    assert report["candidates"] >= len(encounters)
    params = IcpParams()
    for e in encounters:
        assert e.fitness <= params.fitness_threshold
        # frame consistency: reference pose composed with the relative lands
        # on the query pose (identical sessions: world frames coincide)
        want = s.graph.nodes[e.j]
        got = se3.compose(s.graph.nodes[e.i], e.relative)
        assert se3.translation_error_m(got, want) < 1e-3
    # self pairs register to the identity; fitness stays finite because the
    # target is a voxel-averaged submap rather than the raw cloud
    diag = [e for e in encounters if e.i == e.j]
    assert diag
    for e in diag:
        assert se3.translation_error_m(e.relative, Pose.identity()) < 5e-3
        assert se3.rotation_error_deg(e.relative, Pose.identity()) < 0.1
    assert [(e.i, e.j) for e in encounters] == sorted((e.i, e.j) for e in encounters)


def test_encounters_noise_cloud_rejected(small_session):
    s = small_session
    noisy_clouds = list(s.clouds)
    noisy_clouds[2] = np.random.default_rng(0).uniform(-3, 3, size=(800, 3))
    query = Session(
        graph=s.graph,
        clouds=noisy_clouds,
        descriptors=[compute_descriptor(c) for c in noisy_clouds],
    )
    encounters, report = build_encounters(s, query, anchor_guess=Pose.identity())
    assert report["rejected_fitness"] + report["rejected_error"] >= 1
    assert all(e.j != 2 for e in encounters)


def test_encounters_no_candidates(small_session):
    s = small_session
    stripped = Session(graph=s.graph, clouds=s.clouds, descriptors=None)
    encounters, report = build_encounters(stripped, stripped)
    assert encounters == []
    assert report == {
        "candidates": 0,
        "registered": 0,
        "rejected_fitness": 0,
        "rejected_error": 0,
    }


def test_encounter_validation():
    from mapanchor.registration import Encounter

    with pytest.raises(ValueError):
        Encounter(0, 0, Pose.identity(), np.eye(5), 0.0)
    with pytest.raises(ValueError):
        Encounter(0, 0, Pose.identity(), np.eye(6), -1.0)


# ----------------------------------------------------------- initial anchor


def test_initial_anchor_identity_for_same_session(small_session):
    anchor, match = estimate_initial_anchor(small_session, small_session)
    assert match is not None
    assert se3.translation_error_m(anchor, Pose.identity()) < 1e-3
    assert se3.rotation_error_deg(anchor, Pose.identity()) < 0.1


def test_initial_anchor_recovers_global_offset(small_session):
    offset = Pose.from_xy_yaw(2.0, -1.0, 0.6)
    query = apply_global_offset(small_session, offset)
    anchor, match = estimate_initial_anchor(small_session, query)
    assert match is not None
    # anchor maps stored query poses back onto the reference frame
    assert se3.translation_error_m(anchor, se3.inverse(offset)) < 1e-3
    assert se3.rotation_error_deg(anchor, se3.inverse(offset)) < 0.1


def test_initial_anchor_without_descriptors(small_session):
    s = small_session
    stripped = Session(graph=s.graph, clouds=s.clouds, descriptors=None)
    anchor, match = estimate_initial_anchor(stripped, stripped)
    assert match is None
    assert se3.translation_error_m(anchor, Pose.identity()) == 0.0


# ---------------------------------------------------------------- dump file


def test_save_encounters_format(tmp_path, small_session):
    s = small_session
    encounters, _ = build_encounters(s, s, anchor_guess=Pose.identity())
    path = tmp_path / "enc.txt"
    save_encounters(encounters, path)
    lines = path.read_text().splitlines()
    assert len(lines) == len(encounters)
    first = lines[0].split()
    assert len(first) == 10
    assert int(first[0]) == encounters[0].i and int(first[1]) == encounters[0].j
    assert float(first[9]) == pytest.approx(encounters[0].fitness, abs=1e-9)
    save_encounters([], tmp_path / "empty.txt")
    assert (tmp_path / "empty.txt").read_text() == ""