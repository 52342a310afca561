"""End-to-end alignment of a query session against a reference session."""

from __future__ import annotations

from sklearn.base import BaseEstimator

from .. import se3
from ..registration import IcpParams, build_encounters, estimate_initial_anchor
from ..se3 import Pose
from ..session import Session
from .factors import LOOSE_VAR, PINNED_VAR, build_graph, initial_values
from .solver import assemble_map, optimize, to_global


class SessionAnchorer(BaseEstimator):
    """Estimate the rigid anchor placing a query session in the reference frame.

    fit() bootstraps an anchor guess from the best global descriptor match,
    then alternates encounter detection and graph optimisation.  The second
    round re-detects with the solved world poses, which recovers encounters
    the initial guess was too far off to gate in.

    Attributes after fit: ``query_anchor_``, ``reference_anchor_``,
    ``solution_``, ``encounters_``, ``report_``, ``query_world_trajectory_``,
    ``reference_world_trajectory_``, ``initial_anchor_``, ``initial_match_``.
    """

    def __init__(
        self,
        proximity_radius: float = 10.0,
        sc_threshold: float = 0.6,
        max_corr_dist: float = 2.0,
        max_iterations: int = 60,
        convergence_eps: float = 1e-6,
        fitness_threshold: float = 0.04,
        voxel: float = 0.1,
        pinned_var: float = PINNED_VAR,
        loose_var: float = LOOSE_VAR,
        rounds: int = 2,
    ):
        self.proximity_radius = proximity_radius
        self.sc_threshold = sc_threshold
        self.max_corr_dist = max_corr_dist
        self.max_iterations = max_iterations
        self.convergence_eps = convergence_eps
        self.fitness_threshold = fitness_threshold
        self.voxel = voxel
        self.pinned_var = pinned_var
        self.loose_var = loose_var
        self.rounds = rounds

    def _icp_params(self) -> IcpParams:
        return IcpParams(
            max_corr_dist=self.max_corr_dist,
            max_iterations=self.max_iterations,
            convergence_eps=self.convergence_eps,
            fitness_threshold=self.fitness_threshold,
        )

    def fit(self, reference: Session, query: Session) -> "SessionAnchorer":
        if self.rounds < 1:
            raise ValueError("rounds must be at least 1")
        params = self._icp_params()
        anchor, match = estimate_initial_anchor(
            reference, query, icp_params=params, sc_threshold=self.sc_threshold, voxel=self.voxel
        )
        self.initial_anchor_ = anchor
        self.initial_match_ = match

        world_poses = None
        for _ in range(self.rounds):
            encounters, report = build_encounters(
                reference,
                query,
                anchor_guess=anchor,
                radius=self.proximity_radius,
                sc_threshold=self.sc_threshold,
                icp_params=params,
                query_world_poses=world_poses,
                voxel=self.voxel,
            )
            graph = build_graph(
                reference,
                query,
                encounters,
                anchor_init=anchor,
                pinned_var=self.pinned_var,
                loose_var=self.loose_var,
            )
            solution = optimize(graph, initial_values(reference, query, anchor))
            anchor = solution.values["query_anchor"]
            world_poses = to_global(solution, "query")

        self.reference_ = reference
        self.query_ = query
        self.encounters_ = encounters
        self.report_ = report
        self.solution_ = solution
        self.query_anchor_ = anchor
        self.reference_anchor_ = solution.values["ref_anchor"]
        self.query_world_trajectory_ = world_poses
        self.reference_world_trajectory_ = to_global(solution, "ref")
        return self

    def transform(self, poses: list[Pose] | None = None) -> list[Pose]:
        """Map query-local poses into the reference frame via the fitted anchor."""
        if not hasattr(self, "query_anchor_"):
            raise ValueError("fit must run before transform")
        if poses is None:
            return list(self.query_world_trajectory_)
        return [se3.compose(self.query_anchor_, p) for p in poses]

    def fit_transform(self, reference: Session, query: Session) -> list[Pose]:
        return self.fit(reference, query).transform()

    def assemble_query_map(self):
        if not hasattr(self, "query_anchor_"):
            raise ValueError("fit must run before assembling the map")
        return assemble_map(self.query_, self.query_world_trajectory_)

    def assemble_reference_map(self):
        if not hasattr(self, "query_anchor_"):
            raise ValueError("fit must run before assembling the map")
        return assemble_map(self.reference_, self.reference_world_trajectory_)
