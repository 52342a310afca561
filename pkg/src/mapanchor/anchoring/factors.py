"""Anchor-node factor graph linking two sessions.

Variables are the reference poses ("ref", i), the query poses ("query", j),
and one anchor per session ("ref_anchor", "query_anchor").  Reference poses
and the reference anchor are pinned by near-zero-variance priors; the query
anchor gets a deliberately loose prior so inter-session encounters decide the
alignment.  Its measurement model compares the anchored world-frame relative
pose of an encounter pair against the registered relative pose.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cholesky, solve_triangular

from .. import se3
from ..registration import Encounter
from ..se3 import Pose
from ..session import Session
from ..validation import as_information

PINNED_VAR = 1e-12
LOOSE_VAR = 1e4

VarKey = tuple[str, int] | str


def anchor_residual(
    ref_pose: Pose, query_pose: Pose, ref_anchor: Pose, query_anchor: Pose, relative: Pose
) -> np.ndarray:
    """Mismatch between the anchored frames and a registered encounter.

    Zero exactly when between(ref_anchor * ref_pose, query_anchor * query_pose)
    equals the encounter's relative pose.  Invariant under left-composing both
    anchors with a common rigid motion, which is the gauge freedom the
    reference priors remove.
    """
    world_i = se3.compose(ref_anchor, ref_pose)
    world_j = se3.compose(query_anchor, query_pose)
    return se3.log(se3.between(relative, se3.between(world_i, world_j))).vector()


def _whitener_from_covariance(cov: np.ndarray) -> np.ndarray:
    # ||W r||^2 == r^T cov^-1 r with W the inverse lower Cholesky factor.
    low = cholesky(cov, lower=True)
    return solve_triangular(low, np.eye(6), lower=True)


def _whitener_from_information(info: np.ndarray) -> np.ndarray:
    return cholesky(info, lower=True).T


@dataclass(eq=False)
class PriorFactor:
    var: VarKey
    value: Pose
    variance: float

    def __post_init__(self):
        if not self.variance > 0:
            raise ValueError(f"prior variance must be positive, got {self.variance}")
        self.whitener = np.eye(6) / np.sqrt(self.variance)

    @property
    def variables(self) -> tuple[VarKey, ...]:
        return (self.var,)

    def residual(self, values: dict) -> np.ndarray:
        return se3.log(se3.between(self.value, values[self.var])).vector()


@dataclass(eq=False)
class BetweenFactor:
    var_a: VarKey
    var_b: VarKey
    measured: Pose
    information: np.ndarray

    def __post_init__(self):
        self.information = as_information(self.information)
        self.whitener = _whitener_from_information(self.information)

    @property
    def variables(self) -> tuple[VarKey, ...]:
        return (self.var_a, self.var_b)

    def residual(self, values: dict) -> np.ndarray:
        predicted = se3.between(values[self.var_a], values[self.var_b])
        return se3.log(se3.between(self.measured, predicted)).vector()


@dataclass(eq=False)
class AnchorLoopFactor:
    ref_index: int
    query_index: int
    relative: Pose
    covariance: np.ndarray

    def __post_init__(self):
        self.covariance = as_information(self.covariance)  # SPD check, same contract
        self.whitener = _whitener_from_covariance(self.covariance)

    @property
    def variables(self) -> tuple[VarKey, ...]:
        return (("ref", self.ref_index), ("query", self.query_index), "ref_anchor", "query_anchor")

    def residual(self, values: dict) -> np.ndarray:
        return anchor_residual(
            values[("ref", self.ref_index)],
            values[("query", self.query_index)],
            values["ref_anchor"],
            values["query_anchor"],
            self.relative,
        )


@dataclass(eq=False)
class FactorGraph:
    variables: list[VarKey] = field(default_factory=list)
    factors: list = field(default_factory=list)

    def validate(self) -> None:
        declared = set(self.variables)
        referenced: set[VarKey] = set()
        for f in self.factors:
            for v in f.variables:
                if v not in declared:
                    raise ValueError(f"factor references undeclared variable {v!r}")
                referenced.add(v)
        unused = declared - referenced
        if unused:
            raise ValueError(f"variables never referenced by any factor: {sorted(map(str, unused))}")

    def counts(self) -> dict[str, int]:
        out = {"prior": 0, "between": 0, "anchor_loop": 0}
        for f in self.factors:
            if isinstance(f, PriorFactor):
                out["prior"] += 1
            elif isinstance(f, BetweenFactor):
                out["between"] += 1
            else:
                out["anchor_loop"] += 1
        return out


def build_graph(
    reference: Session,
    query: Session,
    encounters: list[Encounter],
    anchor_init: Pose | None = None,
    pinned_var: float = PINNED_VAR,
    loose_var: float = LOOSE_VAR,
) -> FactorGraph:
    """Assemble the two-session anchored graph.

    Priors pin every reference pose and the reference anchor at ``pinned_var``;
    the query anchor starts at ``anchor_init`` under a ``loose_var`` prior.
    Both sessions contribute their odometry and stored loop edges; each
    encounter adds one anchor-loop factor.
    """
    anchor_init = anchor_init or Pose.identity()
    variables: list[VarKey] = [("ref", i) for i in range(reference.n)]
    variables += [("query", j) for j in range(query.n)]
    variables += ["ref_anchor", "query_anchor"]

    factors: list = []
    for i, pose in enumerate(reference.graph.nodes):
        factors.append(PriorFactor(("ref", i), pose, pinned_var))
    factors.append(PriorFactor("ref_anchor", Pose.identity(), pinned_var))
    factors.append(PriorFactor("query_anchor", anchor_init, loose_var))

    for name, sess in (("ref", reference), ("query", query)):
        for e in list(sess.graph.odometry_edges) + list(sess.graph.loop_edges):
            factors.append(BetweenFactor((name, e.i), (name, e.j), e.relative, e.information))

    for enc in encounters:
        if not (0 <= enc.i < reference.n):
            raise IndexError(f"encounter reference index {enc.i} outside 0..{reference.n - 1}")
        if not (0 <= enc.j < query.n):
            raise IndexError(f"encounter query index {enc.j} outside 0..{query.n - 1}")
        factors.append(AnchorLoopFactor(enc.i, enc.j, enc.relative, enc.covariance))

    return FactorGraph(variables=variables, factors=factors)


def initial_values(
    reference: Session, query: Session, anchor_init: Pose | None = None
) -> dict[VarKey, Pose]:
    """Start the solve from stored poses, identity reference anchor, and the guess."""
    values: dict[VarKey, Pose] = {("ref", i): p for i, p in enumerate(reference.graph.nodes)}
    values.update({("query", j): p for j, p in enumerate(query.graph.nodes)})
    values["ref_anchor"] = Pose.identity()
    values["query_anchor"] = anchor_init or Pose.identity()
    return values
