"""Multi-session data model: pose graphs plus per-keyframe payloads.

A session couples a pose graph with one point cloud (and optionally one
place-recognition descriptor) per node.  Node ids are dense 0..n-1 and double
as list indices everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import se3
from .exceptions import LengthMismatch
from .se3 import Pose
from .validation import as_information, as_points, check_positive


@dataclass(eq=False)
class GraphEdge:
    """Relative-pose constraint from node ``i`` to node ``j``."""

    i: int
    j: int
    relative: Pose
    information: np.ndarray = field(default_factory=lambda: np.eye(6))

    def __post_init__(self):
        self.information = as_information(self.information)


@dataclass(eq=False)
class PoseGraph:
    nodes: list[Pose] = field(default_factory=list)
    odometry_edges: list[GraphEdge] = field(default_factory=list)
    loop_edges: list[GraphEdge] = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.nodes)

    def validate(self) -> None:
        n = self.n
        for e in self.odometry_edges:
            if not (0 <= e.i < n and 0 <= e.j < n):
                raise IndexError(f"odometry edge {e.i}->{e.j} outside 0..{n - 1}")
            if e.j != e.i + 1:
                raise ValueError(f"odometry edge {e.i}->{e.j} must connect consecutive nodes")
        for e in self.loop_edges:
            if not (0 <= e.i < n and 0 <= e.j < n):
                raise IndexError(f"loop edge {e.i}->{e.j} outside 0..{n - 1}")

    def replay(self) -> list[Pose]:
        """Chain odometry edges from node 0; equals stored poses when drift-free."""
        if not self.nodes:
            return []
        poses = [self.nodes[0]]
        by_start = {e.i: e for e in self.odometry_edges}
        for i in range(len(self.nodes) - 1):
            edge = by_start.get(i)
            if edge is None:
                raise ValueError(f"no odometry edge leaving node {i}")
            poses.append(se3.compose(poses[-1], edge.relative))
        return poses


@dataclass(eq=False)
class Session:
    """One mapping run: graph ``G`` plus per-keyframe clouds and descriptors."""

    graph: PoseGraph
    clouds: list[np.ndarray]
    descriptors: list | None = None
    frame_label: str = "local"
    spacing: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.clouds = [as_points(c, f"cloud {k}") for k, c in enumerate(self.clouds)]
        self.validate()

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def keyframes(self) -> list[tuple]:
        desc = self.descriptors if self.descriptors is not None else [None] * self.n
        return list(zip(self.clouds, desc))

    def validate(self) -> None:
        self.graph.validate()
        if len(self.clouds) != self.graph.n:
            raise LengthMismatch(
                f"{len(self.clouds)} clouds for {self.graph.n} pose nodes"
            )
        if self.descriptors is not None and len(self.descriptors) != self.graph.n:
            raise LengthMismatch(
                f"{len(self.descriptors)} descriptors for {self.graph.n} pose nodes"
            )


def sample_indices(poses: list[Pose], spacing: float) -> list[int]:
    """Indices kept by equidistant sampling: the first pose, then every pose at
    which the translational path length since the last kept pose reaches
    ``spacing`` (1e-9 slack absorbs float accumulation)."""
    check_positive(spacing, "spacing")
    if not poses:
        raise ValueError("trajectory must be nonempty")
    kept = [0]
    acc = 0.0
    for k in range(1, len(poses)):
        acc += float(np.linalg.norm(poses[k].t - poses[k - 1].t))
        if acc >= spacing - 1e-9:
            kept.append(k)
            acc = 0.0
    return kept


def sample_keyframes(
    trajectory: list[tuple[Pose, np.ndarray]],
    spacing: float = 1.0,
    frame_label: str = "local",
) -> Session:
    """Pick equidistant keyframes from a dense trajectory of (pose, cloud) pairs.

    Odometry edges carry the exact relative pose between kept neighbours with
    identity information.
    """
    kept = sample_indices([p for p, _ in trajectory], spacing)
    nodes = [trajectory[k][0] for k in kept]
    clouds = [trajectory[k][1] for k in kept]
    edges = [
        GraphEdge(i, i + 1, se3.between(nodes[i], nodes[i + 1]), np.eye(6))
        for i in range(len(nodes) - 1)
    ]
    graph = PoseGraph(nodes=nodes, odometry_edges=edges)
    return Session(graph=graph, clouds=clouds, frame_label=frame_label, spacing=spacing)
