from .anchorer import SessionAnchorer
from .factors import (
    LOOSE_VAR,
    PINNED_VAR,
    AnchorLoopFactor,
    BetweenFactor,
    FactorGraph,
    PriorFactor,
    anchor_residual,
    build_graph,
    initial_values,
)
from .solver import Solution, assemble_map, optimize, to_global

__all__ = [
    "AnchorLoopFactor",
    "BetweenFactor",
    "FactorGraph",
    "LOOSE_VAR",
    "PINNED_VAR",
    "PriorFactor",
    "SessionAnchorer",
    "Solution",
    "anchor_residual",
    "assemble_map",
    "build_graph",
    "initial_values",
    "optimize",
    "to_global",
]
