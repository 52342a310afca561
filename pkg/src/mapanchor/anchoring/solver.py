"""Batch Levenberg-Marquardt over the anchored factor graph.

State lives on the manifold: each accepted step retracts x <- x * exp(delta)
per variable.  Jacobians are central differences of the whitened residuals,
which keeps the factor implementations free of analytic derivative code at
the cost of a constant factor in solve time.  Graph sizes here are a few
hundred variables, so dense normal equations are fine.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .. import se3
from ..exceptions import LengthMismatch, SingularSystem
from ..se3 import Pose, Twist
from ..session import Session
from .factors import FactorGraph, VarKey

_JAC_STEP = 1e-6
_REL_DECREASE = 1e-9
_STEP_NORM = 1e-10
_MAX_ITERATIONS = 100
_LAMBDA_INIT = 1e-6
_LAMBDA_MAX = 1e12


@dataclass
class Solution:
    values: dict[VarKey, Pose]
    final_error: float
    iterations: int
    converged: bool


def _whitened_stack(graph: FactorGraph, values: dict[VarKey, Pose]) -> np.ndarray:
    rows = np.empty(6 * len(graph.factors))
    for k, f in enumerate(graph.factors):
        rows[6 * k : 6 * k + 6] = f.whitener @ f.residual(values)
    return rows


def _chi2(stack: np.ndarray) -> float:
    return float(stack @ stack)


def _jacobian(
    graph: FactorGraph, values: dict[VarKey, Pose], columns: dict[VarKey, int]
) -> np.ndarray:
    n_rows = 6 * len(graph.factors)
    n_cols = 6 * len(columns)
    jac = np.zeros((n_rows, n_cols))
    scratch = dict(values)
    for k, f in enumerate(graph.factors):
        r0 = 6 * k
        for var in f.variables:
            base = values[var]
            c0 = 6 * columns[var]
            for axis in range(6):
                step = np.zeros(6)
                step[axis] = _JAC_STEP
                scratch[var] = se3.compose(base, se3.exp(Twist.from_vector(step)))
                plus = f.whitener @ f.residual(scratch)
                scratch[var] = se3.compose(base, se3.exp(Twist.from_vector(-step)))
                minus = f.whitener @ f.residual(scratch)
                jac[r0 : r0 + 6, c0 + axis] = (plus - minus) / (2.0 * _JAC_STEP)
            scratch[var] = base
    return jac


def _retract(values: dict[VarKey, Pose], delta: np.ndarray, columns: dict[VarKey, int]):
    out = {}
    for var, col in columns.items():
        step = delta[6 * col : 6 * col + 6]
        out[var] = se3.compose(values[var], se3.exp(Twist.from_vector(step)))
    return out


def optimize(graph: FactorGraph, init: dict[VarKey, Pose]) -> Solution:
    """Minimise the total squared whitened residual.

    Steps are only accepted when the error does not increase; the damping
    parameter is rescaled by the diagonal of the Gauss-Newton Hessian so the
    hugely different prior strengths (pinned vs loose) stay balanced.  Raises
    SingularSystem when the damped system stays unsolvable all the way up the
    damping schedule.
    """
    graph.validate()
    missing = [v for v in graph.variables if v not in init]
    if missing:
        raise ValueError(f"initial values missing for variables: {missing}")
    columns = {var: idx for idx, var in enumerate(graph.variables)}

    values = dict(init)
    stack = _whitened_stack(graph, values)
    error = _chi2(stack)
    lam = _LAMBDA_INIT
    iterations = 0
    converged = False

    for _ in range(_MAX_ITERATIONS):
        iterations += 1
        jac = _jacobian(graph, values, columns)
        grad = jac.T @ stack
        hess = jac.T @ jac
        diag = np.diag(hess).copy()
        diag[diag < 1e-12] = 1e-12

        accepted = False
        while lam <= _LAMBDA_MAX:
            damped = hess + lam * np.diag(diag)
            try:
                delta = cho_solve(cho_factor(damped), -grad)
            except LinAlgError:
                lam *= 10.0
                continue
            if not np.all(np.isfinite(delta)):
                lam *= 10.0
                continue
            trial = _retract(values, delta, columns)
            trial_stack = _whitened_stack(graph, trial)
            trial_error = _chi2(trial_stack)
            if not np.isfinite(trial_error) or trial_error > error:
                lam *= 10.0
                continue
            accepted = True
            break
        if not accepted:
            if lam > _LAMBDA_MAX and not np.all(np.isfinite(stack)):
                raise SingularSystem("residuals diverged during optimisation")
            break

        step_norm = float(np.linalg.norm(delta))
        rel_decrease = (error - trial_error) / max(error, np.finfo(float).tiny)
        values, stack, error = trial, trial_stack, trial_error
        lam = max(lam / 3.0, 1e-12)
        if rel_decrease < _REL_DECREASE or step_norm < _STEP_NORM:
            converged = True
            break

    if not np.isfinite(error):
        raise SingularSystem("optimisation produced a non-finite error")
    return Solution(values=values, final_error=error, iterations=iterations, converged=converged)


def to_global(solution: Solution, which: str) -> list[Pose]:
    """World-frame trajectory of one session: anchor left-composed onto each pose."""
    if which not in ("ref", "query"):
        raise ValueError(f"session selector must be 'ref' or 'query', got {which!r}")
    anchor = solution.values[f"{which}_anchor"]
    indices = sorted(k[1] for k in solution.values if isinstance(k, tuple) and k[0] == which)
    return [se3.compose(anchor, solution.values[(which, i)]) for i in indices]


def assemble_map(session: Session, world_poses: list[Pose]) -> np.ndarray:
    """Concatenate every keyframe cloud transformed by its world pose."""
    if len(world_poses) != len(session.clouds):
        raise LengthMismatch(
            f"got {len(world_poses)} poses for {len(session.clouds)} keyframe clouds"
        )
    parts = [pose.transform_points(cloud) for pose, cloud in zip(world_poses, session.clouds)]
    if not parts:
        return np.empty((0, 3))
    return np.vstack(parts)
