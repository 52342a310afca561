"""Input validation helpers shared by the public entry points."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .exceptions import DimensionMismatch, LengthMismatch, TooFewPoints


def as_points(x, name: str = "points", min_points: int = 0) -> np.ndarray:
    """Coerce to a contiguous (N, 3) float64 array of finite points."""
    arr = np.ascontiguousarray(x, dtype=float)
    if arr.size == 0:
        arr = arr.reshape(0, 3)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise DimensionMismatch(f"{name} must have shape (N, 3), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    if arr.shape[0] < min_points:
        raise TooFewPoints(f"{name} needs at least {min_points} points, got {arr.shape[0]}")
    return arr


def as_information(m, name: str = "information") -> np.ndarray:
    """Coerce to a symmetric positive-definite 6x6 float64 matrix."""
    arr = np.asarray(m, dtype=float)
    if arr.shape != (6, 6):
        raise DimensionMismatch(f"{name} must be 6x6, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    if not np.allclose(arr, arr.T, atol=1e-9):
        raise ValueError(f"{name} must be symmetric")
    eigvals = np.linalg.eigvalsh(arr)
    if eigvals[0] <= 0:
        raise ValueError(f"{name} must be positive definite (min eigenvalue {eigvals[0]:.3e})")
    return arr


def check_same_length(a: Sequence, b: Sequence, what: str = "sequences") -> None:
    if len(a) != len(b):
        raise LengthMismatch(f"{what} differ in length: {len(a)} vs {len(b)}")


def check_positive(value: float, name: str) -> float:
    value = float(value)
    if not value > 0:
        raise ValueError(f"{name} must be positive, got {value}")
    return value


def check_nonnegative(value: float, name: str) -> float:
    value = float(value)
    if value < 0:
        raise ValueError(f"{name} must be >= 0, got {value}")
    return value
