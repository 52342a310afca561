"""Rigid-body poses on SE(3) with quaternion rotations.

Conventions used throughout the toolkit:

- A pose holds a translation ``t`` (3-vector, metres) and a unit quaternion
  ``q`` stored as ``(w, x, y, z)``.  ``q`` and ``-q`` describe the same
  rotation; construction canonicalises the sign so ``w >= 0``.
- ``compose(a, b)`` chains transforms: points are mapped by ``b`` first in
  ``a``'s frame, i.e. the homogeneous product ``A @ B``.
- Twist vectors order translation before rotation: ``[rho, phi]``.
- ``exp``/``log`` use the closed-form Rodrigues expressions with series
  fallbacks below 1e-8 radians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionMismatch, GimbalBoundary

_SMALL_ANGLE = 1e-8
_LOG_BOUNDARY = np.pi - 1e-6


def _skew(v: np.ndarray) -> np.ndarray:
    return np.array(
        [
            [0.0, -v[2], v[1]],
            [v[2], 0.0, -v[0]],
            [-v[1], v[0], 0.0],
        ]
    )


def _cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # np.cross has painful overhead for single 3-vectors; this path is hot.
    return np.array(
        [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    )


def _canonical(q: np.ndarray) -> np.ndarray:
    """Normalise and fix the double-cover sign (first nonzero component > 0)."""
    norm = math.sqrt(float(q @ q))
    if norm < 1e-8:
        raise ValueError("quaternion norm too small to normalise")
    q = q / norm
    w, x, y, z = q
    lead = w if w != 0.0 else (x if x != 0.0 else (y if y != 0.0 else z))
    if lead < 0.0:
        q = -q
    return q


@dataclass(frozen=True, eq=False)
class Twist:
    """Tangent-space element: translation part ``rho``, rotation part ``phi``."""

    rho: np.ndarray
    phi: np.ndarray

    def vector(self) -> np.ndarray:
        return np.concatenate([self.rho, self.phi])

    @staticmethod
    def from_vector(v: np.ndarray) -> "Twist":
        v = np.asarray(v, dtype=float).reshape(-1)
        if v.shape != (6,):
            raise DimensionMismatch(f"twist vector must have 6 entries, got {v.shape}")
        return Twist(rho=v[:3].copy(), phi=v[3:].copy())


@dataclass(frozen=True, eq=False)
class Pose:
    """SE(3) element with translation ``t`` and quaternion ``q = (w, x, y, z)``."""

    t: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        t = self.t
        q = self.q
        if not (isinstance(t, np.ndarray) and t.dtype == np.float64 and t.shape == (3,)):
            t = np.asarray(t, dtype=float).reshape(-1)
            if t.shape != (3,):
                raise DimensionMismatch(f"translation must have 3 entries, got {t.shape}")
            object.__setattr__(self, "t", t)
        if not (isinstance(q, np.ndarray) and q.dtype == np.float64 and q.shape == (4,)):
            q = np.asarray(q, dtype=float).reshape(-1)
            if q.shape != (4,):
                raise DimensionMismatch(f"quaternion must have 4 entries, got {q.shape}")
        # NaN or inf poisons the sums; one scalar check covers all 7 entries
        if not math.isfinite(float(t.sum()) + float(q.sum())):
            if not (np.all(np.isfinite(t)) and np.all(np.isfinite(q))):
                raise ValueError("pose components must be finite")
        object.__setattr__(self, "q", _canonical(q))

    @staticmethod
    def identity() -> "Pose":
        return Pose(np.zeros(3), np.array([1.0, 0.0, 0.0, 0.0]))

    @staticmethod
    def from_matrix(m: np.ndarray) -> "Pose":
        m = np.asarray(m, dtype=float)
        if m.shape != (4, 4):
            raise DimensionMismatch(f"homogeneous matrix must be 4x4, got {m.shape}")
        return Pose(m[:3, 3], _quat_from_matrix(m[:3, :3]))

    @staticmethod
    def from_xy_yaw(x: float, y: float, yaw: float, z: float = 0.0) -> "Pose":
        half = 0.5 * yaw
        return Pose(np.array([x, y, z]), np.array([np.cos(half), 0.0, 0.0, np.sin(half)]))

    def rotation_matrix(self) -> np.ndarray:
        w, x, y, z = self.q
        return np.array(
            [
                [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
                [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
                [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
            ]
        )

    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation_matrix()
        m[:3, 3] = self.t
        return m

    def transform_points(self, points: np.ndarray) -> np.ndarray:
        """Map an (N, 3) array of points from this pose's frame to the parent frame."""
        points = np.asarray(points, dtype=float)
        return points @ self.rotation_matrix().T + self.t

    def yaw(self) -> float:
        r = self.rotation_matrix()
        return float(np.arctan2(r[1, 0], r[0, 0]))

    def compose(self, other: "Pose") -> "Pose":
        return compose(self, other)

    def inverse(self) -> "Pose":
        return inverse(self)

    def __repr__(self) -> str:
        t = np.array2string(self.t, precision=4, suppress_small=True)
        q = np.array2string(self.q, precision=4, suppress_small=True)
        return f"Pose(t={t}, q={q})"


def _quat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def _quat_rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    # v' = v + w*u2v + u x u2v with u2v = 2 (u x v), expanded componentwise
    w, ux, uy, uz = q
    vx, vy, vz = v
    tx = 2.0 * (uy * vz - uz * vy)
    ty = 2.0 * (uz * vx - ux * vz)
    tz = 2.0 * (ux * vy - uy * vx)
    return np.array(
        [
            vx + w * tx + uy * tz - uz * ty,
            vy + w * ty + uz * tx - ux * tz,
            vz + w * tz + ux * ty - uy * tx,
        ]
    )


def _quat_from_matrix(r: np.ndarray) -> np.ndarray:
    # Shepperd's method: pick the largest diagonal combination for stability.
    tr = r[0, 0] + r[1, 1] + r[2, 2]
    if tr > 0:
        s = np.sqrt(tr + 1.0) * 2.0
        return np.array(
            [0.25 * s, (r[2, 1] - r[1, 2]) / s, (r[0, 2] - r[2, 0]) / s, (r[1, 0] - r[0, 1]) / s]
        )
    i = int(np.argmax([r[0, 0], r[1, 1], r[2, 2]]))
    if i == 0:
        s = np.sqrt(1.0 + r[0, 0] - r[1, 1] - r[2, 2]) * 2.0
        return np.array(
            [(r[2, 1] - r[1, 2]) / s, 0.25 * s, (r[0, 1] + r[1, 0]) / s, (r[0, 2] + r[2, 0]) / s]
        )
    if i == 1:
        s = np.sqrt(1.0 - r[0, 0] + r[1, 1] - r[2, 2]) * 2.0
        return np.array(
            [(r[0, 2] - r[2, 0]) / s, (r[0, 1] + r[1, 0]) / s, 0.25 * s, (r[1, 2] + r[2, 1]) / s]
        )
    s = np.sqrt(1.0 - r[0, 0] - r[1, 1] + r[2, 2]) * 2.0
    return np.array(
        [(r[1, 0] - r[0, 1]) / s, (r[0, 2] + r[2, 0]) / s, (r[1, 2] + r[2, 1]) / s, 0.25 * s]
    )


def compose(a: Pose, b: Pose) -> Pose:
    """Chain two poses: the result maps b-frame points through ``a``."""
    return Pose(a.t + _quat_rotate(a.q, b.t), _quat_mul(a.q, b.q))


def inverse(a: Pose) -> Pose:
    q_inv = np.array([a.q[0], -a.q[1], -a.q[2], -a.q[3]])
    return Pose(-_quat_rotate(q_inv, a.t), q_inv)


def between(a: Pose, b: Pose) -> Pose:
    """Relative pose of ``b`` expressed in ``a``'s frame: inverse(a) composed with b."""
    return compose(inverse(a), b)


def exp(twist: Twist | np.ndarray) -> Pose:
    """Exponential map from a twist to a pose (Rodrigues closed form)."""
    if not isinstance(twist, Twist):
        twist = Twist.from_vector(np.asarray(twist))
    rho = np.asarray(twist.rho, dtype=float).reshape(3)
    phi = np.asarray(twist.phi, dtype=float).reshape(3)
    theta = math.sqrt(float(phi @ phi))
    if theta < _SMALL_ANGLE:
        # Second-order series keeps exp/log consistent through zero rotation.
        a, b = 0.5, 1.0 / 6.0
        q = np.array([1.0, 0.5 * phi[0], 0.5 * phi[1], 0.5 * phi[2]])
    else:
        a = (1.0 - math.cos(theta)) / theta**2
        b = (theta - math.sin(theta)) / theta**3
        s = math.sin(0.5 * theta) / theta
        q = np.array([math.cos(0.5 * theta), s * phi[0], s * phi[1], s * phi[2]])
    # (I + a*K + b*K^2) rho written with cross products instead of matrices
    c1 = _cross(phi, rho)
    c2 = _cross(phi, c1)
    return Pose(rho + a * c1 + b * c2, q)


def log(pose: Pose) -> Twist:
    """Logarithm map from a pose to a twist.

    Raises GimbalBoundary when the rotation angle is within 1e-6 rad of pi,
    where the axis becomes numerically ill-determined.
    """
    w = pose.q[0]
    vec = pose.q[1:]
    sin_half = math.sqrt(float(vec @ vec))
    theta = 2.0 * math.atan2(sin_half, float(w))
    if theta >= _LOG_BOUNDARY:
        raise GimbalBoundary(f"rotation angle {theta:.9f} rad is too close to pi")
    if theta < _SMALL_ANGLE:
        phi = 2.0 * vec
        coef = 1.0 / 12.0
    else:
        phi = (theta / sin_half) * vec
        coef = (1.0 / theta**2) - (1.0 + math.cos(theta)) / (2.0 * theta * math.sin(theta))
    c1 = _cross(phi, pose.t)
    c2 = _cross(phi, c1)
    return Twist(rho=pose.t - 0.5 * c1 + coef * c2, phi=phi)


def rotation_error_deg(a: Pose, b: Pose) -> float:
    """Absolute angle of the relative rotation, in degrees within [0, 180]."""
    q = _quat_mul(np.array([a.q[0], -a.q[1], -a.q[2], -a.q[3]]), b.q)
    angle = 2.0 * np.arctan2(float(np.linalg.norm(q[1:])), abs(float(q[0])))
    return float(np.degrees(angle))


def translation_error_m(a: Pose, b: Pose) -> float:
    return float(np.linalg.norm(a.t - b.t))
