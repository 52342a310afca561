"""Polar-context descriptors for LiDAR place recognition.

A descriptor is a rings-by-sectors matrix of maximum point heights around the
sensor, compared under cyclic sector shifts so that pure yaw differences cost
nothing.  A compact per-ring occupancy vector (the ring key) prefilters
database queries before the exact shift search.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .exceptions import DimensionMismatch, FormatError
from .validation import as_points, check_positive

DEFAULT_RINGS = 20
DEFAULT_SECTORS = 60
DEFAULT_MAX_RADIUS = 10.0
DEFAULT_SENSOR_HEIGHT = 0.5

_MAGIC = b"SCDESC01"


@dataclass(eq=False)
class Descriptor:
    """Max-height polar image plus its ring occupancy key."""

    matrix: np.ndarray
    ring_key: np.ndarray
    max_radius: float = DEFAULT_MAX_RADIUS

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)
        self.ring_key = np.asarray(self.ring_key, dtype=float).reshape(-1)
        if self.matrix.ndim != 2:
            raise DimensionMismatch(f"descriptor matrix must be 2-D, got {self.matrix.shape}")
        if self.ring_key.shape[0] != self.matrix.shape[0]:
            raise DimensionMismatch("ring key length must equal ring count")

    @property
    def rings(self) -> int:
        return self.matrix.shape[0]

    @property
    def sectors(self) -> int:
        return self.matrix.shape[1]


def compute_descriptor(
    cloud: np.ndarray,
    max_radius: float = DEFAULT_MAX_RADIUS,
    rings: int = DEFAULT_RINGS,
    sectors: int = DEFAULT_SECTORS,
    sensor_height: float = DEFAULT_SENSOR_HEIGHT,
) -> Descriptor:
    """Bin a sensor-frame cloud into a max-height polar image.

    Heights are shifted up by ``sensor_height`` and clamped at zero so that an
    empty cell (0) never exceeds a real return; planar range beyond
    ``max_radius`` is dropped.
    """
    check_positive(max_radius, "max_radius")
    pts = as_points(cloud)
    matrix = np.zeros((rings, sectors))
    if len(pts):
        rng_planar = np.hypot(pts[:, 0], pts[:, 1])
        keep = rng_planar < max_radius
        pts = pts[keep]
        rng_planar = rng_planar[keep]
    if len(pts):
        ring = np.minimum((rng_planar / (max_radius / rings)).astype(int), rings - 1)
        az = np.arctan2(pts[:, 1], pts[:, 0])
        az = np.where(az < 0, az + 2 * np.pi, az)
        sector = np.minimum((az / (2 * np.pi / sectors)).astype(int), sectors - 1)
        height = np.maximum(pts[:, 2] + sensor_height, 0.0)
        np.maximum.at(matrix, (ring, sector), height)
    ring_key = np.count_nonzero(matrix, axis=1) / sectors
    return Descriptor(matrix=matrix, ring_key=ring_key, max_radius=max_radius)


def _shift_stack(b: np.ndarray) -> np.ndarray:
    """All cyclic column shifts of ``b``: stack[s][:, c] = b[:, (c+s) mod S]."""
    s = b.shape[1]
    return np.stack([np.roll(b, -k, axis=1) for k in range(s)])


def descriptor_distance(a: Descriptor, b: Descriptor) -> tuple[float, int]:
    """Best cyclic-shift column-cosine distance between two descriptors.

    Returns (distance in [0, 1], argmin sector shift).  Column pairs where
    either column is all-zero are skipped; a shift with no comparable columns
    scores 1.
    """
    if a.matrix.shape != b.matrix.shape:
        raise DimensionMismatch(
            f"descriptor shapes differ: {a.matrix.shape} vs {b.matrix.shape}"
        )
    am = a.matrix
    stack = _shift_stack(b.matrix)
    dots = np.einsum("rc,src->sc", am, stack)
    a_norm = np.linalg.norm(am, axis=0)
    b_norm = np.linalg.norm(stack, axis=1)
    valid = (a_norm[None, :] > 0) & (b_norm > 0)
    cos = np.zeros_like(dots)
    np.divide(dots, a_norm[None, :] * b_norm, out=cos, where=valid)
    counts = valid.sum(axis=1)
    sums = np.where(valid, 1.0 - cos, 0.0).sum(axis=1)
    dist = np.where(counts > 0, sums / np.maximum(counts, 1), 1.0)
    best = int(np.argmin(dist))
    return float(dist[best]), best


class QueryMatch(NamedTuple):
    index: int
    similarity: float
    shift: int


def query(
    db: list[Descriptor],
    probe: Descriptor,
    sim_threshold: float = 0.6,
    top_k: int | None = None,
    prefilter_k: int = 10,
) -> list[QueryMatch]:
    """Find database descriptors similar to the probe.

    Ring-key Euclidean distance narrows the database to ``prefilter_k``
    entries, then the exact shift-minimised distance ranks them; only matches
    with similarity (1 - distance) >= sim_threshold survive.
    """
    if not db:
        raise ValueError("descriptor database is empty")
    keys = np.stack([d.ring_key for d in db])
    key_dist = np.linalg.norm(keys - probe.ring_key[None, :], axis=1)
    order = np.argsort(key_dist, kind="stable")[: min(prefilter_k, len(db))]
    matches = []
    for idx in order:
        dist, shift = descriptor_distance(db[idx], probe)
        sim = 1.0 - dist
        if sim >= sim_threshold:
            matches.append(QueryMatch(int(idx), float(sim), int(shift)))
    matches.sort(key=lambda m: (-m.similarity, m.index))
    if top_k is not None:
        matches = matches[:top_k]
    return matches


def descriptor_to_bytes(d: Descriptor) -> bytes:
    head = _MAGIC + struct.pack("<II", d.rings, d.sectors)
    body = d.matrix.astype("<f4").tobytes() + d.ring_key.astype("<f4").tobytes()
    return head + body


def descriptor_from_bytes(
    data: bytes, max_radius: float = DEFAULT_MAX_RADIUS, path: str | None = None
) -> Descriptor:
    if len(data) < 16 or data[:8] != _MAGIC:
        raise FormatError("bad descriptor magic", path)
    rings, sectors = struct.unpack("<II", data[8:16])
    expected = 16 + 4 * rings * sectors + 4 * rings
    if len(data) != expected:
        raise FormatError(
            f"descriptor payload has {len(data)} bytes, expected {expected}", path
        )
    matrix = np.frombuffer(data, dtype="<f4", count=rings * sectors, offset=16)
    ring_key = np.frombuffer(data, dtype="<f4", count=rings, offset=16 + 4 * rings * sectors)
    return Descriptor(
        matrix=matrix.reshape(rings, sectors).astype(float),
        ring_key=ring_key.astype(float),
        max_radius=max_radius,
    )


class ScanContextExtractor(BaseEstimator, TransformerMixin):
    """Stateless transformer from sensor-frame clouds to descriptors."""

    def __init__(
        self,
        rings: int = DEFAULT_RINGS,
        sectors: int = DEFAULT_SECTORS,
        max_radius: float = DEFAULT_MAX_RADIUS,
        sensor_height: float = DEFAULT_SENSOR_HEIGHT,
    ):
        self.rings = rings
        self.sectors = sectors
        self.max_radius = max_radius
        self.sensor_height = sensor_height

    def fit(self, X=None, y=None):
        return self

    def transform(self, X: list[np.ndarray]) -> list[Descriptor]:
        return [
            compute_descriptor(
                cloud,
                max_radius=self.max_radius,
                rings=self.rings,
                sectors=self.sectors,
                sensor_height=self.sensor_height,
            )
            for cloud in X
        ]


class ScanContextIndex(BaseEstimator):
    """Queryable descriptor database with ring-key prefiltering."""

    def __init__(self, sim_threshold: float = 0.6, prefilter_k: int = 10):
        self.sim_threshold = sim_threshold
        self.prefilter_k = prefilter_k

    def fit(self, X: list[Descriptor], y=None):
        self.descriptors_ = list(X)
        return self

    def query(self, probe: Descriptor, top_k: int | None = None) -> list[QueryMatch]:
        return query(
            self.descriptors_,
            probe,
            sim_threshold=self.sim_threshold,
            top_k=top_k,
            prefilter_k=self.prefilter_k,
        )
