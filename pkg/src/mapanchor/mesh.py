"""Triangle meshes for building models and change exports, plus OBJ I/O.

Only the ``v``/``f`` subset of Wavefront OBJ is read: vertex lines with three
coordinates and triangulated face lines with 1-based indices (``f a b c``,
``a/b/c`` vertex tokens allowed).  Everything else is ignored.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import FormatError

_MIN_AREA = 1e-12


@dataclass(eq=False)
class TriangleMesh:
    """Indexed triangle soup: ``vertices`` (V, 3) float and ``faces`` (F, 3) int."""

    vertices: np.ndarray
    faces: np.ndarray

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        self.faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        if not np.all(np.isfinite(self.vertices)):
            raise ValueError("mesh vertices must be finite")
        if self.faces.size:
            if self.faces.min() < 0 or self.faces.max() >= len(self.vertices):
                raise ValueError("face index out of range")
            areas = self.areas()
            if np.any(areas <= _MIN_AREA):
                bad = int(np.argmin(areas))
                raise ValueError(f"triangle {bad} is degenerate (area {areas[bad]:.3e})")

    @property
    def n_triangles(self) -> int:
        return len(self.faces)

    def triangles(self) -> np.ndarray:
        """Corner coordinates as an (F, 3, 3) array."""
        return self.vertices[self.faces]

    def areas(self) -> np.ndarray:
        tri = self.triangles()
        cross = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        return 0.5 * np.linalg.norm(cross, axis=1)

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        if len(self.vertices) == 0:
            return np.zeros(3), np.zeros(3)
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def merged_with(self, other: "TriangleMesh") -> "TriangleMesh":
        verts = np.vstack([self.vertices, other.vertices])
        faces = np.vstack([self.faces, other.faces + len(self.vertices)])
        return TriangleMesh(verts, faces)

    def subdivided(self, max_edge: float) -> "TriangleMesh":
        """Bisect triangles along their longest edge until no edge exceeds max_edge.

        The union of the output triangles equals the input surface exactly, so
        distances to the mesh are unchanged; only the index granularity improves.
        """
        tris = list(self.triangles())
        out = []
        while tris:
            tri = tris.pop()
            edges = np.linalg.norm(np.roll(tri, -1, axis=0) - tri, axis=1)
            k = int(np.argmax(edges))
            if edges[k] <= max_edge:
                out.append(tri)
                continue
            a, b = tri[k], tri[(k + 1) % 3]
            c = tri[(k + 2) % 3]
            mid = 0.5 * (a + b)
            tris.append(np.array([a, mid, c]))
            tris.append(np.array([mid, b, c]))
        flat = np.asarray(out).reshape(-1, 3)
        faces = np.arange(len(flat)).reshape(-1, 3)
        return TriangleMesh(flat, faces)


def load_obj(path: str | Path) -> TriangleMesh:
    """Read a triangulated OBJ building model."""
    path = Path(path)
    verts: list[list[float]] = []
    faces: list[list[int]] = []
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if tokens[0] == "v":
            if len(tokens) < 4:
                raise FormatError("vertex line needs 3 coordinates", str(path), lineno)
            try:
                verts.append([float(tokens[1]), float(tokens[2]), float(tokens[3])])
            except ValueError as err:
                raise FormatError(f"bad vertex coordinate: {err}", str(path), lineno)
        elif tokens[0] == "f":
            if len(tokens) != 4:
                raise FormatError("faces must be triangles", str(path), lineno)
            idx = []
            for tok in tokens[1:]:
                head = tok.split("/")[0]
                try:
                    i = int(head)
                except ValueError:
                    raise FormatError(f"bad face index {tok!r}", str(path), lineno)
                if i == 0:
                    raise FormatError("face indices are 1-based, got 0", str(path), lineno)
                idx.append(i - 1 if i > 0 else len(verts) + i)
            faces.append(idx)
    if not faces:
        raise FormatError("model contains no faces", str(path))
    try:
        return TriangleMesh(np.array(verts), np.array(faces))
    except ValueError as err:
        raise FormatError(str(err), str(path))


def save_obj(mesh: TriangleMesh, path: str | Path) -> None:
    """Write a mesh as ASCII OBJ with 9-significant-digit coordinates."""
    path = Path(path)
    lines = []
    for v in mesh.vertices:
        lines.append(f"v {v[0]:.9g} {v[1]:.9g} {v[2]:.9g}")
    for f in mesh.faces:
        lines.append(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}")
    path.write_text("\n".join(lines) + "\n")
