"""On-disk session format.

A session directory contains::

    poses.graph          g2o-style text graph
    keyframes/%06d.pc    binary clouds: magic PCXYZ001, u32 count, count*3 f32
    descriptors/%06d.dsc polar-context descriptors (optional as a whole)
    meta.txt             key=value lines (frame_label, spacing, extras)

All multi-byte binary values are little-endian.  Floats in text files carry 9
significant digits, which makes a save/load/save cycle byte-stable.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from . import scancontext
from .exceptions import FormatError, MissingKeyframe
from .se3 import Pose
from .session import GraphEdge, PoseGraph, Session

_CLOUD_MAGIC = b"PCXYZ001"
_TRIU = np.triu_indices(6)


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def _pose_fields(p: Pose) -> str:
    w, x, y, z = p.q
    return " ".join(_fmt(v) for v in (p.t[0], p.t[1], p.t[2], x, y, z, w))


def _parse_pose(tokens: list[str]) -> Pose:
    vals = [float(t) for t in tokens]
    t = np.array(vals[0:3])
    qx, qy, qz, qw = vals[3:7]
    return Pose(t, np.array([qw, qx, qy, qz]))


def graph_to_text(graph: PoseGraph) -> str:
    lines = ["# pose graph: VERTEX_SE3:QUAT then EDGE_SE3:QUAT, quaternions x y z w"]
    for i, pose in enumerate(graph.nodes):
        lines.append(f"VERTEX_SE3:QUAT {i} {_pose_fields(pose)}")
    for edge in list(graph.odometry_edges) + list(graph.loop_edges):
        info = " ".join(_fmt(v) for v in edge.information[_TRIU])
        lines.append(f"EDGE_SE3:QUAT {edge.i} {edge.j} {_pose_fields(edge.relative)} {info}")
    return "\n".join(lines) + "\n"


def graph_from_text(text: str, path: str | None = None) -> PoseGraph:
    vertices: dict[int, Pose] = {}
    raw_edges: list[tuple[int, GraphEdge]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        try:
            if tokens[0] == "VERTEX_SE3:QUAT":
                if len(tokens) != 9:
                    raise FormatError("vertex line needs id + 7 values", path, lineno)
                vertices[int(tokens[1])] = _parse_pose(tokens[2:9])
            elif tokens[0] == "EDGE_SE3:QUAT":
                if len(tokens) != 31:
                    raise FormatError("edge line needs 2 ids + 7 values + 21 info entries", path, lineno)
                i, j = int(tokens[1]), int(tokens[2])
                rel = _parse_pose(tokens[3:10])
                upper = np.array([float(t) for t in tokens[10:31]])
                info = np.zeros((6, 6))
                info[_TRIU] = upper
                info = info + np.triu(info, 1).T
                raw_edges.append((lineno, GraphEdge(i, j, rel, info)))
            else:
                raise FormatError(f"unknown record {tokens[0]!r}", path, lineno)
        except FormatError:
            raise
        except (ValueError, IndexError) as err:
            raise FormatError(f"malformed line: {err}", path, lineno)
    n = len(vertices)
    if sorted(vertices) != list(range(n)):
        raise FormatError(f"vertex ids must be dense 0..{n - 1}", path)
    nodes = [vertices[i] for i in range(n)]
    odometry, loops = [], []
    for lineno, edge in raw_edges:
        if not (0 <= edge.i < n and 0 <= edge.j < n):
            raise FormatError(f"edge {edge.i}->{edge.j} references missing vertex", path, lineno)
        if edge.j == edge.i + 1:
            odometry.append(edge)
        else:
            loops.append(edge)
    return PoseGraph(nodes=nodes, odometry_edges=odometry, loop_edges=loops)


def cloud_to_bytes(points: np.ndarray) -> bytes:
    pts = np.ascontiguousarray(points, dtype="<f4").reshape(-1, 3)
    return _CLOUD_MAGIC + struct.pack("<I", len(pts)) + pts.tobytes()


def cloud_from_bytes(data: bytes, path: str | None = None) -> np.ndarray:
    if len(data) < 12 or data[:8] != _CLOUD_MAGIC:
        raise FormatError("bad cloud magic", path)
    (count,) = struct.unpack("<I", data[8:12])
    expected = 12 + 12 * count
    if len(data) != expected:
        raise FormatError(f"cloud payload has {len(data)} bytes, expected {expected}", path)
    pts = np.frombuffer(data, dtype="<f4", count=3 * count, offset=12)
    return pts.reshape(count, 3).astype(float)


def save_trajectory(poses: list[Pose], path: str | Path) -> None:
    """Write poses as one `index x y z qx qy qz qw` line each."""
    lines = [f"{i} {_pose_fields(p)}" for i, p in enumerate(poses)]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def load_trajectory(path: str | Path) -> list[Pose]:
    poses = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if len(tokens) != 8:
            raise FormatError("trajectory line needs index + 7 values", str(path), lineno)
        try:
            poses.append(_parse_pose(tokens[1:8]))
        except ValueError as err:
            raise FormatError(f"malformed trajectory line: {err}", str(path), lineno)
    return poses


def save_session(session: Session, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "poses.graph").write_text(graph_to_text(session.graph))

    kf_dir = out / "keyframes"
    kf_dir.mkdir(exist_ok=True)
    for i, cloud in enumerate(session.clouds):
        (kf_dir / f"{i:06d}.pc").write_bytes(cloud_to_bytes(cloud))

    if session.descriptors is not None:
        dsc_dir = out / "descriptors"
        dsc_dir.mkdir(exist_ok=True)
        for i, desc in enumerate(session.descriptors):
            (dsc_dir / f"{i:06d}.dsc").write_bytes(scancontext.descriptor_to_bytes(desc))

    meta_lines = [f"frame_label={session.frame_label}", f"spacing={_fmt(session.spacing)}"]
    for key in sorted(session.meta):
        meta_lines.append(f"{key}={session.meta[key]}")
    (out / "meta.txt").write_text("\n".join(meta_lines) + "\n")


def load_session(in_dir: str | Path) -> Session:
    src = Path(in_dir)
    graph_path = src / "poses.graph"
    if not graph_path.is_file():
        raise FormatError("missing poses.graph", str(graph_path))
    graph = graph_from_text(graph_path.read_text(), str(graph_path))

    meta: dict[str, str] = {}
    meta_path = src / "meta.txt"
    if meta_path.is_file():
        for lineno, raw in enumerate(meta_path.read_text().splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise FormatError("meta line must be key=value", str(meta_path), lineno)
            key, value = line.split("=", 1)
            meta[key.strip()] = value.strip()
    frame_label = meta.pop("frame_label", "local")
    spacing = float(meta.pop("spacing", "0"))

    clouds = []
    kf_dir = src / "keyframes"
    for i in range(graph.n):
        pc_path = kf_dir / f"{i:06d}.pc"
        if not pc_path.is_file():
            raise MissingKeyframe(f"keyframe file missing for node {i}: {pc_path}")
        clouds.append(cloud_from_bytes(pc_path.read_bytes(), str(pc_path)))
    extra = sorted(kf_dir.glob("*.pc")) if kf_dir.is_dir() else []
    if len(extra) > graph.n:
        raise MissingKeyframe(
            f"{len(extra)} keyframe files for {graph.n} pose nodes"
        )

    descriptors = None
    dsc_dir = src / "descriptors"
    if dsc_dir.is_dir():
        sc_radius = float(meta.get("sc_max_radius", scancontext.DEFAULT_MAX_RADIUS))
        descriptors = []
        for i in range(graph.n):
            dsc_path = dsc_dir / f"{i:06d}.dsc"
            if not dsc_path.is_file():
                raise MissingKeyframe(f"descriptor file missing for node {i}: {dsc_path}")
            descriptors.append(
                scancontext.descriptor_from_bytes(
                    dsc_path.read_bytes(), max_radius=sc_radius, path=str(dsc_path)
                )
            )
        if len(sorted(dsc_dir.glob("*.dsc"))) > graph.n:
            raise MissingKeyframe("more descriptor files than pose nodes")

    return Session(
        graph=graph,
        clouds=clouds,
        descriptors=descriptors,
        frame_label=frame_label,
        spacing=spacing,
        meta=meta,
    )
