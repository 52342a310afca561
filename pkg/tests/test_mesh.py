"""Triangle mesh container, subdivision, and OBJ round trips."""

from __future__ import annotations

import numpy as np
import pytest

from mapanchor import TriangleMesh, load_obj, save_obj
from mapanchor.changes import mesh_distances
from mapanchor.exceptions import FormatError
from mapanchor.worlds import box_room, box_shell

UNIT_TRI = TriangleMesh(
    vertices=[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], faces=[[0, 1, 2]]
)


def test_basic_properties():
    assert UNIT_TRI.n_triangles == 1
    assert UNIT_TRI.triangles().shape == (1, 3, 3)
    assert abs(UNIT_TRI.areas()[0] - 0.5) < 1e-15
    lo, hi = UNIT_TRI.bounds()
    assert np.allclose(lo, [0, 0, 0]) and np.allclose(hi, [1, 1, 0])


def test_empty_mesh_allowed():
    empty = TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=int))
    assert empty.n_triangles == 0
    lo, hi = empty.bounds()
    assert np.allclose(lo, 0.0) and np.allclose(hi, 0.0)


def test_validation_errors():
    with pytest.raises(ValueError):
        TriangleMesh([[0, 0, np.nan]], np.zeros((0, 3), dtype=int))
    with pytest.raises(ValueError):
        TriangleMesh([[0, 0, 0]], [[0, 0, 1]])  # index out of range
    with pytest.raises(ValueError):
        # zero-area triangle
        TriangleMesh([[0, 0, 0], [1, 0, 0], [2, 0, 0]], [[0, 1, 2]])


def test_merged_with_reindexes():
    merged = UNIT_TRI.merged_with(UNIT_TRI)
    assert merged.n_triangles == 2
    assert merged.faces[1].min() >= 3
    assert np.allclose(merged.triangles()[0], merged.triangles()[1])


def test_subdivided_respects_edge_limit():
    fine = box_room(4.0, 3.0).subdivided(1.0)
    tri = fine.triangles()
    edges = np.linalg.norm(np.roll(tri, -1, axis=1) - tri, axis=2)
    assert edges.max() <= 1.0 + 1e-12


def test_subdivided_preserves_area_and_distances():
    coarse = box_shell([0, 0, 0], [2, 2, 2])
    fine = coarse.subdivided(0.7)
    assert fine.n_triangles > coarse.n_triangles
    assert abs(fine.areas().sum() - coarse.areas().sum()) < 1e-9
    rng = np.random.default_rng(0)
    pts = rng.uniform(-1, 3, size=(50, 3))
    assert np.allclose(mesh_distances(pts, coarse), mesh_distances(pts, fine), atol=1e-9)


def test_obj_round_trip(tmp_path):
    mesh = box_room(4.0, 3.0)
    path = tmp_path / "room.obj"
    save_obj(mesh, path)
    back = load_obj(path)
    assert np.allclose(back.vertices, mesh.vertices)
    assert np.array_equal(back.faces, mesh.faces)


def test_obj_save_is_stable(tmp_path):
    mesh = box_room(4.0, 3.0)
    a, b = tmp_path / "a.obj", tmp_path / "b.obj"
    save_obj(mesh, a)
    save_obj(load_obj(a), b)
    assert a.read_bytes() == b.read_bytes()


def test_obj_ignores_comments_and_extras(tmp_path):
    path = tmp_path / "m.obj"
    path.write_text(
        "# header\n"
        "o thing\n"
        "vn 0 0 1\n"
        "v 0 0 0\n"
        "v 1 0 0\n"
        "v 0 1 0\n"
        "f 1/1/1 2/2/2 3/3/3\n"
    )
    mesh = load_obj(path)
    assert mesh.n_triangles == 1
    assert np.array_equal(mesh.faces, [[0, 1, 2]])


def test_obj_negative_indices(tmp_path):
    path = tmp_path / "m.obj"
    path.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n")
    assert np.array_equal(load_obj(path).faces, [[0, 1, 2]])


@pytest.mark.parametrize(
    "body, fragment",
    [
        ("v 0 0\n", "3 coordinates"),
        ("v 0 0 zero\nv 0 0 0\nv 1 0 0\nf 1 2 3\n", "bad vertex"),
        ("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3 1\n", "triangles"),
        ("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 x\n", "bad face index"),
        ("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 1 2\n", "1-based"),
        ("v 0 0 0\n", "no faces"),
        ("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n", "out of range"),
    ],
)
def test_obj_malformed(tmp_path, body, fragment):
    path = tmp_path / "bad.obj"
    path.write_text(body)
    with pytest.raises(FormatError) as err:
        load_obj(path)
    assert fragment in str(err.value)


def test_obj_error_reports_line_number(tmp_path):
    path = tmp_path / "bad.obj"
    path.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\nv broken\n")
    with pytest.raises(FormatError) as err:
        load_obj(path)
    assert "5" in str(err.value)
    assert "bad.obj" in str(err.value)
