import struct

import numpy as np
import pytest

from cadsynth.errors import MalformedMesh
from cadsynth.meshio import load_obj, load_stl, mesh_bounds, mesh_equal, write_obj

CUBE_OBJ = b"""
v -0.5 -0.5 -0.5
v  0.5 -0.5 -0.5
v  0.5  0.5 -0.5
v -0.5  0.5 -0.5
v -0.5 -0.5  0.5
v  0.5 -0.5  0.5
v  0.5  0.5  0.5
v -0.5  0.5  0.5
f 1 2 3
f 1 3 4
f 5 7 6
f 5 8 7
f 1 5 6
f 1 6 2
f 2 6 7
f 2 7 3
f 3 7 8
f 3 8 4
f 4 8 5
f 4 5 1
"""


def test_minimal_cube_counts():
    mesh = load_obj(CUBE_OBJ)
    assert mesh.vertices.shape == (8, 3)
    assert mesh.triangles.shape == (12, 3)


def test_quad_face_fan_triangulates():
    data = b"v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n"
    mesh = load_obj(data)
    assert mesh.triangles.shape == (2, 3)
    assert mesh.triangles.tolist() == [[0, 1, 2], [0, 2, 3]]


def test_face_index_out_of_range():
    data = b"v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n"
    with pytest.raises(MalformedMesh):
        load_obj(data)


def test_zero_faces_rejected():
    with pytest.raises(MalformedMesh):
        load_obj(b"v 0 0 0\nv 1 0 0\nv 0 1 0\n")


def test_bad_token_rejected():
    with pytest.raises(MalformedMesh):
        load_obj(b"v 0 0 zebra\nf 1 1 1\n")


def test_obj_with_uvs_and_normals():
    data = (b"v 0 0 0\nv 1 0 0\nv 0 1 0\n"
            b"vt 0 0\nvt 1 0\nvt 0 1\n"
            b"vn 0 0 1\n"
            b"f 1/1/1 2/2/1 3/3/1\n")
    mesh = load_obj(data)
    assert mesh.has_uvs
    assert mesh.uvs.shape == (3, 2)
    assert np.allclose(mesh.normals[0], [0, 0, 1])


def _binary_stl(facets):
    blob = b"\x00" * 80 + struct.pack("<I", len(facets))
    for normal, (a, b, c) in facets:
        blob += struct.pack("<3f", *normal)
        blob += struct.pack("<3f", *a) + struct.pack("<3f", *b) + struct.pack("<3f", *c)
        blob += struct.pack("<H", 0)
    return blob


def test_binary_stl_two_facets():
    facets = [
        ((0, 0, 1), ((0, 0, 0), (1, 0, 0), (0, 1, 0))),
        ((0, 0, 1), ((0, 0, 0), (1, 1, 0), (0, 1, 0))),
    ]
    mesh = load_stl(_binary_stl(facets))
    assert mesh.triangles.shape == (2, 3)


def test_binary_stl_count_mismatch():
    facets = [
        ((0, 0, 1), ((0, 0, 0), (1, 0, 0), (0, 1, 0))),
        ((0, 0, 1), ((0, 0, 0), (1, 1, 0), (0, 1, 0))),
        ((0, 0, 1), ((0, 0, 0), (2, 1, 0), (0, 1, 0))),
    ]
    blob = _binary_stl(facets)
    bad = blob[:80] + struct.pack("<I", 5) + blob[84:]
    with pytest.raises(MalformedMesh):
        load_stl(bad)


def test_ascii_stl_tetrahedron():
    lines = ["solid tet"]
    verts = [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)]
    faces = [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)]
    for a, b, c in faces:
        lines.append("  facet normal 0 0 0")
        lines.append("    outer loop")
        for v in (verts[a], verts[b], verts[c]):
            lines.append(f"      vertex {v[0]} {v[1]} {v[2]}")
        lines.append("    endloop")
        lines.append("  endfacet")
    lines.append("endsolid tet")
    mesh = load_stl("\n".join(lines).encode())
    assert mesh.triangles.shape == (4, 3)
    assert mesh.vertices.shape == (12, 3)  # one vertex triple per facet
    # zero file normals are recomputed to unit length
    assert np.allclose(np.linalg.norm(mesh.normals, axis=1), 1.0)


def test_stl_truncated_record():
    facets = [((0, 0, 1), ((0, 0, 0), (1, 0, 0), (0, 1, 0)))]
    with pytest.raises(MalformedMesh):
        load_stl(_binary_stl(facets)[:-10])


def test_mesh_bounds_cube_and_translation():
    mesh = load_obj(CUBE_OBJ)
    box = mesh_bounds(mesh)
    assert np.allclose(box.mins, [-0.5, -0.5, -0.5])
    assert np.allclose(box.maxs, [0.5, 0.5, 0.5])

    shifted = load_obj(CUBE_OBJ.replace(b"v -0.5", b"v 9.5").replace(b"v  0.5", b"v 10.5"))
    sbox = mesh_bounds(shifted)
    assert np.allclose(sbox.mins, [9.5, -0.5, -0.5])
    assert np.allclose(sbox.maxs, [10.5, 0.5, 0.5])


def test_mesh_bounds_single_triangle():
    mesh = load_obj(b"v 0 0 0\nv 1 0 0\nv 0 2 0\nf 1 2 3\n")
    box = mesh_bounds(mesh)
    assert box.mins.tolist() == [0, 0, 0]
    assert box.maxs.tolist() == [1, 2, 0]


def test_write_obj_round_trip(library):
    for mesh in [library.target.mesh] + [a.mesh for a in library.distractors]:
        again = load_obj(write_obj(mesh))
        assert mesh_equal(mesh, again)


def test_bounds_contain_every_vertex(library):
    mesh = library.target.mesh
    box = mesh_bounds(mesh)
    assert (mesh.vertices >= box.mins - 1e-12).all()
    assert (mesh.vertices <= box.maxs + 1e-12).all()
