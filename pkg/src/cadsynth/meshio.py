"""Triangle-mesh loading: Wavefront OBJ (ASCII) and STL (binary + ASCII).

Supported OBJ subset: v / vt / vn / f records. Faces with more than three
vertices are fan-triangulated; faces without normals get a computed
per-face normal. Materials (.mtl) are ignored — appearance is assigned by
the scene sampler, not taken from CAD metadata.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import MalformedMesh
from .geom import Aabb


@dataclass
class Mesh:
    """Indexed triangle mesh.

    vertices: (n, 3) float64, scene units (meters)
    normals: (m, 3) float64, unit length
    uvs: (k, 2) float64 in [0, 1]^2, or None when the source had no texcoords
    triangles: (t, 3) int32 indices into vertices
    normal_indices: (t, 3) int32 indices into normals
    uv_indices: (t, 3) int32 indices into uvs, or None
    """

    vertices: np.ndarray
    normals: np.ndarray
    triangles: np.ndarray
    normal_indices: np.ndarray
    uvs: np.ndarray | None = None
    uv_indices: np.ndarray | None = None
    name: str = field(default="", compare=False)

    @property
    def n_vertices(self) -> int:
        return int(self.vertices.shape[0])

    @property
    def n_triangles(self) -> int:
        return int(self.triangles.shape[0])

    @property
    def has_uvs(self) -> bool:
        return self.uvs is not None

    def validate(self) -> None:
        if self.n_triangles < 1:
            raise MalformedMesh("mesh has no triangles")
        if not np.all(np.isfinite(self.vertices)):
            raise MalformedMesh("non-finite vertex coordinate")
        if not np.all(np.isfinite(self.normals)):
            raise MalformedMesh("non-finite normal component")
        if self.triangles.min() < 0 or self.triangles.max() >= self.n_vertices:
            raise MalformedMesh("triangle vertex index out of range")
        if self.normal_indices.min() < 0 or self.normal_indices.max() >= len(self.normals):
            raise MalformedMesh("triangle normal index out of range")
        if self.uvs is not None:
            if self.uv_indices is None:
                raise MalformedMesh("uvs present but uv indices missing")
            if not np.all(np.isfinite(self.uvs)):
                raise MalformedMesh("non-finite texture coordinate")
            if self.uv_indices.min() < 0 or self.uv_indices.max() >= len(self.uvs):
                raise MalformedMesh("triangle uv index out of range")


def mesh_equal(a: Mesh, b: Mesh) -> bool:
    """Structural equality on vertex/normal/uv/index arrays."""
    if not (np.array_equal(a.vertices, b.vertices) and np.array_equal(a.triangles, b.triangles)):
        return False
    if not (np.array_equal(a.normals, b.normals) and np.array_equal(a.normal_indices, b.normal_indices)):
        return False
    if (a.uvs is None) != (b.uvs is None):
        return False
    if a.uvs is not None:
        return np.array_equal(a.uvs, b.uvs) and np.array_equal(a.uv_indices, b.uv_indices)
    return True


def mesh_bounds(mesh: Mesh) -> Aabb:
    """Componentwise min/max over all vertices."""
    return Aabb.of_points(mesh.vertices)


def _face_normal(v0: np.ndarray, v1: np.ndarray, v2: np.ndarray) -> np.ndarray:
    n = np.cross(v1 - v0, v2 - v0)
    norm = np.linalg.norm(n)
    if norm < 1e-30:
        return np.array([0.0, 0.0, 1.0])  # degenerate face; kept, renderer skips it
    return n / norm


def _finalize(vertices, normals, uvs, tri_v, tri_n, tri_uv, name) -> Mesh:
    mesh = Mesh(
        vertices=np.asarray(vertices, dtype=np.float64).reshape(-1, 3),
        normals=np.asarray(normals, dtype=np.float64).reshape(-1, 3),
        triangles=np.asarray(tri_v, dtype=np.int32).reshape(-1, 3),
        normal_indices=np.asarray(tri_n, dtype=np.int32).reshape(-1, 3),
        uvs=None if uvs is None else np.asarray(uvs, dtype=np.float64).reshape(-1, 2),
        uv_indices=None if tri_uv is None else np.asarray(tri_uv, dtype=np.int32).reshape(-1, 3),
        name=name,
    )
    mesh.validate()
    return mesh


def load_obj(data: bytes, name: str = "") -> Mesh:
    """Parse Wavefront OBJ text into a triangulated Mesh.

    Raises MalformedMesh on bad tokens, out-of-range indices, or zero faces.
    """
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise MalformedMesh(f"OBJ is not valid UTF-8 text: {exc}") from None

    vertices: list[list[float]] = []
    normals: list[list[float]] = []
    uvs: list[list[float]] = []
    faces: list[list[tuple[int, int | None, int | None]]] = []

    def resolve(idx: int, count: int, what: str, lineno: int) -> int:
        if idx > 0:
            r = idx - 1
        elif idx < 0:
            r = count + idx
        else:
            raise MalformedMesh(f"line {lineno}: zero {what} index")
        if r < 0 or r >= count:
            raise MalformedMesh(f"line {lineno}: {what} index {idx} out of range (count {count})")
        return r

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        tag = parts[0]
        try:
            if tag == "v":
                if len(parts) < 4:
                    raise ValueError("vertex needs 3 coordinates")
                vertices.append([float(parts[1]), float(parts[2]), float(parts[3])])
            elif tag == "vn":
                if len(parts) < 4:
                    raise ValueError("normal needs 3 components")
                normals.append([float(parts[1]), float(parts[2]), float(parts[3])])
            elif tag == "vt":
                if len(parts) < 3:
                    raise ValueError("texcoord needs 2 components")
                uvs.append([float(parts[1]), float(parts[2])])
            elif tag == "f":
                if len(parts) < 4:
                    raise ValueError("face needs at least 3 vertices")
                corners = []
                for token in parts[1:]:
                    fields = token.split("/")
                    vi = resolve(int(fields[0]), len(vertices), "vertex", lineno)
                    ti = None
                    ni = None
                    if len(fields) > 1 and fields[1] != "":
                        ti = resolve(int(fields[1]), len(uvs), "uv", lineno)
                    if len(fields) > 2 and fields[2] != "":
                        ni = resolve(int(fields[2]), len(normals), "normal", lineno)
                    corners.append((vi, ti, ni))
                faces.append(corners)
            # other records (o, g, s, usemtl, mtllib, ...) are ignored
        except MalformedMesh:
            raise
        except ValueError as exc:
            raise MalformedMesh(f"line {lineno}: {exc}") from None

    if not faces:
        raise MalformedMesh("OBJ contains no faces")

    varr = np.asarray(vertices, dtype=np.float64).reshape(-1, 3)
    out_normals = [list(n) for n in normals]
    # renormalize supplied normals only when meaningfully off unit length, so
    # already-unit normals survive a write/load round trip bit-exactly
    for i, n in enumerate(out_normals):
        a = np.asarray(n)
        ln = np.linalg.norm(a)
        if ln > 1e-30 and abs(ln - 1.0) > 1e-9:
            out_normals[i] = list(a / ln)

    tri_v: list[list[int]] = []
    tri_n: list[list[int]] = []
    tri_uv: list[list[int]] = []
    every_corner_has_uv = all(t is not None for face in faces for (_, t, _) in face)

    for face in faces:
        face_n_idx = None
        for k in range(1, len(face) - 1):
            corner_ids = (face[0], face[k], face[k + 1])
            vi = [c[0] for c in corner_ids]
            ni = []
            for c in corner_ids:
                if c[2] is not None and np.linalg.norm(out_normals[c[2]]) > 1e-30:
                    ni.append(c[2])
                else:
                    if face_n_idx is None:
                        fn = _face_normal(varr[face[0][0]], varr[face[1][0]], varr[face[2][0]])
                        out_normals.append(list(fn))
                        face_n_idx = len(out_normals) - 1
                    ni.append(face_n_idx)
            tri_v.append(vi)
            tri_n.append(ni)
            if every_corner_has_uv:
                tri_uv.append([c[1] for c in corner_ids])

    return _finalize(
        vertices,
        out_normals,
        uvs if every_corner_has_uv and uvs else None,
        tri_v,
        tri_n,
        tri_uv if every_corner_has_uv and uvs else None,
        name,
    )


_STL_RECORD = struct.Struct("<12fH")


def load_stl(data: bytes, name: str = "") -> Mesh:
    """Parse binary or ASCII STL. One vertex triple per facet (no dedup)."""
    if _looks_ascii_stl(data):
        return _load_stl_ascii(data, name)
    return _load_stl_binary(data, name)


def _looks_ascii_stl(data: bytes) -> bool:
    head = data[:512].lstrip()
    if not head.startswith(b"solid"):
        return False
    # some binary exporters also write "solid" in the header; require ASCII keywords
    try:
        text = data.decode("ascii")
    except UnicodeDecodeError:
        return False
    return "facet" in text or "endsolid" in text


def _load_stl_binary(data: bytes, name: str) -> Mesh:
    if len(data) < 84:
        raise MalformedMesh("binary STL shorter than 84-byte header")
    (count,) = struct.unpack_from("<I", data, 80)
    expected = 84 + 50 * count
    if len(data) != expected:
        raise MalformedMesh(
            f"binary STL declares {count} facets ({expected} bytes) but has {len(data)} bytes"
        )
    if count == 0:
        raise MalformedMesh("binary STL declares zero facets")

    vertices = np.zeros((count * 3, 3), dtype=np.float64)
    normals = np.zeros((count, 3), dtype=np.float64)
    for i in range(count):
        rec = _STL_RECORD.unpack_from(data, 84 + 50 * i)
        normals[i] = rec[0:3]
        vertices[3 * i + 0] = rec[3:6]
        vertices[3 * i + 1] = rec[6:9]
        vertices[3 * i + 2] = rec[9:12]
    return _stl_mesh(vertices, normals, name)


def _load_stl_ascii(data: bytes, name: str) -> Mesh:
    tokens = data.decode("ascii").split()
    vertices: list[list[float]] = []
    normals: list[list[float]] = []
    i = 0
    n = len(tokens)
    try:
        while i < n:
            tok = tokens[i]
            if tok == "facet":
                if tokens[i + 1] != "normal":
                    raise MalformedMesh("facet without normal keyword")
                normals.append([float(tokens[i + 2]), float(tokens[i + 3]), float(tokens[i + 4])])
                i += 5
                if tokens[i] != "outer" or tokens[i + 1] != "loop":
                    raise MalformedMesh("facet without outer loop")
                i += 2
                corners = 0
                while tokens[i] == "vertex":
                    vertices.append([float(tokens[i + 1]), float(tokens[i + 2]), float(tokens[i + 3])])
                    corners += 1
                    i += 4
                if corners != 3:
                    raise MalformedMesh(f"STL facet with {corners} vertices (must be 3)")
                if tokens[i] != "endloop" or tokens[i + 1] != "endfacet":
                    raise MalformedMesh("unterminated facet")
                i += 2
            else:
                i += 1
    except (IndexError, ValueError) as exc:
        raise MalformedMesh(f"malformed ASCII STL: {exc}") from None

    if not normals:
        raise MalformedMesh("ASCII STL contains no facets")
    return _stl_mesh(
        np.asarray(vertices, dtype=np.float64),
        np.asarray(normals, dtype=np.float64),
        name,
    )


def _stl_mesh(vertices: np.ndarray, facet_normals: np.ndarray, name: str) -> Mesh:
    count = len(facet_normals)
    normals = facet_normals.copy()
    for i in range(count):
        ln = np.linalg.norm(normals[i])
        if ln < 1e-30:
            normals[i] = _face_normal(vertices[3 * i], vertices[3 * i + 1], vertices[3 * i + 2])
        elif abs(ln - 1.0) > 1e-9:
            normals[i] = normals[i] / ln
    triangles = np.arange(count * 3, dtype=np.int32).reshape(-1, 3)
    normal_indices = np.repeat(np.arange(count, dtype=np.int32), 3).reshape(-1, 3)
    return _finalize(vertices, normals, None, triangles, normal_indices, None, name)


def write_obj(mesh: Mesh) -> bytes:
    """Debug OBJ writer; load_obj(write_obj(m)) reproduces m exactly.

    Coordinates use repr() so float64 values round-trip bit-exactly.
    """
    lines: list[str] = []
    for v in mesh.vertices:
        lines.append(f"v {float(v[0])!r} {float(v[1])!r} {float(v[2])!r}")
    if mesh.uvs is not None:
        for t in mesh.uvs:
            lines.append(f"vt {float(t[0])!r} {float(t[1])!r}")
    for nrm in mesh.normals:
        lines.append(f"vn {float(nrm[0])!r} {float(nrm[1])!r} {float(nrm[2])!r}")
    for k in range(mesh.n_triangles):
        vi = mesh.triangles[k] + 1
        ni = mesh.normal_indices[k] + 1
        if mesh.uv_indices is not None:
            ti = mesh.uv_indices[k] + 1
            corners = " ".join(f"{vi[j]}/{ti[j]}/{ni[j]}" for j in range(3))
        else:
            corners = " ".join(f"{vi[j]}//{ni[j]}" for j in range(3))
        lines.append("f " + corners)
    return ("\n".join(lines) + "\n").encode("utf-8")
