"""Built-in demo asset pack.

Generates a small, fully deterministic asset set: an L-bracket target, six
distractor meshes (four OBJ with uvs, one binary STL, one ASCII STL), and
the standard texture pool sizes (7 floor / 6 support / 6 distractor). The
mesh and texture bytes are produced procedurally and then parsed through
the regular loaders, so the demo exercises the same code path as user
assets. Used by `cadsynth make-assets` and by the test suite.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .assets import AssetLibrary, Material, MeshAsset, recenter_and_scale
from .imgio import Texture, encode_png, load_texture
from .meshio import Mesh, load_obj, load_stl

# ---------------------------------------------------------------------------
# mesh builders (emit OBJ text / STL bytes)


def _obj_lines_for_prism(base_xy: list[tuple[float, float]], depth: float) -> str:
    """Right prism over a simple polygon, fan-triangulable from vertex 0.

    Emits per-face-corner uvs and flat per-face normals. The polygon must be
    counter-clockwise and star-shaped from its first vertex.
    """
    n = len(base_xy)
    xs = [p[0] for p in base_xy]
    ys = [p[1] for p in base_xy]
    w = max(xs) - min(xs)
    h = max(ys) - min(ys)
    lines: list[str] = []
    for z in (0.0, depth):
        for x, y in base_xy:
            lines.append(f"v {x!r} {y!r} {z!r}")

    uvs: list[str] = []
    normals: list[str] = []
    faces: list[str] = []

    def add_uv(u: float, v: float) -> int:
        uvs.append(f"vt {u!r} {v!r}")
        return len(uvs)

    def add_normal(nx: float, ny: float, nz: float) -> int:
        normals.append(f"vn {nx!r} {ny!r} {nz!r}")
        return len(normals)

    # caps: bottom (normal -z, clockwise when viewed from +z) and top (+z, ccw)
    bot_n = add_normal(0.0, 0.0, -1.0)
    top_n = add_normal(0.0, 0.0, 1.0)
    cap_uv = [add_uv((x - min(xs)) / w, (y - min(ys)) / h) for x, y in base_xy]
    bottom = " ".join(f"{i + 1}/{cap_uv[i]}/{bot_n}" for i in reversed(range(n)))
    top = " ".join(f"{i + n + 1}/{cap_uv[i]}/{top_n}" for i in range(n))
    faces.append("f " + bottom)
    faces.append("f " + top)

    # sides: one quad per polygon edge, u along the perimeter, v along depth
    perim = 0.0
    edge_len = []
    for i in range(n):
        x0, y0 = base_xy[i]
        x1, y1 = base_xy[(i + 1) % n]
        edge_len.append(float(np.hypot(x1 - x0, y1 - y0)))
        perim += edge_len[-1]
    u_at = 0.0
    for i in range(n):
        j = (i + 1) % n
        x0, y0 = base_xy[i]
        x1, y1 = base_xy[j]
        ex, ey = x1 - x0, y1 - y0
        el = edge_len[i]
        nx, ny = ey / el, -ex / el  # outward normal of a ccw polygon edge
        nid = add_normal(nx, ny, 0.0)
        u0 = u_at / perim
        u1 = (u_at + el) / perim
        u_at += el
        t00 = add_uv(u0, 0.0)
        t10 = add_uv(u1, 0.0)
        t11 = add_uv(u1, 1.0)
        t01 = add_uv(u0, 1.0)
        faces.append(
            "f " + " ".join(
                f"{v}/{t}/{nid}"
                for v, t in (
                    (i + 1, t00), (j + 1, t10), (j + n + 1, t11), (i + n + 1, t01),
                )
            )
        )
    return "\n".join(lines + uvs + normals + faces) + "\n"


def _obj_box(sx: float, sy: float, sz: float) -> bytes:
    base = [(0.0, 0.0), (sx, 0.0), (sx, sy), (0.0, sy)]
    return _obj_lines_for_prism(base, sz).encode()


def _obj_l_bracket(width: float, height: float, thickness: float, depth: float) -> bytes:
    t = thickness
    base = [(0.0, 0.0), (width, 0.0), (width, t), (t, t), (t, height), (0.0, height)]
    return _obj_lines_for_prism(base, depth).encode()


def _obj_regular_prism(radius: float, depth: float, sides: int) -> bytes:
    base = [
        (
            radius * float(np.cos(2.0 * np.pi * i / sides)),
            radius * float(np.sin(2.0 * np.pi * i / sides)),
        )
        for i in range(sides)
    ]
    return _obj_lines_for_prism(base, depth).encode()


def _stl_binary_tetrahedron(edge: float) -> bytes:
    a = edge
    # regular tetrahedron on an equilateral base in the z=0 plane
    p0 = (0.0, 0.0, 0.0)
    p1 = (a, 0.0, 0.0)
    p2 = (a / 2.0, a * np.sqrt(3.0) / 2.0, 0.0)
    apex = (a / 2.0, a * np.sqrt(3.0) / 6.0, a * np.sqrt(2.0 / 3.0))
    facets = [
        (p0, p2, p1),  # base, normal -z
        (p0, p1, apex),
        (p1, p2, apex),
        (p2, p0, apex),
    ]
    out = bytearray(b"\x00" * 80)
    out += struct.pack("<I", len(facets))
    for tri in facets:
        v = np.array(tri, dtype=np.float64)
        n = np.cross(v[1] - v[0], v[2] - v[0])
        n = n / np.linalg.norm(n)
        out += struct.pack("<3f", *n)
        for p in tri:
            out += struct.pack("<3f", *p)
        out += struct.pack("<H", 0)
    return bytes(out)


def _stl_ascii_wedge(sx: float, sy: float, sz: float) -> bytes:
    """Triangular prism (a box cut along one diagonal), ASCII STL."""
    tri = [(0.0, 0.0), (sx, 0.0), (0.0, sy)]
    quads = [
        ((0.0, 0.0), (sx, 0.0)),
        ((sx, 0.0), (0.0, sy)),
        ((0.0, sy), (0.0, 0.0)),
    ]
    facets: list[tuple] = []
    facets.append(((tri[0] + (0.0,)), (tri[2] + (0.0,)), (tri[1] + (0.0,))))
    facets.append(((tri[0] + (sz,)), (tri[1] + (sz,)), (tri[2] + (sz,))))
    for (x0, y0), (x1, y1) in quads:
        a = (x0, y0, 0.0)
        b = (x1, y1, 0.0)
        c = (x1, y1, sz)
        d = (x0, y0, sz)
        facets.append((a, b, c))
        facets.append((a, c, d))
    lines = ["solid wedge"]
    for tri3 in facets:
        v = np.array(tri3, dtype=np.float64)
        n = np.cross(v[1] - v[0], v[2] - v[0])
        n = n / np.linalg.norm(n)
        lines.append(f"  facet normal {float(n[0])!r} {float(n[1])!r} {float(n[2])!r}")
        lines.append("    outer loop")
        for p in tri3:
            lines.append(f"      vertex {float(p[0])!r} {float(p[1])!r} {float(p[2])!r}")
        lines.append("    endloop")
        lines.append("  endfacet")
    lines.append("endsolid wedge")
    return ("\n".join(lines) + "\n").encode()


# ---------------------------------------------------------------------------
# procedural textures


def _pattern(kind: str, seed: int, c0, c1, size: int = 64) -> np.ndarray:
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size]
    c0 = np.asarray(c0, dtype=np.float64)
    c1 = np.asarray(c1, dtype=np.float64)
    if kind == "checker":
        m = ((xx // 8 + yy // 8) % 2).astype(np.float64)
    elif kind == "stripes":
        m = ((xx // 8) % 2).astype(np.float64)
    elif kind == "diag":
        m = (((xx + yy) // 10) % 2).astype(np.float64)
    elif kind == "dots":
        m = (((xx % 16 - 8) ** 2 + (yy % 16 - 8) ** 2) < 20).astype(np.float64)
    elif kind == "bricks":
        row = yy // 10
        off = (row % 2) * 12
        m = ((((xx + off) % 24) < 2) | ((yy % 10) < 2)).astype(np.float64)
    elif kind == "gradient":
        m = yy / (size - 1.0)
    elif kind == "noise":
        coarse = rng.random((8, 8))
        m = np.kron(coarse, np.ones((size // 8, size // 8)))
    elif kind == "grain":
        base = np.sin(xx / 4.5 + rng.random() * 6.28) * 0.5 + 0.5
        m = base + rng.random((size, size)) * 0.15
        m = np.clip(m, 0.0, 1.0)
    else:
        raise ValueError(f"unknown pattern kind {kind!r}")
    img = c0[None, None, :] * (1.0 - m[..., None]) + c1[None, None, :] * m[..., None]
    jitter = rng.normal(0.0, 0.015, size=img.shape)
    img = np.clip(img + jitter, 0.0, 1.0)
    return np.rint(img * 255.0).astype(np.uint8)


_FLOOR_SPECS = [
    ("checker", (0.35, 0.35, 0.38), (0.55, 0.55, 0.58)),
    ("diag", (0.42, 0.38, 0.33), (0.58, 0.52, 0.45)),
    ("noise", (0.30, 0.32, 0.30), (0.52, 0.55, 0.52)),
    ("bricks", (0.45, 0.30, 0.25), (0.62, 0.48, 0.40)),
    ("dots", (0.36, 0.40, 0.44), (0.55, 0.60, 0.65)),
    ("stripes", (0.40, 0.40, 0.36), (0.50, 0.50, 0.46)),
    ("gradient", (0.33, 0.36, 0.40), (0.60, 0.62, 0.66)),
]
_SUPPORT_SPECS = [
    ("grain", (0.46, 0.32, 0.18), (0.62, 0.46, 0.28)),
    ("grain", (0.36, 0.24, 0.14), (0.52, 0.38, 0.24)),
    ("stripes", (0.55, 0.42, 0.28), (0.63, 0.50, 0.34)),
    ("noise", (0.50, 0.48, 0.46), (0.66, 0.64, 0.62)),
    ("checker", (0.42, 0.40, 0.38), (0.56, 0.54, 0.52)),
    ("gradient", (0.48, 0.36, 0.24), (0.64, 0.52, 0.38)),
]
_DISTRACTOR_SPECS = [
    ("checker", (0.70, 0.20, 0.18), (0.95, 0.85, 0.30)),
    ("stripes", (0.18, 0.40, 0.72), (0.85, 0.88, 0.92)),
    ("dots", (0.16, 0.55, 0.30), (0.92, 0.92, 0.86)),
    ("diag", (0.55, 0.22, 0.60), (0.90, 0.80, 0.35)),
    ("noise", (0.20, 0.60, 0.62), (0.88, 0.60, 0.25)),
    ("bricks", (0.62, 0.50, 0.20), (0.30, 0.28, 0.55)),
]


def _texture_png(kind: str, seed: int, c0, c1) -> bytes:
    return encode_png(_pattern(kind, seed, c0, c1))


# ---------------------------------------------------------------------------
# asset pack assembly

_TARGET_COLOR = (0.85, 0.30, 0.08)
_WHITISH = (0.92, 0.92, 0.92)


def _mesh_entries() -> list[tuple[str, bytes, tuple[float, float, float]]]:
    """(filename, file bytes, base_color) for each distractor, in pool order."""
    return [
        ("distractor_00.obj", _obj_box(0.07, 0.07, 0.07), _WHITISH),
        ("distractor_01.obj", _obj_box(0.05, 0.18, 0.04), _WHITISH),
        ("distractor_02.obj", _obj_regular_prism(0.035, 0.11, 12), _WHITISH),
        ("distractor_03.obj", _obj_regular_prism(0.05, 0.05, 6), _WHITISH),
        ("distractor_04.stl", _stl_binary_tetrahedron(0.09), (0.15, 0.35, 0.80)),
        ("distractor_05.stl", _stl_ascii_wedge(0.10, 0.07, 0.05), (0.20, 0.65, 0.30)),
    ]


def demo_files() -> tuple[dict[str, bytes], dict]:
    """All demo asset files as {relative path: bytes}, plus the manifest doc."""
    files: dict[str, bytes] = {"target.obj": _obj_l_bracket(0.14, 0.10, 0.035, 0.05)}
    manifest: dict = {
        "target": {"mesh": "target.obj", "base_color": list(_TARGET_COLOR)},
        "distractors": [],
        "floor_textures": [],
        "support_textures": [],
        "distractor_textures": [],
    }
    for name, data, color in _mesh_entries():
        files[name] = data
        manifest["distractors"].append({"mesh": name, "base_color": list(color)})
    pools = [
        ("floor", _FLOOR_SPECS, "floor_textures"),
        ("support", _SUPPORT_SPECS, "support_textures"),
        ("distractor", _DISTRACTOR_SPECS, "distractor_textures"),
    ]
    for role, specs, key in pools:
        for i, (kind, c0, c1) in enumerate(specs):
            rel = f"textures/{role}_{i}.png"
            files[rel] = _texture_png(kind, seed=hash_seed(role, i), c0=c0, c1=c1)
            manifest[key].append(rel)
    return files, manifest


def hash_seed(role: str, index: int) -> int:
    # stable small seeds for the texture rng; not security-sensitive
    return (sum(role.encode()) * 131 + index) & 0xFFFF


def write_demo_assets(out_dir: str | Path) -> Path:
    """Write the demo asset pack under out_dir; returns the manifest path."""
    out_dir = Path(out_dir)
    files, manifest = demo_files()
    for rel, data in files.items():
        path = out_dir / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest_path


def demo_library(target_scale: float = 1.0, distractor_scale: float = 1.0) -> AssetLibrary:
    """Build the demo AssetLibrary in memory (no files touched)."""
    files, manifest = demo_files()

    def load_mesh(rel: str) -> Mesh:
        data = files[rel]
        if rel.endswith(".obj"):
            return load_obj(data, name=Path(rel).stem)
        return load_stl(data, name=Path(rel).stem)

    target = MeshAsset(
        mesh=recenter_and_scale(load_mesh("target.obj"), target_scale),
        material=Material(base_color=_TARGET_COLOR),
    )
    distractors = tuple(
        MeshAsset(
            mesh=recenter_and_scale(load_mesh(entry["mesh"]), distractor_scale),
            material=Material(base_color=tuple(entry["base_color"])),
        )
        for entry in manifest["distractors"]
    )

    def pool(key: str) -> tuple[Texture, ...]:
        return tuple(load_texture(files[rel]) for rel in manifest[key])

    library = AssetLibrary(
        target=target,
        distractors=distractors,
        floor_textures=pool("floor_textures"),
        support_textures=pool("support_textures"),
        distractor_textures=pool("distractor_textures"),
    )
    library.validate()
    return library
