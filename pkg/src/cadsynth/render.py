"""Scene compilation and the rendering operations.

A SceneSpec is compiled into flat world-space triangle arrays plus a BVH;
the numba kernels in kernels.py consume those arrays row-range by row-range.
Parallel rendering splits rows across threads (the kernels release the GIL)
and is byte-identical to a serial render because every pixel runs the same
scalar code path regardless of partitioning.

Instance ids in masks: 0 = background (floor, table, sky), 1 = target,
2 + i = distractor i's instance slot.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .assets import AssetLibrary
from .boxes import BBox
from .bvh import Bvh, build_bvh
from .errors import ConfigError
from .geom import quat_to_matrix
from .imgio import Image, Mask, Texture
from .kernels import mask_rows, shade_rows
from .scene import CameraPose, SceneSpec, TexturedBox

FLOOR_UV_SCALE = 1.0  # meters per texture repeat on the floor
TABLE_UV_SCALE = 0.4


@dataclass
class CompiledScene:
    """World-space triangle soup + appearance data + BVH for one scene."""

    v0: np.ndarray  # (t, 3) float64
    v1: np.ndarray
    v2: np.ndarray
    inst_id: np.ndarray  # (t,) int32
    tri_color: np.ndarray  # (t, 3) float64
    tri_tex: np.ndarray  # (t,) int32, -1 = untextured
    uva: np.ndarray  # (t, 2) float64
    uvb: np.ndarray
    uvc: np.ndarray
    tex_data: np.ndarray  # flat float64, all atlas texels scaled to [0,1]
    tex_off: np.ndarray  # (n,) int64
    tex_w: np.ndarray
    tex_h: np.ndarray
    light_pos: np.ndarray  # (l, 3) float64
    light_int: np.ndarray  # (l, 3) float64
    light_radius: np.ndarray  # (l,) float64
    shadow_samples: int
    bvh: Bvh

    @property
    def n_triangles(self) -> int:
        return int(self.v0.shape[0])


class _Builder:
    def __init__(self) -> None:
        self.v0: list[np.ndarray] = []
        self.v1: list[np.ndarray] = []
        self.v2: list[np.ndarray] = []
        self.inst_id: list[np.ndarray] = []
        self.color: list[np.ndarray] = []
        self.tex: list[np.ndarray] = []
        self.uva: list[np.ndarray] = []
        self.uvb: list[np.ndarray] = []
        self.uvc: list[np.ndarray] = []
        self.textures: list[Texture] = []
        self._tex_ids: dict[int, int] = {}

    def texture_id(self, texture: Texture | None) -> int:
        if texture is None:
            return -1
        key = id(texture)
        if key not in self._tex_ids:
            self._tex_ids[key] = len(self.textures)
            self.textures.append(texture)
        return self._tex_ids[key]

    def add(self, v0, v1, v2, uva, uvb, uvc, inst: int, color, tex_id: int) -> None:
        n = v0.shape[0]
        self.v0.append(v0)
        self.v1.append(v1)
        self.v2.append(v2)
        self.inst_id.append(np.full(n, inst, dtype=np.int32))
        self.color.append(np.tile(np.asarray(color, dtype=np.float64), (n, 1)))
        self.tex.append(np.full(n, tex_id, dtype=np.int32))
        if uva is None:
            z = np.zeros((n, 2), dtype=np.float64)
            self.uva.append(z)
            self.uvb.append(z)
            self.uvc.append(z)
        else:
            self.uva.append(uva)
            self.uvb.append(uvb)
            self.uvc.append(uvc)


def _box_quads(mins, maxs, uv_scale: float):
    """Yield (corners[4], uvs[4]) per cuboid face; corners counter-clockwise
    seen from outside, uvs from the two in-plane world coordinates."""
    x0, y0, z0 = mins
    x1, y1, z1 = maxs
    s = 1.0 / uv_scale

    def uv(a, b):
        return (a * s, b * s)

    # +z (top) and -z (bottom), uv from (x, y)
    yield (
        [(x0, y0, z1), (x1, y0, z1), (x1, y1, z1), (x0, y1, z1)],
        [uv(x0, y0), uv(x1, y0), uv(x1, y1), uv(x0, y1)],
    )
    yield (
        [(x0, y1, z0), (x1, y1, z0), (x1, y0, z0), (x0, y0, z0)],
        [uv(x0, y1), uv(x1, y1), uv(x1, y0), uv(x0, y0)],
    )
    # -y and +y, uv from (x, z)
    yield (
        [(x0, y0, z0), (x1, y0, z0), (x1, y0, z1), (x0, y0, z1)],
        [uv(x0, z0), uv(x1, z0), uv(x1, z1), uv(x0, z1)],
    )
    yield (
        [(x1, y1, z0), (x0, y1, z0), (x0, y1, z1), (x1, y1, z1)],
        [uv(x1, z0), uv(x0, z0), uv(x0, z1), uv(x1, z1)],
    )
    # -x and +x, uv from (y, z)
    yield (
        [(x0, y1, z0), (x0, y0, z0), (x0, y0, z1), (x0, y1, z1)],
        [uv(y1, z0), uv(y0, z0), uv(y0, z1), uv(y1, z1)],
    )
    yield (
        [(x1, y0, z0), (x1, y1, z0), (x1, y1, z1), (x1, y0, z1)],
        [uv(y0, z0), uv(y1, z0), uv(y1, z1), uv(y0, z1)],
    )


def _add_box(builder: _Builder, box: TexturedBox, assets: AssetLibrary, uv_scale: float) -> None:
    tex = assets.resolve_texture(box.material.texture_role, box.material.texture_index)
    tex_id = builder.texture_id(tex)
    corners_v0, corners_v1, corners_v2 = [], [], []
    uv_a, uv_b, uv_c = [], [], []
    for corners, uvs in _box_quads(box.mins, box.maxs, uv_scale):
        for tri in ((0, 1, 2), (0, 2, 3)):
            corners_v0.append(corners[tri[0]])
            corners_v1.append(corners[tri[1]])
            corners_v2.append(corners[tri[2]])
            uv_a.append(uvs[tri[0]])
            uv_b.append(uvs[tri[1]])
            uv_c.append(uvs[tri[2]])
    builder.add(
        np.asarray(corners_v0, dtype=np.float64),
        np.asarray(corners_v1, dtype=np.float64),
        np.asarray(corners_v2, dtype=np.float64),
        np.asarray(uv_a, dtype=np.float64),
        np.asarray(uv_b, dtype=np.float64),
        np.asarray(uv_c, dtype=np.float64),
        inst=0,
        color=box.material.base_color,
        tex_id=tex_id,
    )


def compile_scene(scene: SceneSpec, assets: AssetLibrary, target_only: bool = False) -> CompiledScene:
    """Flatten a SceneSpec into kernel-ready arrays.

    target_only builds a scene containing just the target instance — used as
    the denominator when measuring the target's visible fraction.
    """
    builder = _Builder()
    if not target_only:
        _add_box(builder, scene.floor, assets, FLOOR_UV_SCALE)
        _add_box(builder, scene.table, assets, TABLE_UV_SCALE)

    for slot, inst in enumerate(scene.instances):
        if target_only and inst.asset != "target":
            continue
        asset = assets.asset_for(inst.asset)
        mesh = asset.mesh
        rot = quat_to_matrix(inst.pose.rotation)
        world = mesh.vertices @ rot.T + np.asarray(inst.pose.translation, dtype=np.float64)
        tri = mesh.triangles
        v0 = np.ascontiguousarray(world[tri[:, 0]])
        v1 = np.ascontiguousarray(world[tri[:, 1]])
        v2 = np.ascontiguousarray(world[tri[:, 2]])
        material = inst.material
        if material.texture_role == "asset":
            tex = asset.material.texture
        else:
            tex = assets.resolve_texture(material.texture_role, material.texture_index)
        uva = uvb = uvc = None
        tex_id = -1
        if tex is not None and mesh.has_uvs:
            tex_id = builder.texture_id(tex)
            uva = np.ascontiguousarray(mesh.uvs[mesh.uv_indices[:, 0]])
            uvb = np.ascontiguousarray(mesh.uvs[mesh.uv_indices[:, 1]])
            uvc = np.ascontiguousarray(mesh.uvs[mesh.uv_indices[:, 2]])
        builder.add(v0, v1, v2, uva, uvb, uvc,
                    inst=slot + 1, color=material.base_color, tex_id=tex_id)

    if not builder.v0:
        raise ConfigError("scene compiles to zero triangles")

    v0 = np.ascontiguousarray(np.concatenate(builder.v0))
    v1 = np.ascontiguousarray(np.concatenate(builder.v1))
    v2 = np.ascontiguousarray(np.concatenate(builder.v2))

    tex_chunks = []
    tex_off = np.zeros(max(len(builder.textures), 1), dtype=np.int64)
    tex_w = np.ones(max(len(builder.textures), 1), dtype=np.int64)
    tex_h = np.ones(max(len(builder.textures), 1), dtype=np.int64)
    offset = 0
    for i, texture in enumerate(builder.textures):
        flat = (texture.pixels.astype(np.float64) / 255.0).ravel()
        tex_chunks.append(flat)
        tex_off[i] = offset
        tex_w[i] = texture.width
        tex_h[i] = texture.height
        offset += flat.size
    tex_data = np.concatenate(tex_chunks) if tex_chunks else np.zeros(3, dtype=np.float64)

    lights = scene.lights
    light_pos = np.asarray([l.position for l in lights], dtype=np.float64).reshape(len(lights), 3)
    light_int = np.asarray([l.intensity for l in lights], dtype=np.float64).reshape(len(lights), 3)
    light_radius = np.asarray([l.radius for l in lights], dtype=np.float64)

    return CompiledScene(
        v0=v0, v1=v1, v2=v2,
        inst_id=np.concatenate(builder.inst_id),
        tri_color=np.ascontiguousarray(np.concatenate(builder.color)),
        tri_tex=np.concatenate(builder.tex),
        uva=np.ascontiguousarray(np.concatenate(builder.uva)),
        uvb=np.ascontiguousarray(np.concatenate(builder.uvb)),
        uvc=np.ascontiguousarray(np.concatenate(builder.uvc)),
        tex_data=tex_data, tex_off=tex_off, tex_w=tex_w, tex_h=tex_h,
        light_pos=light_pos, light_int=light_int, light_radius=light_radius,
        shadow_samples=scene.shadow_samples,
        bvh=build_bvh(v0, v1, v2),
    )


def _camera_arrays(camera: CameraPose):
    origin = np.asarray(camera.pose.translation, dtype=np.float64)
    rot = quat_to_matrix(camera.pose.rotation)
    return origin, rot, float(camera.focal_px), float(camera.principal[0]), float(camera.principal[1])


def _row_chunks(height: int, workers: int) -> list[tuple[int, int]]:
    workers = max(1, min(workers, height))
    bounds = np.linspace(0, height, workers + 1).astype(int)
    return [(int(bounds[i]), int(bounds[i + 1])) for i in range(workers) if bounds[i] < bounds[i + 1]]


def render_compiled(compiled: CompiledScene, camera: CameraPose, workers: int = 1) -> tuple[Image, Mask]:
    """Full shaded render plus the instance-id mask along the same rays."""
    w, h = camera.width, camera.height
    out_rgb = np.empty((h, w, 3), dtype=np.uint8)
    out_mask = np.empty((h, w), dtype=np.int32)
    origin, rot, f, cx, cy = _camera_arrays(camera)
    b = compiled.bvh

    def run(y0: int, y1: int) -> None:
        shade_rows(
            y0, y1, w, origin, rot, f, cx, cy,
            compiled.v0, compiled.v1, compiled.v2, compiled.inst_id,
            compiled.tri_color, compiled.tri_tex, compiled.uva, compiled.uvb, compiled.uvc,
            compiled.tex_data, compiled.tex_off, compiled.tex_w, compiled.tex_h,
            compiled.light_pos, compiled.light_int, compiled.light_radius,
            compiled.shadow_samples,
            b.node_mins, b.node_maxs, b.node_right, b.node_start, b.node_count, b.prim_index,
            out_rgb, out_mask,
        )

    chunks = _row_chunks(h, workers)
    if len(chunks) == 1:
        run(0, h)
    else:
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            list(pool.map(lambda c: run(*c), chunks))
    return Image(width=w, height=h, pixels=out_rgb), Mask(width=w, height=h, ids=out_mask)


def render_mask_compiled(compiled: CompiledScene, camera: CameraPose, workers: int = 1) -> Mask:
    """Instance-id pass only (no shading) — the labeling mask."""
    w, h = camera.width, camera.height
    out_mask = np.empty((h, w), dtype=np.int32)
    origin, rot, f, cx, cy = _camera_arrays(camera)
    b = compiled.bvh

    def run(y0: int, y1: int) -> None:
        mask_rows(
            y0, y1, w, origin, rot, f, cx, cy,
            compiled.v0, compiled.v1, compiled.v2, compiled.inst_id,
            b.node_mins, b.node_maxs, b.node_right, b.node_start, b.node_count, b.prim_index,
            out_mask,
        )

    chunks = _row_chunks(h, workers)
    if len(chunks) == 1:
        run(0, h)
    else:
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            list(pool.map(lambda c: run(*c), chunks))
    return Mask(width=w, height=h, ids=out_mask)


def render(scene: SceneSpec, assets: AssetLibrary, workers: int = 1) -> Image:
    image, _ = render_compiled(compile_scene(scene, assets), scene.camera, workers=workers)
    return image


def render_mask(scene: SceneSpec, assets: AssetLibrary, workers: int = 1) -> Mask:
    return render_mask_compiled(compile_scene(scene, assets), scene.camera, workers=workers)


def render_full(scene: SceneSpec, assets: AssetLibrary, workers: int = 1) -> tuple[Image, Mask]:
    return render_compiled(compile_scene(scene, assets), scene.camera, workers=workers)


def mask_to_bbox(mask: Mask, target_id: int, min_pixels: int = 16) -> BBox | None:
    """Tight half-open box over pixels with the target id; None when the
    visible pixel count is below min_pixels."""
    ys, xs = np.nonzero(mask.ids == target_id)
    if xs.size < min_pixels:
        return None
    return BBox(
        xmin=int(xs.min()), ymin=int(ys.min()),
        xmax=int(xs.max()) + 1, ymax=int(ys.max()) + 1,
    )


def project(point, camera: CameraPose) -> tuple[float, float] | None:
    """Pinhole projection to pixel coordinates; None for points at or behind
    the camera plane."""
    p = np.asarray(point, dtype=np.float64)
    origin, rot, f, cx, cy = _camera_arrays(camera)
    cam = rot.T @ (p - origin)
    if cam[2] <= 1e-12:
        return None
    return (f * cam[0] / cam[2] + cx, f * cam[1] / cam[2] + cy)


def probe_camera(camera: CameraPose, factor: int = 4) -> CameraPose:
    """Shrink a camera to a reduced-resolution probe with the same field of
    view (focal and principal point scaled by the true size ratio)."""
    w = max(1, camera.width // factor)
    h = max(1, camera.height // factor)
    sx = w / camera.width
    sy = h / camera.height
    return CameraPose(
        pose=camera.pose,
        focal_px=camera.focal_px * sy,
        principal=(camera.principal[0] * sx, camera.principal[1] * sy),
        width=w,
        height=h,
    )


def target_visible_fraction(
    compiled_full: CompiledScene,
    compiled_target: CompiledScene,
    camera: CameraPose,
    target_id: int = 1,
) -> float:
    """Visible pixels of the target divided by the pixels it would cover
    unoccluded (target-only scene along the same camera)."""
    full = render_mask_compiled(compiled_full, camera)
    alone = render_mask_compiled(compiled_target, camera)
    denom = int(np.count_nonzero(alone.ids == target_id))
    if denom == 0:
        return 0.0
    num = int(np.count_nonzero(full.ids == target_id))
    return num / denom
