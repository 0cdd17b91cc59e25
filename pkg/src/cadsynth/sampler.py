"""Deterministic scene sampling: tabletop composition, kinematic settling,
lights, and rejection-sampled cameras.

Every random quantity draws from a stream keyed by (seed, scene_index,
purpose tag), so scene i's content is independent of how many scenes or
cameras a run asks for, and any scene can be regenerated in isolation.

Settling is kinematic, not physical: distractors get a random yaw and drop
height, settle in ascending-height order, overlapping footprints are pushed
apart iteratively, and anything still overlapping a settled item by more
than the stack threshold comes to rest on that item's top instead of the
table. Footprints are the yaw-rotated AABB extents, so "overlap" is a
conservative rectangle test.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass

import numpy as np

from .assets import AssetLibrary, bounding_radius
from .errors import CameraConstraintFailure, ConfigError, PlacementFailure
from .geom import Rect, look_at_quat, quat_from_yaw, quat_to_matrix, rect_overlap_fraction
from .meshio import mesh_bounds
from .render import (
    CompiledScene,
    compile_scene,
    probe_camera,
    project,
    target_visible_fraction,
)
from .scene import (
    CameraPose,
    GenConfig,
    Instance,
    Light,
    MaterialRef,
    Pose,
    SceneSpec,
    TexturedBox,
)

FLOOR_HALF_SIZE = 5.0
FLOOR_THICKNESS = 0.02
STACK_THRESHOLD = 0.5
SETTLE_MAX_ITER = 100
TARGET_PLACE_TRIES = 50
_MASK64 = (1 << 64) - 1


def rng_stream(seed: int, scene_index: int, tag: str, *extra: int) -> np.random.Generator:
    """Independent generator for one sampled quantity of one scene."""
    words = [seed & _MASK64, scene_index & _MASK64, zlib.crc32(tag.encode("utf-8"))]
    words.extend(int(e) & _MASK64 for e in extra)
    return np.random.default_rng(np.random.SeedSequence(words))


# ---------------------------------------------------------------------------
# settling


@dataclass(frozen=True)
class DropItem:
    """One instance handed to settle_drop: which asset, where it starts
    horizontally, and its (recentered) mesh half-extents."""

    asset: str
    xy: tuple[float, float]
    half_extents: tuple[float, float, float]


def yaw_footprint_half_extents(half_extents, yaw: float) -> tuple[float, float]:
    """Half extents of the AABB of a yaw-rotated box footprint."""
    hx, hy = half_extents[0], half_extents[1]
    c = abs(math.cos(yaw))
    s = abs(math.sin(yaw))
    return (c * hx + s * hy, s * hx + c * hy)


def _footprint(xy, he) -> Rect:
    return (xy[0] - he[0], xy[1] - he[1], xy[0] + he[0], xy[1] + he[1])


def settle_drop(
    items: list[DropItem],
    table: TexturedBox,
    rng: np.random.Generator,
    drop_height_range: tuple[float, float] = (0.05, 0.30),
    max_iter: int = SETTLE_MAX_ITER,
    stack_threshold: float = STACK_THRESHOLD,
) -> list[Pose]:
    """Settle dropped items onto the table (or onto each other).

    Returns one Pose per input item, in input order. Raises PlacementFailure
    when an item's footprint cannot fit the table at any yaw.
    """
    n = len(items)
    if n == 0:
        return []
    table_top = float(table.maxs[2])
    tx0, ty0 = float(table.mins[0]), float(table.mins[1])
    tx1, ty1 = float(table.maxs[0]), float(table.maxs[1])

    yaws = [float(rng.uniform(0.0, 2.0 * math.pi)) for _ in range(n)]
    lo, hi = drop_height_range
    heights = [float(rng.uniform(lo, hi)) for _ in range(n)]
    # higher drops land later: settle in ascending height order, stable on ties
    settle_order = sorted(range(n), key=lambda i: (heights[i], i))

    placed_xy: list[tuple[float, float] | None] = [None] * n
    placed_he: list[tuple[float, float] | None] = [None] * n
    placed_z: list[float] = [0.0] * n  # translation z (mesh centers)
    settled: list[int] = []

    for i in settle_order:
        item = items[i]
        he = yaw_footprint_half_extents(item.half_extents, yaws[i])
        if 2.0 * he[0] > (tx1 - tx0) or 2.0 * he[1] > (ty1 - ty0):
            raise PlacementFailure(
                f"footprint {2 * he[0]:.3f}x{2 * he[1]:.3f} of {item.asset!r} exceeds the table"
            )
        x = min(max(item.xy[0], tx0 + he[0]), tx1 - he[0])
        y = min(max(item.xy[1], ty0 + he[1]), ty1 - he[1])

        for _ in range(max_iter):
            moved = False
            for j in settled:
                ov = rect_overlap_fraction(_footprint((x, y), he), _footprint(placed_xy[j], placed_he[j]))
                if ov <= 0.0:
                    continue
                jx, jy = placed_xy[j]
                dx = x - jx
                dy = y - jy
                if dx == 0.0 and dy == 0.0:
                    continue  # identical centers: cannot push, stacking decides
                # penetration depth along each axis of the rectangle pair
                pen_x = (he[0] + placed_he[j][0]) - abs(dx)
                pen_y = (he[1] + placed_he[j][1]) - abs(dy)
                if pen_x <= 0.0 or pen_y <= 0.0:
                    continue
                if pen_x <= pen_y:
                    x += math.copysign(pen_x + 1e-3, dx if dx != 0.0 else 1.0)
                else:
                    y += math.copysign(pen_y + 1e-3, dy if dy != 0.0 else 1.0)
                x = min(max(x, tx0 + he[0]), tx1 - he[0])
                y = min(max(y, ty0 + he[1]), ty1 - he[1])
                moved = True
            if not moved:
                break

        # residual overlaps beyond the threshold force stacking: rest on the
        # highest such supporter so nothing interpenetrates vertically
        rest_z = table_top
        for j in settled:
            ov = rect_overlap_fraction(_footprint((x, y), he), _footprint(placed_xy[j], placed_he[j]))
            if ov > stack_threshold:
                rest_z = max(rest_z, placed_z[j] + items[j].half_extents[2])
        placed_xy[i] = (x, y)
        placed_he[i] = he
        placed_z[i] = rest_z + item.half_extents[2]
        settled.append(i)

    return [
        Pose(
            rotation=quat_from_yaw(yaws[i]),
            translation=(placed_xy[i][0], placed_xy[i][1], placed_z[i]),
        )
        for i in range(n)
    ]


# ---------------------------------------------------------------------------
# lights


def sample_lights(config: GenConfig, rng: np.random.Generator) -> tuple[Light, ...]:
    """1..light_max point/area lights above the table."""
    lo, hi = config.light_count_range
    k = int(rng.integers(lo, hi + 1))
    ilo, ihi = config.light_intensity_range
    lights = []
    for _ in range(k):
        azimuth = float(rng.uniform(0.0, 2.0 * math.pi))
        radius = float(rng.uniform(0.6, 2.2))
        height = config.table_height + float(rng.uniform(0.5, 1.9))
        scalar = float(rng.uniform(ilo, ihi))
        tint = rng.uniform(0.85, 1.0, size=3)
        lights.append(
            Light(
                position=(radius * math.cos(azimuth), radius * math.sin(azimuth), height),
                intensity=tuple(float(scalar * t) for t in tint),
                radius=config.light_radius,
            )
        )
    return tuple(lights)


# ---------------------------------------------------------------------------
# cameras


def _rotated_bounds_center(mesh_aabb, rotation, translation) -> np.ndarray:
    corners = np.array(
        [
            [x, y, z]
            for x in (mesh_aabb.mins[0], mesh_aabb.maxs[0])
            for y in (mesh_aabb.mins[1], mesh_aabb.maxs[1])
            for z in (mesh_aabb.mins[2], mesh_aabb.maxs[2])
        ]
    )
    rot = quat_to_matrix(rotation)
    world = corners @ rot.T + np.asarray(translation)
    return (world.min(axis=0) + world.max(axis=0)) * 0.5


def _camera_for(eye: np.ndarray, at: np.ndarray, config: GenConfig) -> CameraPose:
    w, h = config.resolution
    focal = (h / 2.0) / math.tan(math.radians(config.cam_fov_deg) / 2.0)
    return CameraPose(
        pose=Pose(rotation=look_at_quat(eye, at), translation=tuple(float(v) for v in eye)),
        focal_px=focal,
        principal=(w / 2.0, h / 2.0),
        width=w,
        height=h,
    )


def placeholder_camera(config: GenConfig) -> CameraPose:
    """A syntactically valid camera for scenes compiled before camera sampling."""
    return _camera_for(np.array([1.0, 1.0, 1.0]), np.zeros(3), config)


def sample_camera_compiled(
    compiled_full: CompiledScene,
    compiled_target: CompiledScene,
    target_center: np.ndarray,
    target_radius: float,
    config: GenConfig,
    rng: np.random.Generator,
) -> CameraPose:
    """Rejection-sample a camera against precompiled scene geometry."""
    w, h = config.resolution
    dlo, dhi = config.cam_distance_factors
    elo, ehi = config.cam_elevation_deg
    for _ in range(config.camera_max_attempts):
        jitter = rng.uniform(-0.15, 0.15, size=3) * target_radius
        at = target_center + jitter
        azimuth = float(rng.uniform(0.0, 2.0 * math.pi))
        elevation = math.radians(float(rng.uniform(elo, ehi)))
        dist = float(rng.uniform(dlo, dhi)) * target_radius
        eye = at + dist * np.array(
            [
                math.cos(elevation) * math.cos(azimuth),
                math.cos(elevation) * math.sin(azimuth),
                math.sin(elevation),
            ]
        )
        camera = _camera_for(eye, at, config)

        center_px = project(tuple(target_center), camera)
        if center_px is None:
            continue
        if not (0.1 * w <= center_px[0] <= 0.9 * w and 0.1 * h <= center_px[1] <= 0.9 * h):
            continue
        if config.visibility_min > 0.0:
            probe = probe_camera(camera)
            frac = target_visible_fraction(compiled_full, compiled_target, probe)
            if frac < config.visibility_min:
                continue
        return camera
    raise CameraConstraintFailure(
        f"no camera satisfied the visibility constraints in {config.camera_max_attempts} attempts"
    )


def sample_camera(scene: SceneSpec, assets: AssetLibrary, config: GenConfig,
                  rng: np.random.Generator) -> CameraPose:
    """Standalone entry point: compiles the scene itself. The pipeline uses
    sample_camera_compiled to reuse compiled geometry across cam_poses."""
    target = scene.instances[0]
    mesh = assets.asset_for(target.asset).mesh
    center = _rotated_bounds_center(mesh_bounds(mesh), target.pose.rotation, target.pose.translation)
    return sample_camera_compiled(
        compile_scene(scene, assets),
        compile_scene(scene, assets, target_only=True),
        center,
        bounding_radius(mesh),
        config,
        rng,
    )


# ---------------------------------------------------------------------------
# scene assembly


@dataclass(frozen=True)
class SceneContent:
    """Everything in a scene except the camera (shared across cam_poses)."""

    floor: TexturedBox
    table: TexturedBox
    instances: tuple[Instance, ...]
    lights: tuple[Light, ...]
    target_center: np.ndarray
    target_radius: float


def _gray_tint(rng: np.random.Generator, lo: float = 0.8, hi: float = 1.0):
    return tuple(float(v) for v in rng.uniform(lo, hi, size=3))


def _texture_count(config_n: int, pool: tuple, what: str) -> int:
    if config_n > len(pool):
        raise ConfigError(
            f"config requests {config_n} {what} textures but the asset library has {len(pool)}"
        )
    return config_n


def sample_scene_content(
    config: GenConfig,
    assets: AssetLibrary,
    scene_index: int,
    attempt: int = 0,
) -> SceneContent:
    seed = config.seed

    def stream(tag: str) -> np.random.Generator:
        return rng_stream(seed, scene_index, tag, attempt) if attempt else rng_stream(seed, scene_index, tag)

    rng_floor = stream("floor")
    n_floor = _texture_count(config.n_floor_textures, assets.floor_textures, "floor")
    floor = TexturedBox(
        mins=(-FLOOR_HALF_SIZE, -FLOOR_HALF_SIZE, -FLOOR_THICKNESS),
        maxs=(FLOOR_HALF_SIZE, FLOOR_HALF_SIZE, 0.0),
        material=MaterialRef(
            base_color=_gray_tint(rng_floor),
            texture_role="floor",
            texture_index=int(rng_floor.integers(0, n_floor)),
        ),
    )

    rng_table = stream("table")
    n_support = _texture_count(config.n_support_textures, assets.support_textures, "support")
    sx, sy = config.table_size
    table = TexturedBox(
        mins=(-sx / 2.0, -sy / 2.0, 0.0),
        maxs=(sx / 2.0, sy / 2.0, config.table_height),
        material=MaterialRef(
            base_color=_gray_tint(rng_table),
            texture_role="support",
            texture_index=int(rng_table.integers(0, n_support)),
        ),
    )
    table_top = config.table_height

    # distractors: choose assets, scatter initial positions, settle
    rng_drop = stream("drop")
    n_pool = len(assets.distractors)
    items: list[DropItem] = []
    slots: list[int] = []
    for _ in range(config.n_distractors):
        if n_pool == 0:
            raise ConfigError("config requests distractors but the asset library has none")
        a = int(rng_drop.integers(0, n_pool))
        slots.append(a)
        mesh = assets.distractors[a].mesh
        b = mesh_bounds(mesh)
        he = tuple(float(v) for v in (b.size * 0.5))
        rc = math.hypot(he[0], he[1])
        x = float(rng_drop.uniform(table.mins[0] + rc, table.maxs[0] - rc)) if table.maxs[0] - table.mins[0] > 2 * rc else 0.0
        y = float(rng_drop.uniform(table.mins[1] + rc, table.maxs[1] - rc)) if table.maxs[1] - table.mins[1] > 2 * rc else 0.0
        items.append(DropItem(asset=f"distractor:{a}", xy=(x, y), half_extents=he))

    rng_settle = stream("settle")
    poses = settle_drop(items, table, rng_settle, drop_height_range=config.drop_height_range)

    rng_colors = stream("colors")
    n_dtex = _texture_count(config.n_distractor_textures, assets.distractor_textures, "distractor")
    distractor_instances: list[Instance] = []
    for item, pose, a in zip(items, poses, slots):
        asset = assets.distractors[a]
        if asset.mesh.has_uvs:
            material = MaterialRef(
                base_color=asset.material.base_color,
                texture_role="distractor",
                texture_index=int(rng_colors.integers(0, n_dtex)),
            )
        else:
            material = MaterialRef(
                base_color=tuple(float(v) for v in (0.25 + 0.7 * rng_colors.random(3))),
            )
        distractor_instances.append(Instance(asset=item.asset, pose=pose, material=material))

    # target: uniform over the table, re-sampled while overlap with any
    # settled distractor footprint exceeds the stack threshold
    rng_target = stream("target")
    tmesh = assets.target.mesh
    tb = mesh_bounds(tmesh)
    the = tuple(float(v) for v in (tb.size * 0.5))
    trc = math.hypot(the[0], the[1])
    if 2.0 * trc > sx or 2.0 * trc > sy:
        raise PlacementFailure("target footprint exceeds the table")
    settled_rects = [
        _footprint((p.translation[0], p.translation[1]), yaw_footprint_half_extents(i.half_extents, _pose_yaw(p)))
        for i, p in zip(items, poses)
    ]
    target_pose = None
    for _ in range(TARGET_PLACE_TRIES):
        yaw = float(rng_target.uniform(0.0, 2.0 * math.pi))
        fhe = yaw_footprint_half_extents(the, yaw)
        x = float(rng_target.uniform(table.mins[0] + fhe[0], table.maxs[0] - fhe[0]))
        y = float(rng_target.uniform(table.mins[1] + fhe[1], table.maxs[1] - fhe[1]))
        rect = _footprint((x, y), fhe)
        if any(rect_overlap_fraction(rect, r) > STACK_THRESHOLD for r in settled_rects):
            continue
        target_pose = Pose(rotation=quat_from_yaw(yaw), translation=(x, y, table_top + the[2]))
        break
    if target_pose is None:
        raise PlacementFailure(
            f"could not place the target clear of distractors in {TARGET_PLACE_TRIES} tries"
        )

    target_material = MaterialRef(
        base_color=assets.target.material.base_color,
        texture_role="asset" if assets.target.material.texture is not None else None,
    )
    instances = (
        Instance(asset="target", pose=target_pose, material=target_material),
        *distractor_instances,
    )

    lights = sample_lights(config, stream("lights"))

    target_center = _rotated_bounds_center(tb, target_pose.rotation, target_pose.translation)
    return SceneContent(
        floor=floor,
        table=table,
        instances=instances,
        lights=lights,
        target_center=target_center,
        target_radius=bounding_radius(tmesh),
    )


def _pose_yaw(pose: Pose) -> float:
    w, _, _, z = pose.rotation
    return 2.0 * math.atan2(z, w)


def scene_with_camera(content: SceneContent, camera: CameraPose, config: GenConfig,
                      scene_index: int) -> SceneSpec:
    scene = SceneSpec(
        seed=config.seed,
        scene_index=scene_index,
        resolution=config.resolution,
        floor=content.floor,
        table=content.table,
        instances=content.instances,
        lights=content.lights,
        camera=camera,
        shadow_samples=config.shadow_samples,
    )
    scene.validate()
    return scene


def sample_scene(config: GenConfig, assets: AssetLibrary, scene_index: int,
                 attempt: int = 0) -> SceneSpec:
    """Scene content plus its first camera — a pure function of
    (config, assets, scene_index)."""
    content = sample_scene_content(config, assets, scene_index, attempt=attempt)
    probe_scene = scene_with_camera(content, placeholder_camera(config), config, scene_index)
    compiled_full = compile_scene(probe_scene, assets)
    compiled_target = compile_scene(probe_scene, assets, target_only=True)
    rng = (
        rng_stream(config.seed, scene_index, "camera", 0, attempt)
        if attempt
        else rng_stream(config.seed, scene_index, "camera", 0)
    )
    camera = sample_camera_compiled(
        compiled_full, compiled_target, content.target_center, content.target_radius, config, rng
    )
    return scene_with_camera(content, camera, config, scene_index)
