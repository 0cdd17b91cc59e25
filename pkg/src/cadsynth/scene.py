"""Scene description values and the generation config.

A SceneSpec is a plain value: two scenes with equal fields render to
byte-identical images. Everything is stored as Python tuples of floats so
structural equality and exact JSON round-trips hold (json preserves float64
via repr). Quaternions are serialized as [w, x, y, z].
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, replace
from typing import Any

from .errors import ConfigError
from .geom import Quat, Vec3

TARGET_ASSET = "target"


@dataclass(frozen=True)
class Pose:
    rotation: Quat  # unit quaternion (w, x, y, z)
    translation: Vec3

    def validate(self) -> None:
        w, x, y, z = self.rotation
        n = math.sqrt(w * w + x * x + y * y + z * z)
        if abs(n - 1.0) > 1e-9:
            raise ConfigError(f"quaternion norm {n} not unit")


@dataclass(frozen=True)
class CameraPose:
    pose: Pose
    focal_px: float
    principal: tuple[float, float]
    width: int
    height: int

    def validate(self) -> None:
        self.pose.validate()
        if self.focal_px <= 0:
            raise ConfigError("focal length must be positive")
        if self.width < 1 or self.height < 1:
            raise ConfigError("camera image size must be positive")


@dataclass(frozen=True)
class Light:
    position: Vec3
    intensity: Vec3  # RGB radiant scale, >= 0 per channel
    radius: float = 0.0  # meters; 0 = point light

    def validate(self) -> None:
        if any(c < 0 for c in self.intensity):
            raise ConfigError("light intensity components must be >= 0")
        if self.radius < 0:
            raise ConfigError("light radius must be >= 0")


@dataclass(frozen=True)
class MaterialRef:
    """Appearance of one scene surface: tint color plus optional pool texture."""

    base_color: Vec3
    texture_role: str | None = None  # floor | support | distractor | target
    texture_index: int | None = None


@dataclass(frozen=True)
class TexturedBox:
    mins: Vec3
    maxs: Vec3
    material: MaterialRef


@dataclass(frozen=True)
class Instance:
    asset: str  # "target" or "distractor:<i>"
    pose: Pose
    material: MaterialRef


@dataclass(frozen=True)
class SceneSpec:
    seed: int
    scene_index: int
    resolution: tuple[int, int]
    floor: TexturedBox
    table: TexturedBox
    instances: tuple[Instance, ...]
    lights: tuple[Light, ...]
    camera: CameraPose
    shadow_samples: int = 1

    def validate(self) -> None:
        targets = [i for i in self.instances if i.asset == TARGET_ASSET]
        if len(targets) != 1:
            raise ConfigError(f"scene must contain exactly one target instance, found {len(targets)}")
        if self.instances[0].asset != TARGET_ASSET:
            raise ConfigError("target must be the first instance")
        for inst in self.instances:
            inst.pose.validate()
            if inst.pose.translation[2] < 0:
                raise ConfigError("instance translation below the floor plane")
        for light in self.lights:
            light.validate()
        self.camera.validate()
        if (self.camera.width, self.camera.height) != tuple(self.resolution):
            raise ConfigError("camera intrinsics do not match scene resolution")


def _pose_to_json(p: Pose) -> dict:
    return {"rotation": list(p.rotation), "translation": list(p.translation)}


def _pose_from_json(d: dict) -> Pose:
    return Pose(rotation=tuple(d["rotation"]), translation=tuple(d["translation"]))


def _material_to_json(m: MaterialRef) -> dict:
    return {
        "base_color": list(m.base_color),
        "texture_role": m.texture_role,
        "texture_index": m.texture_index,
    }


def _material_from_json(d: dict) -> MaterialRef:
    return MaterialRef(
        base_color=tuple(d["base_color"]),
        texture_role=d.get("texture_role"),
        texture_index=d.get("texture_index"),
    )


def scene_to_json(scene: SceneSpec) -> str:
    doc = {
        "seed": scene.seed,
        "scene_index": scene.scene_index,
        "resolution": list(scene.resolution),
        "floor": {
            "mins": list(scene.floor.mins),
            "maxs": list(scene.floor.maxs),
            "material": _material_to_json(scene.floor.material),
        },
        "table": {
            "mins": list(scene.table.mins),
            "maxs": list(scene.table.maxs),
            "material": _material_to_json(scene.table.material),
        },
        "instances": [
            {
                "asset": inst.asset,
                "pose": _pose_to_json(inst.pose),
                "material": _material_to_json(inst.material),
            }
            for inst in scene.instances
        ],
        "lights": [
            {"position": list(l.position), "intensity": list(l.intensity), "radius": l.radius}
            for l in scene.lights
        ],
        "camera": {
            "pose": _pose_to_json(scene.camera.pose),
            "focal_px": scene.camera.focal_px,
            "principal": list(scene.camera.principal),
            "width": scene.camera.width,
            "height": scene.camera.height,
        },
        "shadow_samples": scene.shadow_samples,
    }
    return json.dumps(doc, indent=2)


def scene_from_json(text: str | bytes) -> SceneSpec:
    try:
        doc = json.loads(text)
        box = lambda d: TexturedBox(  # noqa: E731
            mins=tuple(d["mins"]), maxs=tuple(d["maxs"]), material=_material_from_json(d["material"])
        )
        cam = doc["camera"]
        scene = SceneSpec(
            seed=int(doc["seed"]),
            scene_index=int(doc["scene_index"]),
            resolution=tuple(doc["resolution"]),
            floor=box(doc["floor"]),
            table=box(doc["table"]),
            instances=tuple(
                Instance(
                    asset=i["asset"],
                    pose=_pose_from_json(i["pose"]),
                    material=_material_from_json(i["material"]),
                )
                for i in doc["instances"]
            ),
            lights=tuple(
                Light(position=tuple(l["position"]), intensity=tuple(l["intensity"]), radius=l["radius"])
                for l in doc["lights"]
            ),
            camera=CameraPose(
                pose=_pose_from_json(cam["pose"]),
                focal_px=cam["focal_px"],
                principal=tuple(cam["principal"]),
                width=int(cam["width"]),
                height=int(cam["height"]),
            ),
            shadow_samples=int(doc.get("shadow_samples", 1)),
        )
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise ConfigError(f"malformed scene document: {exc}") from None
    scene.validate()
    return scene


@dataclass(frozen=True)
class GenConfig:
    """Parameters of one dataset generation run."""

    resolution: tuple[int, int] = (640, 480)
    n_scenes: int = 20
    cam_poses: int = 5
    n_distractors: int = 20
    n_floor_textures: int = 7
    n_support_textures: int = 6
    n_distractor_textures: int = 6
    seed: int = 0
    visibility_min: float = 0.05
    class_name: str = "target"
    target_scale: float = 1.0
    distractor_scale: float = 1.0
    table_size: tuple[float, float] = (1.6, 1.0)
    table_height: float = 0.72
    drop_height_range: tuple[float, float] = (0.05, 0.30)
    cam_distance_factors: tuple[float, float] = (2.0, 6.0)
    cam_elevation_deg: tuple[float, float] = (15.0, 75.0)
    cam_fov_deg: float = 55.0
    light_count_range: tuple[int, int] = (1, 3)
    light_intensity_range: tuple[float, float] = (6.0, 18.0)
    light_radius: float = 0.0
    shadow_samples: int = 1
    min_box_pixels: int = 16
    camera_max_attempts: int = 64
    write_masks: bool = False

    @property
    def n_images(self) -> int:
        return self.n_scenes * self.cam_poses

    def validate(self) -> None:
        w, h = self.resolution
        if w < 1 or h < 1:
            raise ConfigError(f"resolution must be positive, got {self.resolution}")
        for name in ("n_scenes", "cam_poses"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.n_distractors < 0:
            raise ConfigError("n_distractors must be >= 0")
        for name in ("n_floor_textures", "n_support_textures", "n_distractor_textures"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if not (0.0 <= self.visibility_min <= 1.0):
            raise ConfigError("visibility_min must be in [0, 1]")
        if not self.class_name:
            raise ConfigError("class_name must be non-empty")
        for name in ("drop_height_range", "cam_distance_factors", "cam_elevation_deg",
                     "light_intensity_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ConfigError(f"{name} must be (lo, hi) with lo <= hi")
        lo, hi = self.light_count_range
        if lo < 0 or lo > hi:
            raise ConfigError("light_count_range must be (lo, hi) with 0 <= lo <= hi")
        if not (0.0 < self.cam_fov_deg < 180.0):
            raise ConfigError("cam_fov_deg must be in (0, 180)")
        if self.shadow_samples < 1:
            raise ConfigError("shadow_samples must be >= 1")

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        for key, value in d.items():
            if isinstance(value, tuple):
                d[key] = list(value)
        d["n_images"] = self.n_images
        return d

    @staticmethod
    def field_names() -> set[str]:
        return set(GenConfig.__dataclass_fields__.keys())

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "GenConfig":
        known = cls.field_names()
        unknown = set(doc) - known - {"n_images"}
        if unknown:
            raise ConfigError(f"unknown GenConfig fields: {sorted(unknown)}")
        kwargs = {}
        tuple_fields = {
            "resolution", "table_size", "drop_height_range", "cam_distance_factors",
            "cam_elevation_deg", "light_count_range", "light_intensity_range",
        }
        for key, value in doc.items():
            if key == "n_images":
                continue
            kwargs[key] = tuple(value) if key in tuple_fields else value
        cfg = cls(**kwargs)
        cfg.validate()
        if "n_images" in doc and int(doc["n_images"]) != cfg.n_images:
            raise ConfigError(
                f"n_images {doc['n_images']} does not match n_scenes * cam_poses = {cfg.n_images}"
            )
        return cfg

    @classmethod
    def from_json(cls, text: str | bytes) -> "GenConfig":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError("config document must be a JSON object")
        try:
            return cls.from_dict(doc)
        except TypeError as exc:
            raise ConfigError(f"bad config value: {exc}") from None

    def with_seed(self, seed: int) -> "GenConfig":
        return replace(self, seed=seed)
