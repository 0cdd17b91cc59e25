"""Asset pools the scene sampler draws from.

An AssetLibrary bundles the target mesh, the distractor meshes, and the
three texture pools (floor / support / distractor). Libraries are loaded
from a JSON manifest that maps roles to file paths; meshes are scaled and
recentered (bounds center at the origin) at load time so placement math can
treat every instance as a box around its own origin.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import AssetMissing, ConfigError, MalformedMesh
from .geom import Aabb, Vec3
from .imgio import Texture, load_texture
from .meshio import Mesh, load_obj, load_stl, mesh_bounds


@dataclass(frozen=True)
class Material:
    """Lambertian surface description."""

    base_color: Vec3  # RGB in [0,1]^3
    texture: Texture | None = None
    kind: str = "lambertian"

    def validate(self) -> None:
        if self.kind != "lambertian":
            raise ConfigError(f"unsupported material kind {self.kind!r}")
        if not all(0.0 <= c <= 1.0 for c in self.base_color):
            raise ConfigError(f"base_color components must lie in [0,1]: {self.base_color}")


@dataclass(frozen=True)
class MeshAsset:
    mesh: Mesh
    material: Material


@dataclass(frozen=True)
class AssetLibrary:
    target: MeshAsset
    distractors: tuple[MeshAsset, ...]
    floor_textures: tuple[Texture, ...]
    support_textures: tuple[Texture, ...]
    distractor_textures: tuple[Texture, ...]

    def validate(self) -> None:
        self.target.mesh.validate()
        self.target.material.validate()
        for d in self.distractors:
            d.mesh.validate()
            d.material.validate()
        for pool in (self.floor_textures, self.support_textures, self.distractor_textures):
            for tex in pool:
                tex.validate()

    def mesh_for(self, asset_id: str) -> Mesh:
        return self.asset_for(asset_id).mesh

    def asset_for(self, asset_id: str) -> MeshAsset:
        """Resolve a SceneSpec instance id ("target" or "distractor:<i>")."""
        if asset_id == "target":
            return self.target
        if asset_id.startswith("distractor:"):
            try:
                idx = int(asset_id.split(":", 1)[1])
            except ValueError:
                raise AssetMissing(f"bad asset id {asset_id!r}") from None
            if 0 <= idx < len(self.distractors):
                return self.distractors[idx]
        raise AssetMissing(f"asset {asset_id!r} not in library")

    def texture_pool(self, role: str) -> tuple[Texture, ...]:
        pools = {
            "floor": self.floor_textures,
            "support": self.support_textures,
            "distractor": self.distractor_textures,
        }
        if role not in pools:
            raise AssetMissing(f"unknown texture role {role!r}")
        return pools[role]

    def resolve_texture(self, role: str | None, index: int | None) -> Texture | None:
        if role is None:
            return None
        pool = self.texture_pool(role)
        if index is None or not (0 <= index < len(pool)):
            raise AssetMissing(f"texture {role}[{index}] not in library")
        return pool[index]


def recenter_and_scale(mesh: Mesh, scale: float = 1.0) -> Mesh:
    """Return a copy with bounds center at the origin, vertices scaled."""
    if scale <= 0 or not np.isfinite(scale):
        raise ConfigError(f"asset scale must be positive and finite, got {scale}")
    center = mesh_bounds(mesh).center
    vertices = (mesh.vertices - center) * float(scale)
    return replace(mesh, vertices=vertices)


def bounding_radius(mesh: Mesh) -> float:
    """Radius of the tightest origin-centered sphere containing the bounds."""
    b: Aabb = mesh_bounds(mesh)
    corners = np.maximum(np.abs(b.mins), np.abs(b.maxs))
    return float(np.sqrt(np.sum(corners * corners)))


def _load_mesh_file(path: Path) -> Mesh:
    if not path.is_file():
        raise AssetMissing(f"mesh file not found: {path}")
    data = path.read_bytes()
    suffix = path.suffix.lower()
    if suffix == ".obj":
        return load_obj(data, name=path.stem)
    if suffix == ".stl":
        return load_stl(data, name=path.stem)
    raise MalformedMesh(f"unsupported mesh format {suffix!r} for {path}")


def _load_texture_file(path: Path) -> Texture:
    if not path.is_file():
        raise AssetMissing(f"texture file not found: {path}")
    return load_texture(path.read_bytes())


def _entry_material(entry: dict, root: Path) -> Material:
    color = tuple(float(c) for c in entry.get("base_color", (0.8, 0.8, 0.8)))
    if len(color) != 3:
        raise ConfigError(f"base_color must have 3 components: {entry.get('base_color')}")
    texture = None
    if entry.get("texture") is not None:
        texture = _load_texture_file(root / entry["texture"])
    mat = Material(base_color=color, texture=texture)
    mat.validate()
    return mat


def _load_mesh_entry(entry, root: Path, extra_scale: float) -> MeshAsset:
    """entry is either a path string or {"mesh": path, "base_color": ..., "texture": ..., "scale": ...}."""
    if isinstance(entry, str):
        entry = {"mesh": entry}
    if not isinstance(entry, dict) or "mesh" not in entry:
        raise ConfigError(f"mesh entry must be a path or an object with a 'mesh' key: {entry!r}")
    mesh = _load_mesh_file(root / entry["mesh"])
    scale = float(entry.get("scale", 1.0)) * extra_scale
    mesh = recenter_and_scale(mesh, scale)
    material = _entry_material(entry, root)
    if material.texture is not None and not mesh.has_uvs:
        raise ConfigError(f"textured mesh {entry['mesh']!r} has no uv coordinates")
    return MeshAsset(mesh=mesh, material=material)


def load_asset_library(
    manifest_path: str | Path,
    target_scale: float = 1.0,
    distractor_scale: float = 1.0,
) -> AssetLibrary:
    """Load an AssetLibrary from a JSON manifest.

    Manifest schema::

        {
          "target": "widget.obj" | {"mesh": ..., "base_color": [r,g,b], "texture": ..., "scale": s},
          "distractors": [<same as target>, ...],
          "floor_textures": ["floor0.png", ...],
          "support_textures": [...],
          "distractor_textures": [...]
        }

    Relative paths resolve against the manifest's directory.
    """
    manifest_path = Path(manifest_path)
    if not manifest_path.is_file():
        raise AssetMissing(f"asset manifest not found: {manifest_path}")
    try:
        doc = json.loads(manifest_path.read_text())
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"asset manifest is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("asset manifest must be a JSON object")
    unknown = set(doc) - {
        "target", "distractors", "floor_textures", "support_textures", "distractor_textures",
    }
    if unknown:
        raise ConfigError(f"unknown asset manifest keys: {sorted(unknown)}")
    if "target" not in doc:
        raise ConfigError("asset manifest is missing the 'target' entry")

    root = manifest_path.parent
    target = _load_mesh_entry(doc["target"], root, target_scale)
    distractors = tuple(
        _load_mesh_entry(entry, root, distractor_scale) for entry in doc.get("distractors", [])
    )

    def texture_pool(key: str) -> tuple[Texture, ...]:
        paths = doc.get(key, [])
        if not isinstance(paths, list):
            raise ConfigError(f"{key} must be a list of paths")
        return tuple(_load_texture_file(root / p) for p in paths)

    library = AssetLibrary(
        target=target,
        distractors=distractors,
        floor_textures=texture_pool("floor_textures"),
        support_textures=texture_pool("support_textures"),
        distractor_textures=texture_pool("distractor_textures"),
    )
    library.validate()
    return library
