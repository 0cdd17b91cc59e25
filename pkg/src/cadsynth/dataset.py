"""Dataset generation and on-disk layout.

A dataset directory looks like

    out/
      images/img_000000.png ...
      annotations/img_000000.xml ...
      masks/img_000000.png ...      (only when masks are kept)
      manifest.json
      timing.json

manifest.json is fully deterministic for a given config (it is compared
byte-for-byte in the determinism tests), so the wall-clock generation
time lives in the timing.json sidecar instead.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional

from .assets import AssetLibrary
from .errors import (CameraConstraintFailure, ConfigError, GenerationFailure, IoFailure,
                     PlacementFailure)
from .imgio import Image, Mask, encode_png, mask_to_gray_png
from .render import compile_scene, mask_to_bbox, render_compiled
from .sampler import (placeholder_camera, rng_stream, sample_camera_compiled,
                      sample_scene_content, scene_with_camera)
from .scene import GenConfig
from .voc import Annotation, VocObject, parse_voc_xml, with_filename, write_voc_xml

GENERATOR_VERSION = "0.1.0"
SCENE_RETRY_BUDGET = 3  # attempts 0, 1, 2 before GenerationFailure

REASON_CAMERA = "camera-constraint"
REASON_MIN_PIXELS = "below-min-pixels"


@dataclass(frozen=True)
class FrameSample:
    image: Image
    mask: Optional[Mask]
    annotation: Annotation
    scene_index: int
    camera_index: int


@dataclass(frozen=True)
class ManifestEntry:
    image: str
    annotation: str
    scene_index: int
    camera_index: int
    mask: Optional[str] = None


@dataclass(frozen=True)
class Rejection:
    scene_index: int
    camera_index: int
    reason: str


@dataclass(frozen=True)
class DatasetManifest:
    generator_version: str
    config: GenConfig
    entries: tuple[ManifestEntry, ...] = field(default_factory=tuple)
    rejections: tuple[Rejection, ...] = field(default_factory=tuple)
    generation_time_seconds: float = 0.0

    @property
    def n_images(self) -> int:
        return len(self.entries)

    def to_dict(self) -> dict:
        return {
            "generator_version": self.generator_version,
            "config": self.config.to_dict(),
            "entries": [
                {"image": e.image, "annotation": e.annotation, "mask": e.mask,
                 "scene_index": e.scene_index, "camera_index": e.camera_index}
                for e in self.entries
            ],
            "rejections": [
                {"scene_index": r.scene_index, "camera_index": r.camera_index,
                 "reason": r.reason}
                for r in self.rejections
            ],
        }


def write_dataset(samples: list[FrameSample], config: GenConfig, out_dir: Path,
                  rejections: tuple[Rejection, ...] = (),
                  generation_time_seconds: float = 0.0) -> DatasetManifest:
    out_dir = Path(out_dir)
    any_mask = any(s.mask is not None for s in samples)
    try:
        (out_dir / "images").mkdir(parents=True, exist_ok=True)
        (out_dir / "annotations").mkdir(parents=True, exist_ok=True)
        if any_mask:
            (out_dir / "masks").mkdir(parents=True, exist_ok=True)

        entries = []
        for index, sample in enumerate(samples):
            stem = f"img_{index:06d}"
            image_rel = f"images/{stem}.png"
            ann_rel = f"annotations/{stem}.xml"
            (out_dir / image_rel).write_bytes(encode_png(sample.image.pixels))
            annotation = with_filename(sample.annotation, f"{stem}.png")
            (out_dir / ann_rel).write_bytes(write_voc_xml(annotation))
            mask_rel = None
            if sample.mask is not None:
                mask_rel = f"masks/{stem}.png"
                (out_dir / mask_rel).write_bytes(mask_to_gray_png(sample.mask))
            entries.append(ManifestEntry(image=image_rel, annotation=ann_rel, mask=mask_rel,
                                         scene_index=sample.scene_index,
                                         camera_index=sample.camera_index))

        manifest = DatasetManifest(
            generator_version=GENERATOR_VERSION, config=config,
            entries=tuple(entries), rejections=tuple(rejections),
            generation_time_seconds=generation_time_seconds,
        )
        manifest_text = json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n"
        (out_dir / "manifest.json").write_text(manifest_text, encoding="utf-8")
        timing_text = json.dumps(
            {"generation_time_seconds": generation_time_seconds}, indent=2) + "\n"
        (out_dir / "timing.json").write_text(timing_text, encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write dataset under {out_dir}: {exc}") from None
    return manifest


def read_manifest(dataset_dir: Path) -> DatasetManifest:
    dataset_dir = Path(dataset_dir)
    path = dataset_dir / "manifest.json"
    if not path.is_file():
        raise IoFailure(f"manifest not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"corrupted manifest {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"corrupted manifest {path}: top level is not an object")
    try:
        config = GenConfig.from_dict(raw["config"])
        entries = tuple(
            ManifestEntry(image=e["image"], annotation=e["annotation"],
                          mask=e.get("mask"), scene_index=e["scene_index"],
                          camera_index=e["camera_index"])
            for e in raw["entries"]
        )
        rejections = tuple(
            Rejection(scene_index=r["scene_index"], camera_index=r["camera_index"],
                      reason=r["reason"])
            for r in raw["rejections"]
        )
        version = raw["generator_version"]
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"corrupted manifest {path}: {exc!r}") from None
    generation_time = 0.0
    timing_path = dataset_dir / "timing.json"
    if timing_path.is_file():
        try:
            generation_time = float(
                json.loads(timing_path.read_text(encoding="utf-8"))["generation_time_seconds"])
        except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError):
            generation_time = 0.0
    return DatasetManifest(generator_version=version, config=config, entries=entries,
                           rejections=rejections, generation_time_seconds=generation_time)


def _scene_content_with_retry(config: GenConfig, assets: AssetLibrary, scene_index: int):
    last = None
    for attempt in range(SCENE_RETRY_BUDGET):
        try:
            return sample_scene_content(config, assets, scene_index, attempt), attempt
        except PlacementFailure as exc:
            last = exc
    raise GenerationFailure(
        f"scene {scene_index}: placement failed {SCENE_RETRY_BUDGET} times ({last})")


def generate_dataset(config: GenConfig, assets: AssetLibrary, out_dir: Path,
                     workers: int = 1,
                     progress: Optional[Callable[[str], None]] = None) -> DatasetManifest:
    """Compose, render, and label every frame, then write the dataset.

    Scenes that fail placement are retried with a fresh attempt-tagged
    stream up to SCENE_RETRY_BUDGET times; frames whose camera cannot
    satisfy the visibility constraint or whose target box is smaller
    than min_box_pixels are recorded as rejections and skipped.
    """
    config.validate()
    assets.validate()
    started = time.perf_counter()
    samples: list[FrameSample] = []
    rejections: list[Rejection] = []
    width, height = config.resolution

    for scene_index in range(config.n_scenes):
        content, attempt = _scene_content_with_retry(config, assets, scene_index)
        probe_scene = scene_with_camera(content, placeholder_camera(config), config, scene_index)
        compiled_full = compile_scene(probe_scene, assets)
        compiled_target = compile_scene(probe_scene, assets, target_only=True)

        kept = 0
        for camera_index in range(config.cam_poses):
            rng = (rng_stream(config.seed, scene_index, "camera", camera_index, attempt)
                   if attempt else
                   rng_stream(config.seed, scene_index, "camera", camera_index))
            try:
                camera = sample_camera_compiled(compiled_full, compiled_target,
                                                content.target_center, content.target_radius,
                                                config, rng)
            except CameraConstraintFailure:
                rejections.append(Rejection(scene_index, camera_index, REASON_CAMERA))
                continue
            image, mask = render_compiled(compiled_full, camera, workers=workers)
            bbox = mask_to_bbox(mask, target_id=1, min_pixels=config.min_box_pixels)
            if bbox is None:
                rejections.append(Rejection(scene_index, camera_index, REASON_MIN_PIXELS))
                continue
            annotation = Annotation(
                filename="", width=width, height=height,
                objects=(VocObject(name=config.class_name, bbox=bbox),),
            )
            samples.append(FrameSample(
                image=image, mask=mask if config.write_masks else None,
                annotation=annotation, scene_index=scene_index, camera_index=camera_index,
            ))
            kept += 1
        if progress is not None:
            progress(f"scene {scene_index + 1}/{config.n_scenes}: "
                     f"{kept}/{config.cam_poses} frames kept")

    manifest = write_dataset(samples, config, out_dir, rejections=tuple(rejections))
    # the recorded time covers composing, rendering, and writing the files
    elapsed = time.perf_counter() - started
    try:
        (Path(out_dir) / "timing.json").write_text(
            json.dumps({"generation_time_seconds": elapsed}, indent=2) + "\n",
            encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write timing sidecar under {out_dir}: {exc}") from None
    return replace(manifest, generation_time_seconds=elapsed)


def self_detections(dataset_dir: Path) -> list:
    """Re-emit a dataset's own ground truth as score-1.0 detections."""
    from .detections import Detection

    manifest = read_manifest(dataset_dir)
    dataset_dir = Path(dataset_dir)
    detections = []
    for entry in manifest.entries:
        ann = parse_voc_xml((dataset_dir / entry.annotation).read_bytes())
        stem = Path(entry.image).stem
        for obj in ann.objects:
            detections.append(Detection(image=stem, class_name=obj.name,
                                        bbox=obj.bbox, score=1.0))
    return detections


def inspect_dataset(dataset_dir: Path) -> dict:
    """Summary stats used by the `inspect` subcommand."""
    dataset_dir = Path(dataset_dir)
    manifest = read_manifest(dataset_dir)

    areas: list[int] = []
    missing: list[str] = []
    for entry in manifest.entries:
        ann_path = dataset_dir / entry.annotation
        img_path = dataset_dir / entry.image
        if not ann_path.is_file() or not img_path.is_file():
            missing.append(entry.image)
            continue
        ann = parse_voc_xml(ann_path.read_bytes())
        for obj in ann.objects:
            areas.append(int(obj.bbox.area))

    # octave histogram of box areas in pixels
    bins = [("<256", 0), ("256-1023", 0), ("1024-4095", 0), ("4096-16383", 0),
            ("16384-65535", 0), (">=65536", 0)]
    histogram = dict(bins)
    for area in areas:
        if area < 256:
            histogram["<256"] += 1
        elif area < 1024:
            histogram["256-1023"] += 1
        elif area < 4096:
            histogram["1024-4095"] += 1
        elif area < 16384:
            histogram["4096-16383"] += 1
        elif area < 65536:
            histogram["16384-65535"] += 1
        else:
            histogram[">=65536"] += 1

    reasons: dict[str, int] = {}
    for rejection in manifest.rejections:
        reasons[rejection.reason] = reasons.get(rejection.reason, 0) + 1

    return {
        "n_images": manifest.n_images,
        "n_boxes": len(areas),
        "box_area_histogram": histogram,
        "rejections": reasons,
        "n_rejections": len(manifest.rejections),
        "generation_time_seconds": manifest.generation_time_seconds,
        "missing_files": missing,
        "config": manifest.config.to_dict(),
    }


__all__ = [
    "FrameSample", "ManifestEntry", "Rejection", "DatasetManifest",
    "write_dataset", "read_manifest", "generate_dataset", "inspect_dataset",
    "self_detections", "GENERATOR_VERSION", "REASON_CAMERA", "REASON_MIN_PIXELS",
]
