import json

import numpy as np
import pytest

from cadsynth.boxes import BBox
from cadsynth.dataset import (FrameSample, Rejection, generate_dataset,
                              inspect_dataset, read_manifest, self_detections,
                              write_dataset)
from cadsynth.demo import demo_library
from cadsynth.errors import ConfigError, GenerationFailure, IoFailure
from cadsynth.imgio import Image, load_texture
from cadsynth.metrics import EvalConfig, evaluate_dataset
from cadsynth.scene import GenConfig
from cadsynth.voc import Annotation, VocObject, parse_voc_xml


def _sample(i, scene=0, cam=0, size=(32, 24)):
    w, h = size
    pixels = np.full((h, w, 3), (i * 37) % 256, dtype=np.uint8)
    ann = Annotation(filename="", width=w, height=h,
                     objects=(VocObject("target", BBox(1, 2, 10, 12)),))
    return FrameSample(image=Image(width=w, height=h, pixels=pixels), mask=None,
                       annotation=ann, scene_index=scene, camera_index=cam)


# ---------------------------------------------------------------------------
# write_dataset / read_manifest


def test_write_dataset_layout(tmp_path):
    config = GenConfig(resolution=(32, 24), n_scenes=1, cam_poses=2)
    samples = [_sample(0), _sample(1, cam=1)]
    manifest = write_dataset(samples, config, tmp_path,
                             rejections=(Rejection(0, 2, "camera-constraint"),))
    assert manifest.n_images == 2
    assert (tmp_path / "images/img_000000.png").is_file()
    assert (tmp_path / "images/img_000001.png").is_file()
    assert (tmp_path / "annotations/img_000001.xml").is_file()
    assert not (tmp_path / "masks").exists()
    ann = parse_voc_xml((tmp_path / "annotations/img_000001.xml").read_bytes())
    assert ann.filename == "img_000001.png"

    restored = read_manifest(tmp_path)
    assert restored.entries == manifest.entries
    assert restored.rejections == manifest.rejections
    assert restored.config == config


def test_write_dataset_empty(tmp_path):
    manifest = write_dataset([], GenConfig(), tmp_path)
    assert manifest.n_images == 0
    assert (tmp_path / "manifest.json").is_file()
    assert read_manifest(tmp_path).entries == ()


def test_naming_follows_sample_order(tmp_path):
    samples = [_sample(i, scene=i // 2, cam=i % 2) for i in range(8)]
    manifest = write_dataset(samples, GenConfig(resolution=(32, 24)), tmp_path)
    assert manifest.entries[7].image == "images/img_000007.png"
    assert manifest.entries[7].scene_index == 3


def test_manifest_is_timing_free(tmp_path):
    write_dataset([_sample(0)], GenConfig(resolution=(32, 24)), tmp_path,
                  generation_time_seconds=12.5)
    doc = json.loads((tmp_path / "manifest.json").read_text())
    assert "generation_time_seconds" not in json.dumps(doc)
    timing = json.loads((tmp_path / "timing.json").read_text())
    assert timing["generation_time_seconds"] == 12.5
    assert read_manifest(tmp_path).generation_time_seconds == 12.5


def test_read_manifest_missing(tmp_path):
    with pytest.raises(IoFailure):
        read_manifest(tmp_path / "nowhere")


def test_read_manifest_corrupted(tmp_path):
    (tmp_path / "manifest.json").write_text("{ not json")
    with pytest.raises(ConfigError, match="corrupted"):
        read_manifest(tmp_path)
    (tmp_path / "manifest.json").write_text('{"entries": []}')
    with pytest.raises(ConfigError):
        read_manifest(tmp_path)


# ---------------------------------------------------------------------------
# generate_dataset


def test_generate_small_dataset(small_dataset):
    out, config, manifest = small_dataset
    assert manifest.n_images + len(manifest.rejections) == config.n_images
    assert manifest.generation_time_seconds > 0.0
    for entry in manifest.entries:
        assert (out / entry.image).is_file()
        assert (out / entry.annotation).is_file()
        ann = parse_voc_xml((out / entry.annotation).read_bytes())
        assert (ann.width, ann.height) == config.resolution
        assert len(ann.objects) == 1
        assert ann.objects[0].name == config.class_name
    # every image on disk is listed in the manifest
    on_disk = sorted(p.name for p in (out / "images").iterdir())
    listed = sorted(e.image.split("/")[1] for e in manifest.entries)
    assert on_disk == listed


def test_generate_writes_masks(library, tmp_path):
    config = GenConfig(resolution=(64, 48), n_scenes=1, cam_poses=1,
                       n_distractors=2, seed=3, write_masks=True)
    manifest = generate_dataset(config, library, tmp_path)
    if manifest.entries:
        entry = manifest.entries[0]
        assert entry.mask == "masks/img_000000.png"
        gray = load_texture((tmp_path / entry.mask).read_bytes())
        assert (gray.width, gray.height) == (64, 48)


def test_generate_rejects_below_min_pixels(library, tmp_path):
    config = GenConfig(resolution=(64, 48), n_scenes=2, cam_poses=2,
                       n_distractors=1, seed=5, min_box_pixels=10 ** 6)
    manifest = generate_dataset(config, library, tmp_path)
    assert manifest.n_images == 0
    assert len(manifest.rejections) == 4
    assert all(r.reason == "below-min-pixels" for r in manifest.rejections)


def test_generate_records_camera_rejections(library, tmp_path):
    config = GenConfig(resolution=(64, 48), n_scenes=4, cam_poses=2,
                       n_distractors=8, seed=2, camera_max_attempts=1,
                       visibility_min=0.9)
    for seed in range(25):
        try:
            manifest = generate_dataset(config.with_seed(seed), library,
                                        tmp_path / str(seed))
        except GenerationFailure:
            continue
        if any(r.reason == "camera-constraint" for r in manifest.rejections):
            assert manifest.n_images + len(manifest.rejections) == config.n_images
            return
    pytest.fail("no seed in 0..24 produced a camera-constraint rejection")


def test_generate_fails_when_target_never_fits(tmp_path):
    big = demo_library(target_scale=40.0)
    config = GenConfig(resolution=(64, 48), n_scenes=1, cam_poses=1, n_distractors=0)
    with pytest.raises(GenerationFailure, match="3 times"):
        generate_dataset(config, big, tmp_path)


def test_generate_deterministic(library, tmp_path, small_dataset):
    out, config, manifest = small_dataset
    again = generate_dataset(config, library, tmp_path / "again")
    assert again.entries == manifest.entries
    assert again.rejections == manifest.rejections
    for entry in manifest.entries:
        assert (out / entry.image).read_bytes() == (tmp_path / "again" / entry.image).read_bytes()
        assert (out / entry.annotation).read_bytes() == (tmp_path / "again" / entry.annotation).read_bytes()
    assert (out / "manifest.json").read_bytes() == (tmp_path / "again" / "manifest.json").read_bytes()


# ---------------------------------------------------------------------------
# self_detections / inspect


def test_self_detections_perfect(small_dataset):
    out, config, manifest = small_dataset
    report = evaluate_dataset(out, self_detections(out), EvalConfig())
    assert report.precision == 1.0
    assert report.recall == 1.0
    assert report.f1 == 1.0
    assert report.mean_ap == 1.0


def test_inspect_counts(small_dataset):
    out, config, manifest = small_dataset
    stats = inspect_dataset(out)
    assert stats["n_images"] == manifest.n_images
    assert stats["n_boxes"] == manifest.n_images  # one target per frame
    assert sum(stats["box_area_histogram"].values()) == stats["n_boxes"]
    assert stats["missing_files"] == []
    assert stats["n_rejections"] == len(manifest.rejections)
    assert stats["config"]["seed"] == config.seed
    assert stats["generation_time_seconds"] > 0.0


def test_inspect_reports_missing(small_dataset, tmp_path):
    out, config, manifest = small_dataset
    import shutil
    clone = tmp_path / "clone"
    shutil.copytree(out, clone)
    victim = clone / manifest.entries[0].image
    victim.unlink()
    stats = inspect_dataset(clone)
    assert stats["missing_files"] == [manifest.entries[0].image]
