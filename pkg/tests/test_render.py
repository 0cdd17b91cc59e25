import dataclasses

import numpy as np
import pytest

from cadsynth.render import (compile_scene, mask_to_bbox, probe_camera,
                             project, render_compiled, render_full,
                             render_mask_compiled, target_visible_fraction)
from cadsynth.sampler import placeholder_camera, sample_scene
from cadsynth.scene import GenConfig

CONFIG = GenConfig(resolution=(96, 72), n_distractors=5, seed=21)


@pytest.fixture(scope="module")
def scene(library):
    return sample_scene(CONFIG, library, 0)


@pytest.fixture(scope="module")
def compiled(scene, library):
    return compile_scene(scene, library)


def test_mask_ids_are_instance_slots(scene, library, compiled):
    mask = render_mask_compiled(compiled, scene.camera)
    ids = set(np.unique(mask.ids))
    assert ids <= set(range(len(scene.instances) + 1))
    assert 1 in ids  # the target passed the visibility constraint
    assert 0 in ids  # floor/table/background


def test_image_and_mask_share_rays(scene, compiled):
    image, mask = render_compiled(compiled, scene.camera)
    mask_only = render_mask_compiled(compiled, scene.camera)
    assert np.array_equal(mask.ids, mask_only.ids)
    assert image.pixels.shape == (72, 96, 3)
    assert image.pixels.dtype == np.uint8


def test_parallel_matches_serial(scene, compiled):
    serial_img, serial_mask = render_compiled(compiled, scene.camera, workers=1)
    parallel_img, parallel_mask = render_compiled(compiled, scene.camera, workers=4)
    assert np.array_equal(serial_img.pixels, parallel_img.pixels)
    assert np.array_equal(serial_mask.ids, parallel_mask.ids)
    assert np.array_equal(render_mask_compiled(compiled, scene.camera, workers=3).ids,
                          serial_mask.ids)


def test_render_deterministic(scene, library):
    a, am = render_full(scene, library)
    b, bm = render_full(scene, library)
    assert np.array_equal(a.pixels, b.pixels)
    assert np.array_equal(am.ids, bm.ids)


def test_zero_lights_black_frame(scene, library):
    dark = dataclasses.replace(scene, lights=())
    image, _ = render_full(dark, library)
    assert not image.pixels.any()


def test_lit_scene_not_black(scene, library):
    image = render_full(scene, library)[0].pixels
    assert image.max() > 0


def test_target_only_scene(scene, library):
    alone = compile_scene(scene, library, target_only=True)
    mask = render_mask_compiled(alone, scene.camera)
    assert set(np.unique(mask.ids)) <= {0, 1}
    target_tris = int(np.count_nonzero(alone.inst_id == 1))
    assert alone.inst_id.size == target_tris  # nothing but the target


def test_mask_to_bbox_tight(scene, compiled):
    mask = render_mask_compiled(compiled, scene.camera)
    bbox = mask_to_bbox(mask, 1, min_pixels=1)
    assert bbox is not None
    # every edge touches a target pixel
    assert (mask.ids[bbox.ymin, :] == 1).any()
    assert (mask.ids[bbox.ymax - 1, :] == 1).any()
    assert (mask.ids[:, bbox.xmin] == 1).any()
    assert (mask.ids[:, bbox.xmax - 1] == 1).any()
    # nothing outside
    outside = np.ones_like(mask.ids, dtype=bool)
    outside[bbox.ymin:bbox.ymax, bbox.xmin:bbox.xmax] = False
    assert not ((mask.ids == 1) & outside).any()


def test_mask_to_bbox_min_pixels(scene, compiled):
    mask = render_mask_compiled(compiled, scene.camera)
    visible = int(np.count_nonzero(mask.ids == 1))
    assert mask_to_bbox(mask, 1, min_pixels=visible) is not None
    assert mask_to_bbox(mask, 1, min_pixels=visible + 1) is None
    assert mask_to_bbox(mask, 99, min_pixels=1) is None


def test_project_roundtrip():
    camera = placeholder_camera(GenConfig(resolution=(96, 72)))
    px = project((0.0, 0.0, 0.0), camera)  # the look-at point
    assert px == pytest.approx((48.0, 36.0), abs=1e-9)
    # behind the camera: continue past the eye along the view direction
    assert project((2.0, 2.0, 2.0), camera) is None
    assert project((1.0, 1.0, 1.0), camera) is None  # at the eye


def test_probe_camera_scales(scene):
    probe = probe_camera(scene.camera, factor=4)
    assert (probe.width, probe.height) == (24, 18)
    full_px = project((0.0, 0.0, 0.8), scene.camera)
    probe_px = project((0.0, 0.0, 0.8), probe)
    if full_px is not None:
        assert probe_px == pytest.approx((full_px[0] * 0.25, full_px[1] * 0.25), abs=1e-9)


def test_visible_fraction_bounds(scene, library, compiled):
    alone = compile_scene(scene, library, target_only=True)
    frac = target_visible_fraction(compiled, alone, probe_camera(scene.camera))
    assert 0.0 <= frac <= 1.0
    assert frac >= CONFIG.visibility_min
    # the target occludes nothing of itself
    assert target_visible_fraction(alone, alone, probe_camera(scene.camera)) == 1.0
