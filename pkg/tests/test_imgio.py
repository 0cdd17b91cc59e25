import io

import numpy as np
import pytest
from PIL import Image as PilImage

from cadsynth.errors import MalformedTexture
from cadsynth.imgio import Image, Mask, encode_png, load_texture, mask_to_gray_png


def _png_bytes(array, mode="RGB"):
    buf = io.BytesIO()
    PilImage.fromarray(array, mode=mode).save(buf, format="PNG")
    return buf.getvalue()


def test_known_2x2_pixels_round_trip():
    pixels = np.array([[[255, 0, 0], [0, 255, 0]],
                       [[0, 0, 255], [10, 20, 30]]], dtype=np.uint8)
    tex = load_texture(_png_bytes(pixels))
    assert tex.width == 2 and tex.height == 2
    assert np.array_equal(tex.pixels, pixels)


def test_1x1_white():
    tex = load_texture(_png_bytes(np.full((1, 1, 3), 255, dtype=np.uint8)))
    assert tex.pixels.tolist() == [[[255, 255, 255]]]


def test_grayscale_expanded_alpha_discarded():
    gray = load_texture(_png_bytes(np.array([[7, 9]], dtype=np.uint8), mode="L"))
    assert gray.pixels.shape == (1, 2, 3)
    assert gray.pixels[0, 0].tolist() == [7, 7, 7]

    rgba = np.zeros((1, 1, 4), dtype=np.uint8)
    rgba[..., :3] = (1, 2, 3)
    rgba[..., 3] = 128
    tex = load_texture(_png_bytes(rgba, mode="RGBA"))
    assert tex.pixels[0, 0].tolist() == [1, 2, 3]


def test_truncated_png_rejected():
    data = _png_bytes(np.zeros((4, 4, 3), dtype=np.uint8))
    with pytest.raises(MalformedTexture):
        load_texture(data[: len(data) // 2])
    with pytest.raises(MalformedTexture):
        load_texture(b"not a png at all")


def test_encode_decode_identity():
    rng = np.random.default_rng(3)
    pixels = rng.integers(0, 256, size=(13, 17, 3), dtype=np.uint8)
    again = load_texture(encode_png(pixels))
    assert np.array_equal(again.pixels, pixels)


def test_encode_rejects_bad_shape():
    with pytest.raises(ValueError):
        encode_png(np.zeros((4, 4), dtype=np.uint8))
    with pytest.raises(ValueError):
        encode_png(np.zeros((4, 4, 3), dtype=np.float64))


def test_containers_validate():
    Image(width=2, height=1, pixels=np.zeros((1, 2, 3), dtype=np.uint8)).validate()
    with pytest.raises(ValueError):
        Image(width=2, height=1, pixels=np.zeros((2, 1, 3), dtype=np.uint8)).validate()
    Mask(width=2, height=1, ids=np.zeros((1, 2), dtype=np.int32)).validate()
    with pytest.raises(ValueError):
        Mask(width=2, height=1, ids=np.zeros((1, 2), dtype=np.int64)).validate()


def test_mask_png_is_decodable():
    mask = Mask(width=3, height=2, ids=np.array([[0, 1, 2], [2, 1, 0]], dtype=np.int32))
    tex = load_texture(mask_to_gray_png(mask))
    assert tex.width == 3 and tex.height == 2
    # ids spread over the gray range, background stays 0
    assert tex.pixels[0, 0].tolist() == [0, 0, 0]
    assert tex.pixels[0, 2].tolist() == [255, 255, 255]
