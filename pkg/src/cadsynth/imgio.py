"""8-bit RGB image and texture containers plus PNG encode/decode (Pillow)."""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from PIL import Image as PilImage

from .errors import MalformedTexture


@dataclass
class Texture:
    """Row-major 8-bit RGB texture; pixels has shape (height, width, 3)."""

    width: int
    height: int
    pixels: np.ndarray

    def validate(self) -> None:
        if self.width < 1 or self.height < 1:
            raise MalformedTexture("texture dimensions must be >= 1")
        if self.pixels.shape != (self.height, self.width, 3) or self.pixels.dtype != np.uint8:
            raise MalformedTexture("texture buffer must be uint8 of shape (h, w, 3)")


@dataclass
class Image:
    """Rendered row-major 8-bit RGB image; pixels has shape (height, width, 3)."""

    width: int
    height: int
    pixels: np.ndarray

    def validate(self) -> None:
        if self.pixels.shape != (self.height, self.width, 3) or self.pixels.dtype != np.uint8:
            raise ValueError("image buffer must be uint8 of shape (h, w, 3)")


@dataclass
class Mask:
    """Per-pixel instance ids; 0 marks background or no hit."""

    width: int
    height: int
    ids: np.ndarray

    def validate(self) -> None:
        if self.ids.shape != (self.height, self.width) or self.ids.dtype != np.int32:
            raise ValueError("mask buffer must be int32 of shape (h, w)")


def load_texture(data: bytes) -> Texture:
    """Decode a PNG byte stream to an 8-bit RGB texture.

    Alpha is discarded and grayscale is expanded to RGB. Raises
    MalformedTexture on truncated or non-PNG input.
    """
    try:
        with PilImage.open(io.BytesIO(data)) as im:
            im.load()
            rgb = im.convert("RGB")
            arr = np.asarray(rgb, dtype=np.uint8)
    except MalformedTexture:
        raise
    except Exception as exc:  # Pillow raises assorted types on bad streams
        raise MalformedTexture(f"cannot decode PNG: {exc}") from None
    h, w = arr.shape[0], arr.shape[1]
    tex = Texture(width=w, height=h, pixels=arr)
    tex.validate()
    return tex


def encode_png(pixels: np.ndarray) -> bytes:
    """Encode an (h, w, 3) uint8 array as PNG bytes."""
    if pixels.dtype != np.uint8 or pixels.ndim != 3 or pixels.shape[2] != 3:
        raise ValueError("expected (h, w, 3) uint8 pixels")
    buf = io.BytesIO()
    PilImage.fromarray(pixels, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def mask_to_gray_png(mask: Mask) -> bytes:
    """Debug view of a mask: instance ids spread over the gray range."""
    top = max(1, int(mask.ids.max()))
    gray = (mask.ids.astype(np.float64) * (255.0 / top)).round().astype(np.uint8)
    rgb = np.stack([gray, gray, gray], axis=-1)
    return encode_png(rgb)
