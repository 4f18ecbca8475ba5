"""Grayscale raster model and binary PGM (P5) I/O."""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatch, MalformedHeader, TruncatedPayload, UnsupportedMaxval

_LUMA = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True, eq=False)
class GrayImage:
    """Immutable W x H 8-bit luminance raster, stored row-major as ``pixels[y, x]``."""

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"expected a non-empty 2-D raster, got shape {arr.shape}")
        if arr.dtype != np.uint8:
            if arr.size and (arr.min() < 0 or arr.max() > 255):
                raise ValueError("samples must lie in [0, 255]")
            arr = arr.astype(np.uint8)
        arr = np.array(arr, dtype=np.uint8, order="C", copy=True)
        arr.setflags(write=False)
        object.__setattr__(self, "pixels", arr)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def data(self) -> bytes:
        return self.pixels.tobytes()

    @classmethod
    def from_bytes(cls, data: bytes, width: int, height: int) -> "GrayImage":
        if len(data) != width * height:
            raise LengthMismatch(f"{len(data)} bytes for a {width}x{height} image")
        return cls(np.frombuffer(data, dtype=np.uint8).reshape(height, width))

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(np.array_equal(self.pixels, other.pixels))

    def __hash__(self):
        return hash((self.pixels.shape, self.pixels.tobytes()))

    def __repr__(self):
        return f"GrayImage({self.width}x{self.height})"


_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def load_pgm(data: bytes) -> GrayImage:
    """Parse a binary (P5) PGM with maxval <= 255."""
    data = bytes(data)
    if not data.startswith(b"P5"):
        raise MalformedHeader("missing P5 magic")
    pos = 2
    fields = []
    for _ in range(3):
        m = _TOKEN.match(data, pos)
        if m is None:
            raise MalformedHeader("header ends early")
        tok = m.group(1)
        if not tok.isdigit():
            raise MalformedHeader(f"non-numeric header field {tok!r}")
        fields.append(int(tok))
        pos = m.end()
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise MalformedHeader(f"bad dimensions {width}x{height}")
    if maxval > 255:
        raise UnsupportedMaxval(f"maxval {maxval} > 255")
    if maxval < 1:
        raise MalformedHeader(f"bad maxval {maxval}")
    # exactly one whitespace byte separates the header from the payload
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise MalformedHeader("no separator after maxval")
    payload = data[pos + 1:pos + 1 + width * height]
    if len(payload) < width * height:
        raise TruncatedPayload(f"need {width * height} payload bytes, have {len(payload)}")
    return GrayImage.from_bytes(payload, width, height)


def save_pgm(img: GrayImage) -> bytes:
    """Canonical P5 encoding: ``P5\\n<w> <h>\\n255\\n`` followed by the samples."""
    return b"P5\n%d %d\n255\n" % (img.width, img.height) + img.data


def read_pgm(path) -> GrayImage:
    with open(path, "rb") as fh:
        return load_pgm(fh.read())


def write_pgm(path, img: GrayImage) -> None:
    with open(path, "wb") as fh:
        fh.write(save_pgm(img))


def to_gray(rgba: bytes, width: int, height: int) -> GrayImage:
    """BT.601 luma of an interleaved RGBA buffer; alpha is ignored."""
    buf = np.frombuffer(bytes(rgba), dtype=np.uint8)
    if buf.size != 4 * width * height:
        raise LengthMismatch(f"{buf.size} bytes for {width}x{height} RGBA")
    rgb = buf.reshape(height, width, 4)[..., :3].astype(np.float64)
    luma = np.floor(rgb @ _LUMA + 0.5)
    return GrayImage(np.clip(luma, 0, 255).astype(np.uint8))
