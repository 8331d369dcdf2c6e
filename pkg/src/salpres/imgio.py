"""Image file I/O.

Pillow handles the container formats (PNG, JPEG, BMP); PGM is written by
hand since it is three header tokens and a byte dump. 8-bit files are
assumed sRGB-encoded on read. Quantization to bytes is round-half-up,
floor(v * 255 + 0.5), so goldens are reproducible bit for bit.
"""

from __future__ import annotations

import os

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import ImageTypeError, ParseError
from .imaging import LINEAR, SRGB_GAMMA, RasterImage, gamma_compress


def quantize_u8(values):
    """[0, 1] floats -> uint8 with ties rounding up."""
    arr = np.asarray(values, dtype=np.float64)
    return np.clip(np.floor(arr * 255.0 + 0.5), 0, 255).astype(np.uint8)


def read_image(path) -> RasterImage:
    """Load an 8-bit image file as an sRGB-encoded RasterImage.

    Grayscale files come back single-channel, anything with color is
    converted to RGB. Unreadable or truncated files raise ParseError.
    """
    try:
        with Image.open(path) as im:
            if im.mode in ("1", "L", "I;16", "I"):
                im = im.convert("L")
            elif im.mode != "RGB":
                im = im.convert("RGB")
            arr = np.asarray(im, dtype=np.float64) / 255.0
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise ParseError(f"cannot decode {os.fspath(path)}: {exc}") from None
    return RasterImage.from_array(arr, encoding=SRGB_GAMMA)


def _export_bytes(img: RasterImage, keep_linear=False):
    """Quantize an image for 8-bit export.

    Linear single-channel data is gamma-compressed first by default so the
    bytes are display-referred; keep_linear skips that for raw dumps.
    """
    data = img.data
    if img.encoding == LINEAR and not keep_linear:
        data = gamma_compress(data)
    return quantize_u8(data)


def write_png(img: RasterImage, path, keep_linear=False):
    """Write a RasterImage as an 8-bit PNG (gray or RGB)."""
    raw = _export_bytes(img, keep_linear=keep_linear)
    Image.fromarray(raw, mode="L" if img.channels == 1 else "RGB").save(path, format="PNG")


def write_pgm(img: RasterImage, path, keep_linear=False):
    """Write a single-channel image as binary PGM (P5, maxval 255)."""
    if img.channels != 1:
        raise ImageTypeError("PGM export is single-channel only")
    raw = _export_bytes(img, keep_linear=keep_linear)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.width} {img.height}\n255\n".encode("ascii"))
        fh.write(raw.tobytes())


def read_pgm(path) -> RasterImage:
    """Read a binary PGM (P5, maxval 255) written by write_pgm."""
    with open(path, "rb") as fh:
        blob = fh.read()
    tokens = []
    pos = 0
    # Header is whitespace-separated tokens with optional # comments.
    while len(tokens) < 4 and pos < len(blob):
        while pos < len(blob) and blob[pos : pos + 1].isspace():
            pos += 1
        if blob[pos : pos + 1] == b"#":
            while pos < len(blob) and blob[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(blob) and not blob[pos : pos + 1].isspace():
            pos += 1
        tokens.append(blob[start:pos])
    if len(tokens) < 4 or tokens[0] != b"P5":
        raise ParseError(f"{os.fspath(path)} is not a binary PGM")
    try:
        width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    except ValueError:
        raise ParseError(f"bad PGM header in {os.fspath(path)}") from None
    if maxval != 255:
        raise ParseError(f"unsupported PGM maxval {maxval}")
    pos += 1  # single whitespace byte after maxval
    raster = blob[pos : pos + width * height]
    if len(raster) != width * height:
        raise ParseError(f"truncated PGM raster in {os.fspath(path)}")
    arr = np.frombuffer(raster, dtype=np.uint8).reshape(height, width) / 255.0
    return RasterImage.from_array(arr, encoding=SRGB_GAMMA)
