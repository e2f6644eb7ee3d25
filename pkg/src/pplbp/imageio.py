"""Grayscale image loading (PGM P2/P5, PNG) and PGM writing."""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np
from PIL import Image

from .grid import GrayImage

PGM_SUFFIXES = {".pgm"}
PIL_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff", ".ppm"}
IMAGE_SUFFIXES = PGM_SUFFIXES | PIL_SUFFIXES


class ImageReadError(OSError):
    pass


def _pgm_tokens(raw: bytes, count: int) -> tuple[list[bytes], int]:
    """Read ``count`` whitespace-separated header tokens, skipping ``#`` comments.

    Returns the tokens and the offset just past the last one.
    """
    tokens = []
    pos = 0
    n = len(raw)
    while len(tokens) < count:
        while pos < n and raw[pos : pos + 1].isspace():
            pos += 1
        if pos >= n:
            raise ValueError("truncated PGM header")
        if raw[pos : pos + 1] == b"#":
            while pos < n and raw[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not raw[pos : pos + 1].isspace() and raw[pos : pos + 1] != b"#":
            pos += 1
        tokens.append(raw[start:pos])
    return tokens, pos


def decode_pgm(raw: bytes) -> np.ndarray:
    magic = raw[:2]
    if magic not in (b"P2", b"P5"):
        raise ValueError(f"not a PGM file (magic {magic!r})")
    (w, h, maxval), pos = _pgm_tokens(raw[2:], 3)
    w, h, maxval = int(w), int(h), int(maxval)
    if not 0 < maxval < 65536:
        raise ValueError(f"bad PGM maxval {maxval}")
    body = raw[2 + pos :]
    if magic == b"P2":
        vals = np.array(body.split()[: w * h], dtype=np.int64)
        if vals.size != w * h:
            raise ValueError("truncated PGM raster")
        return vals.reshape(h, w).astype(np.float64)
    # single whitespace byte separates header from raster
    body = body[1:]
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    need = w * h * dtype.itemsize
    if len(body) < need:
        raise ValueError("truncated PGM raster")
    return np.frombuffer(body[:need], dtype=dtype).reshape(h, w).astype(np.float64)


def rgb_to_luma(rgb: np.ndarray) -> np.ndarray:
    """Integer luma, ``floor(0.299 R + 0.587 G + 0.114 B + 0.5)``."""
    rgb = rgb.astype(np.float64)
    return np.floor(0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2] + 0.5)


def decode_pil(path: Path) -> np.ndarray:
    with Image.open(path) as im:
        if im.mode in ("L", "I", "I;16", "I;16B", "F"):
            return np.asarray(im, dtype=np.float64)
        if im.mode == "LA":
            return np.asarray(im.getchannel("L"), dtype=np.float64)
        return rgb_to_luma(np.asarray(im.convert("RGB")))


def load_array(path: str | os.PathLike) -> np.ndarray:
    path = Path(path)
    try:
        if path.suffix.lower() in PGM_SUFFIXES:
            return decode_pgm(path.read_bytes())
        return decode_pil(path)
    except (OSError, ValueError) as exc:
        raise ImageReadError(f"cannot read image {path}: {exc}") from exc


def load_image(path: str | os.PathLike) -> GrayImage:
    return GrayImage(load_array(path))


def to_uint8(values: np.ndarray) -> np.ndarray:
    """Clamp to [0, 255] and round half up, for output only."""
    return np.floor(np.clip(values, 0.0, 255.0) + 0.5).astype(np.uint8)


def encode_pgm(values: np.ndarray) -> bytes:
    arr = to_uint8(np.asarray(values))
    h, w = arr.shape
    return b"P5\n%d %d\n255\n" % (w, h) + arr.tobytes()


def save_pgm(path: str | os.PathLike, values) -> None:
    if isinstance(values, GrayImage):
        values = values.data
    Path(path).write_bytes(encode_pgm(values))


def is_image_file(path: Path) -> bool:
    return path.is_file() and path.suffix.lower() in IMAGE_SUFFIXES
