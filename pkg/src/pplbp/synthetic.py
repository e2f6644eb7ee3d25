"""Seeded synthetic texture sets for desk-scale checks."""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .imageio import save_pgm

GRATING_CLASSES = ("horizontal", "vertical", "checkerboard")


def grating(kind: str, size: int = 64, period: int = 8, amplitude: float = 100.0, mean: float = 127.5) -> np.ndarray:
    i = np.arange(size)[:, None]
    j = np.arange(size)[None, :]
    if kind == "horizontal":
        # intensity varies down the rows: horizontal stripes
        pattern = np.sin(2 * np.pi * i / period) + 0 * j
    elif kind == "vertical":
        pattern = np.sin(2 * np.pi * j / period) + 0 * i
    elif kind == "checkerboard":
        half = period // 2
        pattern = np.where(((i // half) + (j // half)) % 2 == 0, 1.0, -1.0)
    else:
        raise ValueError(f"unknown pattern {kind!r}")
    return mean + amplitude * pattern


def grating_images(n_per_class: int = 30, size: int = 64, period: int = 8, noise: float = 20.0, seed: int = 0):
    """Yield ``(class_name, index, image)``; noise is uniform on [-noise, noise]."""
    rng = np.random.Generator(np.random.PCG64(seed))
    for kind in GRATING_CLASSES:
        base = grating(kind, size, period)
        for n in range(n_per_class):
            yield kind, n, base + rng.uniform(-noise, noise, size=(size, size))


def write_grating_dataset(root: str | os.PathLike, **kwargs) -> Path:
    """Write the set as 8-bit PGM files in ``root/<class>/<nnn>.pgm``."""
    root = Path(root)
    for kind, n, img in grating_images(**kwargs):
        d = root / kind
        d.mkdir(parents=True, exist_ok=True)
        save_pgm(d / f"{n:03d}.pgm", img)
    return root
