"""Rotation-invariant uniform local binary patterns (riu2)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .grid import GrayImage
from .kernels import margin, neighbor_offsets

SNAP_EPS = 1e-9


class SamplingError(ValueError):
    pass


@dataclass(frozen=True)
class LbpConfig:
    P: int
    R: float

    def __post_init__(self):
        if int(self.P) != self.P or self.P < 4:
            raise ValueError(f"P must be an integer >= 4 (got {self.P})")
        if not self.R >= 1:
            raise ValueError(f"R must be >= 1 (got {self.R})")

    @property
    def n_bins(self) -> int:
        return self.P + 2

    @property
    def margin(self) -> int:
        return margin(self.R)

    def __str__(self):
        return f"({self.P},{self.R:g})"


DEFAULT_LBP_SET = (LbpConfig(8, 1), LbpConfig(16, 2), LbpConfig(24, 3), LbpConfig(24, 4))


@dataclass(frozen=True)
class LbpHistogram:
    config: LbpConfig
    bins: np.ndarray

    def __post_init__(self):
        if self.bins.shape != (self.config.n_bins,):
            raise ValueError(f"histogram for {self.config} needs {self.config.n_bins} bins")

    @property
    def total(self) -> int:
        return int(self.bins.sum())

    def normalized(self) -> np.ndarray:
        return self.bins / self.bins.sum()


def neighbor_coords(xc: float, yc: float, p: int, config: LbpConfig) -> tuple[float, float]:
    if not 0 <= p < config.P:
        raise ValueError(f"p must be in [0, {config.P})")
    ang = 2.0 * math.pi * p / config.P
    return xc - config.R * math.sin(ang), yc + config.R * math.cos(ang)


def sample_bilinear(img: GrayImage, x: float, y: float) -> float:
    """Bilinear interpolation at row ``x``, column ``y``.

    Interpolates along ``y`` first, then ``x``, in ``a + f*(b - a)`` form so
    that equal corner values are reproduced exactly.
    """
    m, l = img.shape
    if abs(x - round(x)) < SNAP_EPS:
        x = float(round(x))
    if abs(y - round(y)) < SNAP_EPS:
        y = float(round(y))
    if not (0 <= x <= m - 1 and 0 <= y <= l - 1):
        raise SamplingError(f"({x}, {y}) outside image of shape {m}x{l}")
    x0, y0 = math.floor(x), math.floor(y)
    fx, fy = x - x0, y - y0
    d = img.data
    top = d[x0, y0]
    if fy:
        top = top + fy * (d[x0, y0 + 1] - top)
    if not fx:
        return float(top)
    bottom = d[x0 + 1, y0]
    if fy:
        bottom = bottom + fy * (d[x0 + 1, y0 + 1] - bottom)
    return float(top + fx * (bottom - top))


def uniformity(bits: Sequence[int]) -> int:
    """Circular count of 0/1 transitions."""
    n = len(bits)
    return sum(abs(int(bits[p]) - int(bits[p - 1])) for p in range(n))


def riu2_from_bits(bits: Sequence[int]) -> int:
    P = len(bits)
    return int(sum(bits)) if uniformity(bits) <= 2 else P + 1


def lbp_riu2(img: GrayImage, xc: int, yc: int, config: LbpConfig) -> int:
    gc = img.data[xc, yc]
    bits = []
    for p in range(config.P):
        x, y = neighbor_coords(xc, yc, p, config)
        bits.append(1 if sample_bilinear(img, x, y) >= gc else 0)
    return riu2_from_bits(bits)


def lbp_code_map(img: GrayImage, config: LbpConfig) -> np.ndarray:
    """riu2 codes of the encoding region (pixels at least ceil(R) from every border)."""
    c = config.margin
    if img.m <= 2 * c or img.l <= 2 * c:
        raise SamplingError(f"image {img.m}x{img.l} too small for radius {config.R}")
    return kernels.lbp_codes(img.data, config.P, float(config.R))


def lbp_histogram(img: GrayImage, config: LbpConfig) -> LbpHistogram:
    codes = lbp_code_map(img, config)
    return LbpHistogram(config, np.bincount(codes.ravel(), minlength=config.n_bins).astype(np.int64))


__all__ = [
    "DEFAULT_LBP_SET",
    "LbpConfig",
    "LbpHistogram",
    "SamplingError",
    "lbp_code_map",
    "lbp_histogram",
    "lbp_riu2",
    "neighbor_coords",
    "neighbor_offsets",
    "riu2_from_bits",
    "sample_bilinear",
    "uniformity",
]
