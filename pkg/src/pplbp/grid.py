"""Image and mesh types shared by the numeric modules."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MIN_SIDE = 3


class InvalidMeshError(ValueError):
    """Raised when an image or mesh violates its shape or parameter constraints."""


@dataclass(frozen=True)
class GrayImage:
    """Dense 2-D grid of real intensities, shape ``(m, l)``.

    The backing array is float64, C-ordered and marked read-only.
    """

    data: np.ndarray

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float64, order="C", copy=True)
        if arr.ndim != 2:
            raise InvalidMeshError(f"image must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < MIN_SIDE or arr.shape[1] < MIN_SIDE:
            raise InvalidMeshError(f"image must be at least 3x3, got {arr.shape[0]}x{arr.shape[1]}")
        if not np.all(np.isfinite(arr)):
            raise InvalidMeshError("image contains non-finite values")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def m(self) -> int:
        return self.data.shape[0]

    @property
    def l(self) -> int:  # noqa: E743
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def __getitem__(self, idx):
        return self.data[idx]

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return self.data.shape == other.data.shape and bool(np.array_equal(self.data, other.data))

    __hash__ = None

    def as_vector(self) -> np.ndarray:
        """Flatten with ``k = j*m + i`` (column stacking, 0-based)."""
        return self.data.ravel(order="F").copy()

    @classmethod
    def from_vector(cls, x: np.ndarray, m: int, l: int) -> GrayImage:  # noqa: E741
        return cls(np.reshape(x, (m, l), order="F"))


@dataclass(frozen=True)
class MeshParams:
    dx: float = 1.0
    dy: float = 1.0
    dt: float = 1.0
    tau: float = 5.0

    def __post_init__(self):
        if not (self.dx > 0 and self.dy > 0 and self.dt > 0):
            raise InvalidMeshError(f"dx, dy, dt must be positive (got {self.dx}, {self.dy}, {self.dt})")
        if not self.tau >= 0:
            raise InvalidMeshError(f"tau must be nonnegative (got {self.tau})")


def flat_index(i: int, j: int, m: int) -> int:
    """Linear index of cell (i, j) in an m-row image, 0-based column stacking."""
    return j * m + i


def new_image(m: int, l: int, fill: float = 0.0) -> GrayImage:  # noqa: E741
    if m < MIN_SIDE or l < MIN_SIDE:
        raise InvalidMeshError(f"image must be at least 3x3, got {m}x{l}")
    return GrayImage(np.full((m, l), float(fill)))


def transpose(img: GrayImage) -> GrayImage:
    return GrayImage(img.data.T)
