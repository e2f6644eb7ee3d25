"""Multiscale descriptor: riu2 histograms of every image in the diffusion sequence."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .diffusion import SolverParams, diffusion_step
from .grid import GrayImage, MeshParams
from .lbp import DEFAULT_LBP_SET, LbpConfig, SamplingError, lbp_histogram


@dataclass(frozen=True)
class DescriptorConfig:
    steps: int = 50
    mesh: MeshParams = field(default_factory=MeshParams)
    solver: SolverParams = field(default_factory=SolverParams)
    lbp_set: tuple[LbpConfig, ...] = DEFAULT_LBP_SET
    include_t0: bool = True

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1 (got {self.steps})")
        object.__setattr__(self, "lbp_set", tuple(self.lbp_set))
        if not self.lbp_set:
            raise ValueError("lbp_set must not be empty")

    @property
    def block_length(self) -> int:
        return sum(c.n_bins for c in self.lbp_set)

    @property
    def length(self) -> int:
        return self.steps * self.block_length

    @property
    def max_margin(self) -> int:
        return max(c.margin for c in self.lbp_set)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lbp_set"] = [[c.P, c.R] for c in self.lbp_set]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> DescriptorConfig:
        return cls(
            steps=int(d["steps"]),
            mesh=MeshParams(**d["mesh"]),
            solver=SolverParams(**d["solver"]),
            lbp_set=tuple(LbpConfig(int(p), float(r)) for p, r in d["lbp_set"]),
            include_t0=bool(d["include_t0"]),
        )

    def with_steps(self, steps: int) -> DescriptorConfig:
        return DescriptorConfig(steps, self.mesh, self.solver, self.lbp_set, self.include_t0)


@dataclass(frozen=True)
class Descriptor:
    """Feature vector, time-major: one block per image, each block the
    L1-normalized histograms of ``lbp_set`` in order."""

    values: np.ndarray
    config: DescriptorConfig

    def block(self, n: int) -> np.ndarray:
        b = self.config.block_length
        return self.values[n * b : (n + 1) * b]

    def histogram(self, n: int, c: int) -> np.ndarray:
        start = sum(cfg.n_bins for cfg in self.config.lbp_set[:c])
        return self.block(n)[start : start + self.config.lbp_set[c].n_bins]


def scale_images(img: GrayImage, cfg: DescriptorConfig):
    """Yield the images the descriptor encodes, evolving lazily."""
    u = img
    if cfg.include_t0:
        yield u
        remaining = cfg.steps - 1
    else:
        remaining = cfg.steps
    for _ in range(remaining):
        u = diffusion_step(u, cfg.mesh, cfg.solver)
        yield u


def encode_block(u: GrayImage, lbp_set) -> np.ndarray:
    return np.concatenate([lbp_histogram(u, c).normalized() for c in lbp_set])


def extract_descriptor(img: GrayImage, cfg: DescriptorConfig = DescriptorConfig()) -> Descriptor:
    if min(img.shape) <= 2 * cfg.max_margin:
        raise SamplingError(f"image {img.m}x{img.l} too small for LBP radius margin {cfg.max_margin}")
    blocks = [encode_block(u, cfg.lbp_set) for u in scale_images(img, cfg)]
    return Descriptor(np.concatenate(blocks), cfg)
