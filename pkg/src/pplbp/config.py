"""Validated pipeline configuration and its JSON snapshot."""

from __future__ import annotations

from dataclasses import dataclass, field

from .bench import SplitProtocol
from .descriptor import DescriptorConfig
from .lbp import LbpConfig

SNAPSHOT_VERSION = 1


def parse_lbp_set(text: str) -> tuple[LbpConfig, ...]:
    """``"8,1;16,2"`` -> ``(LbpConfig(8, 1), LbpConfig(16, 2))``."""
    out = []
    for item in text.split(";"):
        item = item.strip()
        if not item:
            continue
        p, r = item.split(",")
        out.append(LbpConfig(int(p), float(r)))
    if not out:
        raise ValueError("empty LBP set")
    return tuple(out)


def format_lbp_set(lbp_set) -> str:
    return ";".join(f"{c.P},{c.R:g}" for c in lbp_set)


@dataclass(frozen=True)
class PipelineConfig:
    descriptor: DescriptorConfig = field(default_factory=DescriptorConfig)
    protocol: SplitProtocol = field(default_factory=SplitProtocol)

    def to_dict(self) -> dict:
        return {
            "version": SNAPSHOT_VERSION,
            "descriptor": self.descriptor.to_dict(),
            "protocol": self.protocol.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> PipelineConfig:
        proto = dict(d.get("protocol", {}))
        return cls(
            DescriptorConfig.from_dict(d["descriptor"]) if "descriptor" in d else DescriptorConfig(),
            SplitProtocol(**proto) if proto else SplitProtocol(),
        )
