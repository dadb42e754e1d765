"""Stage latency model: fixed per-pass delay plus a per-byte term.

The scheduler's load tracker only accumulates the byte term of each chunk
stage; the engine charges the full stage duration.
"""

from __future__ import annotations

from dataclasses import dataclass

from .collectives import Phase, bytes_sent_per_npu, num_steps
from .topology import NetworkDim, aggregate_bw


@dataclass(frozen=True)
class DimLatencyParams:
    a_rs: float
    a_ag: float
    b: float  # seconds per byte

    @classmethod
    def of(cls, dim: NetworkDim) -> "DimLatencyParams":
        return cls(fixed_delay(dim, Phase.RS), fixed_delay(dim, Phase.AG), 1.0 / aggregate_bw(dim))


def fixed_delay(dim: NetworkDim, phase: Phase) -> float:
    return num_steps(phase, dim.kind, dim.size) * dim.step_latency


def chunk_load(dim: NetworkDim, phase: Phase, bytes_before: float) -> float:
    """Predicted byte-time of one chunk stage; excludes the fixed delay."""
    return bytes_sent_per_npu(phase, dim.size, bytes_before) / aggregate_bw(dim)


def stage_duration(dim: NetworkDim, phase: Phase, bytes_before: float, share: int = 1) -> float:
    if share < 1:
        raise ValueError("share must be >= 1")
    return fixed_delay(dim, phase) + chunk_load(dim, phase, bytes_before) * share
