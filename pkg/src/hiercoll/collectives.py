"""Per-dimension collective algorithm models.

Each dimension runs the contention-free algorithm matching its physical kind:
ring on rings, direct exchange on fully-connected dims, and recursive
halving-doubling on switches. All three move the same wire volume per NPU;
they differ only in the number of latency-bound steps.
"""

from __future__ import annotations

import enum

from .topology import DimKind


class Phase(enum.Enum):
    RS = "RS"
    AG = "AG"

    @property
    def label(self) -> str:
        return self.value


class CollectiveKind(enum.Enum):
    REDUCE_SCATTER = "ReduceScatter"
    ALL_GATHER = "AllGather"
    ALL_REDUCE = "AllReduce"

    @classmethod
    def parse(cls, text: str) -> "CollectiveKind":
        key = text.strip().lower().replace("-", "").replace("_", "")
        table = {
            "reducescatter": cls.REDUCE_SCATTER,
            "rs": cls.REDUCE_SCATTER,
            "allgather": cls.ALL_GATHER,
            "ag": cls.ALL_GATHER,
            "allreduce": cls.ALL_REDUCE,
            "ar": cls.ALL_REDUCE,
        }
        try:
            return table[key]
        except KeyError:
            raise ValueError(f"unknown collective kind {text!r}") from None

    @property
    def phases(self) -> tuple[Phase, ...]:
        if self is CollectiveKind.ALL_REDUCE:
            return (Phase.RS, Phase.AG)
        if self is CollectiveKind.REDUCE_SCATTER:
            return (Phase.RS,)
        return (Phase.AG,)


def _check_p(p: int, kind: DimKind | None = None) -> None:
    if not isinstance(p, int) or p < 2:
        raise ValueError(f"dimension size must be an integer >= 2, got {p!r}")
    if kind is DimKind.SWITCH and p & (p - 1):
        raise ValueError(f"halving-doubling needs a power-of-two size, got {p}")


def num_steps(phase: Phase, kind: DimKind, p: int) -> int:
    """Latency-bound steps one RS or AG pass takes on a dimension of size ``p``."""
    _check_p(p, kind)
    if kind is DimKind.RING:
        return p - 1
    if kind is DimKind.FULLY_CONNECTED:
        return 1
    return p.bit_length() - 1


def bytes_sent_per_npu(phase: Phase, p: int, bytes_before: float) -> float:
    _check_p(p)
    if phase is Phase.RS:
        return (p - 1) / p * bytes_before
    return (p - 1) * bytes_before


def size_after(phase: Phase, p: int, bytes_before: float) -> float:
    _check_p(p)
    if phase is Phase.RS:
        return bytes_before / p
    return bytes_before * p


def halving_doubling_rounds(p: int) -> list[list[tuple[int, int]]]:
    """Explicit recursive-halving exchange pairs, one list per round.

    Round ``r`` pairs rank ``i`` with ``i XOR (p >> (r+1))``; each round halves
    the live block a rank is responsible for.
    """
    _check_p(p, DimKind.SWITCH)
    rounds = []
    span = p // 2
    while span >= 1:
        rounds.append([(i, i ^ span) for i in range(p) if i < i ^ span])
        span //= 2
    return rounds
