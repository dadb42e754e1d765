"""Brute-force schedule search for tiny instances, and the analytic ideal bound."""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field
from typing import Sequence

from .collectives import CollectiveKind
from .engine import EnginePolicy, simulate
from .scheduler import ChunkSchedule, initial_chunk_bytes, schedule_space_size
from .topology import Topology, aggregate_bw

DEFAULT_CAP = 10**6


class SearchSpaceTooLarge(ValueError):
    def __init__(self, size: int, cap: int):
        super().__init__(f"schedule space has {size} candidates, above the cap of {cap}; "
                         f"raise the cap to at least {size} to enumerate it")
        self.size = size
        self.cap = cap


@dataclass(frozen=True)
class OracleResult:
    best_makespan: float
    best_schedules: tuple[ChunkSchedule, ...]
    space_size: int
    candidates: tuple[tuple[str, float], ...] = field(default=(), repr=False, compare=False)

    @property
    def best_encoding(self) -> str:
        return encode_assignment(self.best_schedules)


def encode_assignment(schedules: Sequence[ChunkSchedule]) -> str:
    return " ".join(s.encode() for s in schedules)


def _per_chunk_options(kind: CollectiveKind, ndims: int, full_space: bool):
    perms = list(itertools.permutations(range(1, ndims + 1)))
    if kind is CollectiveKind.REDUCE_SCATTER:
        return [(p, ()) for p in perms]
    if kind is CollectiveKind.ALL_GATHER:
        return [((), p) for p in perms]
    if full_space:
        return [(r, a) for r in perms for a in perms]
    return [(p, tuple(reversed(p))) for p in perms]


def exhaustive_best(
    topology: Topology,
    kind: CollectiveKind,
    total_bytes: float,
    cpc: int,
    policy: EnginePolicy | None = None,
    full_space: bool = False,
    *,
    cap: int = DEFAULT_CAP,
    keep_candidates: bool = False,
) -> OracleResult:
    """Simulate every schedule assignment and keep the fastest.

    By default an all-reduce chunk's all-gather order is tied to the reverse
    of its reduce-scatter order; ``full_space`` lifts that restriction.
    Candidates are visited in lexicographic order of their encoding and only
    a strictly shorter makespan replaces the incumbent, so ties resolve to
    the lexicographically smallest assignment.
    """
    if not total_bytes > 0:
        raise ValueError("total_bytes must be positive")
    if cpc < 1:
        raise ValueError("cpc must be >= 1")
    kind = CollectiveKind.parse(kind) if isinstance(kind, str) else kind
    size = schedule_space_size(topology.ndims, cpc, kind, full_space)
    if size > cap:
        raise SearchSpaceTooLarge(size, cap)
    policy = policy or EnginePolicy()
    init = initial_chunk_bytes(kind, total_bytes, cpc, topology)
    options = sorted(_per_chunk_options(kind, topology.ndims, full_space))

    best = None
    best_scheds: tuple[ChunkSchedule, ...] = ()
    seen = []
    for combo in itertools.product(options, repeat=cpc):
        scheds = tuple(ChunkSchedule(c, rs, ag, init) for c, (rs, ag) in enumerate(combo))
        mk = simulate(topology, scheds, policy, record=False).makespan
        if keep_candidates:
            seen.append((encode_assignment(scheds), mk))
        if best is None or mk < best:
            best, best_scheds = mk, scheds
    return OracleResult(best, best_scheds, size, tuple(seen))


def ideal_latency(total_bytes: float, topology: Topology) -> float:
    """Time to move ``total_bytes`` at the summed bandwidth of every dimension."""
    if not total_bytes > 0:
        raise ValueError("total_bytes must be positive")
    return total_bytes / sum(aggregate_bw(d) for d in topology.dims)


def oracle_to_csv(result: OracleResult, extra: dict[str, float] | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["row", "candidate", "schedule", "makespan_s"])
    for i, (enc, mk) in enumerate(result.candidates):
        w.writerow(["candidate", i, enc, mk])
    w.writerow(["best", "", result.best_encoding, result.best_makespan])
    for name, value in (extra or {}).items():
        w.writerow([name, "", "", value])
    w.writerow(["space_size", "", "", result.space_size])
    return buf.getvalue()
