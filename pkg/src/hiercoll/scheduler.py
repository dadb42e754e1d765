"""Chunk schedulers: the static baseline and the greedy load-balancing scheduler.

A schedule assigns every chunk of a collective an ordered traversal of the
network dimensions for its reduce-scatter pass and for its all-gather pass.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

from .collectives import CollectiveKind, Phase, size_after
from .latency import chunk_load, fixed_delay
from .topology import Topology


@dataclass(frozen=True)
class ChunkSchedule:
    chunk_id: int
    rs_order: tuple[int, ...]
    ag_order: tuple[int, ...]
    initial_bytes: float

    def __post_init__(self):
        for name in ("rs_order", "ag_order"):
            order = getattr(self, name)
            if order and sorted(order) != list(range(1, len(order) + 1)):
                raise ValueError(f"chunk {self.chunk_id}: {name} {order} is not a permutation of 1..D")
        if self.rs_order and self.ag_order and len(self.rs_order) != len(self.ag_order):
            raise ValueError(f"chunk {self.chunk_id}: RS and AG orders cover different dimension counts")
        if not self.rs_order and not self.ag_order:
            raise ValueError(f"chunk {self.chunk_id}: empty schedule")
        if not self.initial_bytes > 0:
            raise ValueError(f"chunk {self.chunk_id}: initial_bytes must be positive")

    def stages(self) -> list[tuple[int, Phase]]:
        return [(d, Phase.RS) for d in self.rs_order] + [(d, Phase.AG) for d in self.ag_order]

    def encode(self) -> str:
        rs = "-".join(map(str, self.rs_order)) or "none"
        ag = "-".join(map(str, self.ag_order)) or "none"
        return f"{rs}|{ag}"


@dataclass(frozen=True)
class SchedulerConfig:
    chunks_per_collective: int = 64
    threshold_divisor: float = 16.0

    def __post_init__(self):
        if not isinstance(self.chunks_per_collective, int) or self.chunks_per_collective < 1:
            raise ValueError("chunks_per_collective must be an integer >= 1")
        if not self.threshold_divisor > 0:
            raise ValueError("threshold_divisor must be positive")


@dataclass
class DimLoadTracker:
    """Accumulated predicted communication time per dimension (index 0 = dim1)."""

    loads: list[float] = field(default_factory=list)

    def reset(self, kind: CollectiveKind, topology: Topology) -> None:
        self.loads = [sum(fixed_delay(d, ph) for ph in kind.phases) for d in topology.dims]

    def add(self, dim_index: int, amount: float) -> None:
        if amount < 0:
            raise ValueError("load increments must be non-negative")
        self.loads[dim_index - 1] += amount

    def gap(self) -> float:
        return max(self.loads) - min(self.loads)

    def min_dim(self) -> int:
        return min(range(len(self.loads)), key=lambda i: (self.loads[i], i)) + 1

    def ascending(self) -> tuple[int, ...]:
        return tuple(i + 1 for i in sorted(range(len(self.loads)), key=lambda i: (self.loads[i], i)))

    def descending(self) -> tuple[int, ...]:
        return tuple(i + 1 for i in sorted(range(len(self.loads)), key=lambda i: (-self.loads[i], i)))


def initial_chunk_bytes(kind: CollectiveKind, total_bytes: float, cpc: int, topology: Topology) -> float:
    """Per-NPU bytes a chunk holds before its first stage.

    ``total_bytes`` is the full buffer size; an all-gather starts from the
    1/P shard of it.
    """
    chunk = total_bytes / cpc
    if kind is CollectiveKind.ALL_GATHER:
        return chunk / topology.total_npus
    return chunk


def _baseline_orders(kind: CollectiveKind, ndims: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    up = tuple(range(1, ndims + 1))
    down = tuple(reversed(up))
    if kind is CollectiveKind.ALL_REDUCE:
        return up, down
    if kind is CollectiveKind.REDUCE_SCATTER:
        return up, ()
    return (), down


def baseline_schedule(
    kind: CollectiveKind, topology: Topology, total_bytes: float = 1.0, chunks: int = 1
) -> list[ChunkSchedule]:
    rs, ag = _baseline_orders(kind, topology.ndims)
    init = initial_chunk_bytes(kind, total_bytes, chunks, topology)
    return [ChunkSchedule(c, rs, ag, init) for c in range(chunks)]


def walk_loads(topology: Topology, phase: Phase, order: Sequence[int], bytes_before: float):
    """Yield ``(dim, load)`` for each stage of one pass, plus the size left after it."""
    size = bytes_before
    out = []
    for k in order:
        dim = topology.dim(k)
        out.append((k, chunk_load(dim, phase, size)))
        size = size_after(phase, dim.size, size)
    return out, size


def threshold(config: SchedulerConfig, tracker: DimLoadTracker, chunk_bytes: float, topology: Topology,
              phase: Phase = Phase.RS) -> float:
    """Gap below which the scheduler falls back to the baseline order."""
    dim = topology.dim(tracker.min_dim())
    return chunk_load(dim, phase, chunk_bytes / config.threshold_divisor)


def themis_schedule(
    kind: CollectiveKind,
    total_bytes: float,
    config: SchedulerConfig,
    topology: Topology,
    tracker: DimLoadTracker | None = None,
) -> list[ChunkSchedule]:
    """Greedy per-chunk dimension ordering that evens out predicted dimension loads.

    Chunks are scheduled one after another. When the spread of tracked loads
    is under the threshold, a chunk takes the baseline order. Otherwise its
    reduce-scatter walks dimensions from least to most loaded (all-gather from
    most to least); for an all-reduce the all-gather order is the reverse of
    the reduce-scatter order.
    """
    if not total_bytes > 0:
        raise ValueError("total_bytes must be positive")
    tracker = tracker if tracker is not None else DimLoadTracker()
    tracker.reset(kind, topology)
    cpc = config.chunks_per_collective
    init = initial_chunk_bytes(kind, total_bytes, cpc, topology)
    first_phase = kind.phases[0]
    base_rs, base_ag = _baseline_orders(kind, topology.ndims)
    out = []
    for c in range(cpc):
        balanced = tracker.gap() < threshold(config, tracker, init, topology, first_phase)
        if kind is CollectiveKind.ALL_GATHER:
            rs, ag = (), (base_ag if balanced else tracker.descending())
        else:
            rs = base_rs if balanced else tracker.ascending()
            ag = tuple(reversed(rs)) if kind is CollectiveKind.ALL_REDUCE else ()
        size = init
        for phase, order in ((Phase.RS, rs), (Phase.AG, ag)):
            stages, size = walk_loads(topology, phase, order, size)
            for k, load in stages:
                tracker.add(k, load)
        out.append(ChunkSchedule(c, rs, ag, init))
    return out


@lru_cache(maxsize=4096)
def _cached_themis(kind, total_bytes, config, topology):
    return tuple(themis_schedule(kind, total_bytes, config, topology))


def cached_themis_schedule(kind: CollectiveKind, total_bytes: float, config: SchedulerConfig,
                           topology: Topology) -> list[ChunkSchedule]:
    """Memoised :func:`themis_schedule`; schedules are reused across iterations."""
    return list(_cached_themis(kind, float(total_bytes), config, topology))


def intra_dim_order(schedules: Sequence[ChunkSchedule], topology: Topology, policy="FIFO",
                    max_concurrency: int = 1) -> dict[int, list[tuple[int, Phase]]]:
    """Per-dimension order in which chunk stages start under a deterministic pre-run."""
    from .engine import EnginePolicy, simulate

    if isinstance(policy, str):
        policy = EnginePolicy(policy, max_concurrency)
    metrics = simulate(topology, schedules, policy, record=False)
    return metrics.start_order


def schedules_to_csv(schedules: Iterable[ChunkSchedule]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["chunk_id", "rs_order", "ag_order", "bytes"])
    for s in schedules:
        rs, ag = s.encode().split("|")
        w.writerow([s.chunk_id, rs, ag, repr(s.initial_bytes)])
    return buf.getvalue()


def _parse_order(text: str) -> tuple[int, ...]:
    text = text.strip()
    return () if text in ("", "none") else tuple(int(x) for x in text.split("-"))


def schedules_from_csv(text: str) -> list[ChunkSchedule]:
    rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].startswith("#")]
    if rows and rows[0][0] == "chunk_id":
        rows = rows[1:]
    return [ChunkSchedule(int(r[0]), _parse_order(r[1]), _parse_order(r[2]), float(r[3])) for r in rows]


def intra_order_to_csv(order: dict[int, list[tuple[int, Phase]]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["dim", "position", "chunk_id", "phase"])
    for dim in sorted(order):
        for pos, (chunk, phase) in enumerate(order[dim]):
            w.writerow([dim, pos, chunk, phase.value])
    return buf.getvalue()


def schedule_space_size(ndims: int, chunks: int, kind: CollectiveKind, full_space: bool) -> int:
    per_chunk = math.factorial(ndims)
    if kind is CollectiveKind.ALL_REDUCE and full_space:
        per_chunk *= math.factorial(ndims)
    return per_chunk**chunks
