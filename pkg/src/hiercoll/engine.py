"""Deterministic discrete-event execution of chunked collective schedules.

All NPUs act in lockstep on congestion-free per-dimension algorithms, so the
whole system reduces to one pipeline of dimension resources. Each dimension
serves up to ``max_concurrency`` ready stages at once; co-resident stages
split its bandwidth evenly and are re-timed whenever membership changes.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import _kernel
from .collectives import Phase, bytes_sent_per_npu, size_after
from .latency import chunk_load, fixed_delay
from .scheduler import ChunkSchedule
from .topology import Topology, aggregate_bw


class DeadlockError(RuntimeError):
    pass


class ScheduleMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class EnginePolicy:
    intra_dim: str = "FIFO"
    max_concurrency: int = 1
    latency_mode: str = "pipelined"

    def __post_init__(self):
        object.__setattr__(self, "intra_dim", self.intra_dim.upper())
        object.__setattr__(self, "latency_mode", self.latency_mode.lower())
        if self.latency_mode not in ("pipelined", "serial"):
            raise ValueError(f"latency_mode must be pipelined or serial, got {self.latency_mode!r}")
        if self.intra_dim not in ("FIFO", "SCF"):
            raise ValueError(f"intra-dimension policy must be FIFO or SCF, got {self.intra_dim!r}")
        if not isinstance(self.max_concurrency, int) or self.max_concurrency < 1:
            raise ValueError("max_concurrency must be an integer >= 1")


@dataclass(frozen=True)
class ChunkOp:
    chunk_id: int
    dim_index: int
    phase: Phase
    bytes_before: float
    fixed: float
    byte_time: float

    def duration(self, share: int = 1) -> float:
        """Start-to-completion time when sharing the dimension with ``share`` stages."""
        return self.fixed + self.byte_time * share


@dataclass(frozen=True)
class RunMetrics:
    makespan: float
    busy: tuple[float, ...]
    idle: tuple[float, ...]
    bytes_sent: tuple[float, ...]
    intervals: tuple[tuple[tuple[float, float], ...], ...]
    weighted_utilization: float
    start_order: dict = field(compare=False)
    ops: tuple[ChunkOp, ...] = field(compare=False, repr=False)
    op_start: tuple[float, ...] = field(compare=False, repr=False)
    op_end: tuple[float, ...] = field(compare=False, repr=False)

    @property
    def ndims(self) -> int:
        return len(self.busy)

    def utilization(self, k: int) -> float:
        return self.busy[k - 1] / self.makespan if self.makespan > 0 else 0.0


def expand_ops(topology: Topology, schedule: ChunkSchedule) -> list[ChunkOp]:
    """Walk one chunk's traversal, tracking its resident size stage by stage."""
    size = schedule.initial_bytes
    ops = []
    for k, phase in schedule.stages():
        dim = topology.dim(k)
        ops.append(ChunkOp(schedule.chunk_id, k, phase, size, fixed_delay(dim, phase), chunk_load(dim, phase, size)))
        size = size_after(phase, dim.size, size)
    return ops


def _enforcement_arrays(order: Mapping[int, Sequence], ops: list[ChunkOp], ndims: int):
    index = {(op.dim_index, op.chunk_id, op.phase): i for i, op in enumerate(ops)}
    expected = {}
    for op in ops:
        expected.setdefault(op.dim_index, set()).add((op.chunk_id, op.phase))
    ptr = [0]
    flat = []
    for k in range(1, ndims + 1):
        seq = [(int(c), ph if isinstance(ph, Phase) else Phase(ph)) for c, ph in order.get(k, ())]
        if len(set(seq)) != len(seq) or set(seq) != expected.get(k, set()):
            raise ScheduleMismatchError(f"enforced order for dim{k} does not cover exactly the stages scheduled there")
        flat.extend(index[(k, c, ph)] for c, ph in seq)
        ptr.append(len(flat))
    return np.array(ptr, dtype=np.int64), np.array(flat, dtype=np.int64)


def _merge(spans: list[tuple[float, float]]) -> list[tuple[float, float]]:
    merged: list[list[float]] = []
    for s, e in sorted(spans):
        if merged and s <= merged[-1][1]:
            if e > merged[-1][1]:
                merged[-1][1] = e
        else:
            merged.append([s, e])
    return [(s, e) for s, e in merged]


def simulate(
    topology: Topology,
    schedules: Sequence[ChunkSchedule],
    policy: EnginePolicy | None = None,
    enforced_order: Mapping[int, Sequence] | None = None,
    *,
    record: bool = True,
    kernel=None,
) -> RunMetrics:
    """Run every chunk stage to completion and collect per-dimension metrics.

    ``record=False`` skips building busy-interval timelines (used for the
    ordering pre-run). ``kernel`` overrides the event-loop implementation.
    """
    policy = policy or EnginePolicy()
    if not schedules:
        raise ScheduleMismatchError("no chunk schedules to simulate")
    scheds = sorted(schedules, key=lambda s: s.chunk_id)
    if len({s.chunk_id for s in scheds}) != len(scheds):
        raise ScheduleMismatchError("duplicate chunk ids")
    per_chunk = [expand_ops(topology, s) for s in scheds]
    L = len(per_chunk[0])
    if any(len(p) != L for p in per_chunk):
        raise ScheduleMismatchError("all chunks of one collective must have the same number of stages")
    ops = [op for chunk_ops in per_chunk for op in chunk_ops]
    D = topology.ndims

    op_dim = np.array([op.dim_index - 1 for op in ops], dtype=np.int64)
    op_fixed = np.array([op.fixed for op in ops])
    zeros = np.zeros(len(ops))
    # pipelined: the fixed delay trails the byte transfer without holding the dim
    op_occ, op_tail = (zeros, op_fixed) if policy.latency_mode == "pipelined" else (op_fixed, zeros)
    op_load = np.array([op.byte_time for op in ops])
    op_key = np.array([op.bytes_before for op in ops])
    enf_ptr = enf_ops = None
    if enforced_order is not None:
        enf_ptr, enf_ops = _enforcement_arrays(enforced_order, ops, D)

    run = kernel or _kernel.run
    start, end, seq, status = run(
        L, op_dim, op_occ, op_load, op_tail, op_key, D,
        min(policy.max_concurrency, len(scheds)), policy.intra_dim == "SCF", enf_ptr, enf_ops,
    )
    start = [float(x) for x in start]
    end = [float(x) for x in end]
    seq = [int(x) for x in seq]
    if status:
        raise DeadlockError(_deadlock_report(ops, end, enforced_order, L))

    makespan = max(end)
    spans: list[list[tuple[float, float]]] = [[] for _ in range(D)]
    sent = [0.0] * D
    last_end = [0.0] * D
    for i, op in enumerate(ops):
        k = op.dim_index - 1
        spans[k].append((start[i], end[i]))
        sent[k] += bytes_sent_per_npu(op.phase, topology.dim(op.dim_index).size, op.bytes_before)
        last_end[k] = max(last_end[k], end[i])
    intervals = tuple(tuple(_merge(s)) for s in spans)
    busy = tuple(sum(e - s for s, e in iv) for iv in intervals)
    idle = tuple(max(0.0, last_end[k] - busy[k]) for k in range(D))

    order = {k: [] for k in range(1, D + 1)}
    for i in sorted(range(len(ops)), key=seq.__getitem__):
        order[ops[i].dim_index].append((ops[i].chunk_id, ops[i].phase))

    bws = [aggregate_bw(d) for d in topology.dims]
    util = sum(bw * b / makespan for bw, b in zip(bws, busy)) / sum(bws) if makespan > 0 else 0.0
    return RunMetrics(
        makespan=makespan,
        busy=busy,
        idle=idle,
        bytes_sent=tuple(sent),
        intervals=intervals if record else tuple(() for _ in range(D)),
        weighted_utilization=util,
        start_order=order,
        ops=tuple(ops),
        op_start=tuple(start),
        op_end=tuple(end),
    )


def _deadlock_report(ops, end, enforced_order, L) -> str:
    stuck = []
    for c in range(len(ops) // L):
        for s in range(L):
            op = ops[c * L + s]
            if end[c * L + s] < 0:
                stuck.append(f"chunk {op.chunk_id} waits for {op.phase.value} on dim{op.dim_index}")
                break
    head = "; ".join(stuck[:8])
    more = f" (+{len(stuck) - 8} more)" if len(stuck) > 8 else ""
    why = " under the enforced intra-dimension order" if enforced_order is not None else ""
    return f"deadlock{why}: {head}{more}"


def weighted_utilization(metrics: RunMetrics, topology: Topology) -> float:
    """Bandwidth-weighted mean of per-dimension busy fractions."""
    if not metrics.makespan > 0:
        raise ValueError("utilization undefined for a zero-length run")
    bws = [aggregate_bw(d) for d in topology.dims]
    return sum(bw * b / metrics.makespan for bw, b in zip(bws, metrics.busy)) / sum(bws)


def activity_rate(metrics: RunMetrics, window: float) -> np.ndarray:
    """Busy fraction of each dimension per time window, shape ``(D, n_windows)``."""
    if not window > 0:
        raise ValueError("window must be positive")
    T = metrics.makespan
    n = max(1, int(np.ceil(T / window - 1e-12)))
    edges = np.minimum(np.arange(n + 1) * window, T)
    widths = np.diff(edges)
    out = np.zeros((metrics.ndims, n))
    for k, iv in enumerate(metrics.intervals):
        for s, e in iv:
            lo = np.clip(edges[:-1], s, e)
            hi = np.clip(edges[1:], s, e)
            out[k] += hi - lo
    return np.divide(out, widths, out=np.zeros_like(out), where=widths > 0)


def metrics_to_csv(metrics: RunMetrics, topology: Topology) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["row", "dim", "busy_s", "idle_s", "bytes_sent", "utilization", "makespan_s", "weighted_utilization"])
    for k in range(1, metrics.ndims + 1):
        w.writerow(["dim", k, metrics.busy[k - 1], metrics.idle[k - 1], metrics.bytes_sent[k - 1],
                    metrics.utilization(k), "", ""])
    w.writerow(["summary", "", "", "", sum(metrics.bytes_sent), "", metrics.makespan,
                weighted_utilization(metrics, topology)])
    return buf.getvalue()


def activity_to_csv(metrics: RunMetrics, window: float) -> str:
    rates = activity_rate(metrics, window)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["window_start_s", "window_s"] + [f"dim{k}" for k in range(1, metrics.ndims + 1)])
    for j in range(rates.shape[1]):
        w.writerow([j * window, window] + [float(x) for x in rates[:, j]])
    return buf.getvalue()
