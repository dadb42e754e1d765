"""Training-iteration playback over a topology.

A workload is a list of layers, each with forward / input-grad / weight-grad
compute times and optional forward and backward collectives. One iteration
runs the forward pass in layer order, then the backward pass in reverse.

Timing model:

* Collectives share one network channel and run back to back in issue order.
* A ``blocking`` collective stalls compute until it completes.
* An ``overlapped`` collective runs alongside later compute. Compute waits for
  it at the end of its pass, or before layer ``X`` when tagged
  ``overlapped@X`` and ``X`` comes later in that pass. Only the part that
  outlasts the compute is exposed.

Exposed time is attributed to data-parallel (DP) or model-parallel (MP)
communication. Backward collectives that reach the last dimension count as
DP. Forward collectives and all-to-alls count as MP.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Sequence

from .collectives import CollectiveKind
from .engine import EnginePolicy, simulate
from .oracle import ideal_latency
from .scheduler import SchedulerConfig, baseline_schedule, cached_themis_schedule
from .topology import Topology

MODES = ("Baseline", "ThemisFIFO", "ThemisSCF", "Ideal")
ALL_TO_ALL = "AllToAll"
A100_FP16_FLOPS = 312e12
US = 1e-6


class WorkloadError(ValueError):
    pass


@dataclass(frozen=True)
class CommSpec:
    kind: str  # a CollectiveKind value or ALL_TO_ALL
    bytes: float
    dims: str  # "all", "a-b", "k", "head:N" or "tail:N"

    @property
    def collective(self) -> CollectiveKind | None:
        return None if self.kind == ALL_TO_ALL else CollectiveKind(self.kind)


@dataclass(frozen=True)
class LayerSpec:
    name: str
    fwd_compute: float
    bwd_ig_compute: float
    bwd_wg_compute: float
    fwd_comm: CommSpec | None = None
    bwd_comm: CommSpec | None = None
    overlap_tag: str = "blocking"

    @property
    def overlapped(self) -> bool:
        return self.overlap_tag.startswith("overlapped")

    @property
    def wait_before(self) -> str | None:
        _, _, target = self.overlap_tag.partition("@")
        return target or None


@dataclass(frozen=True)
class Workload:
    layers: tuple[LayerSpec, ...]
    parallelism: str = "data"
    name: str = ""


@dataclass(frozen=True)
class CollectiveTiming:
    layer: str
    pass_: str
    kind: str
    bytes: float
    dims: tuple[int, ...]
    category: str
    issue: float
    start: float
    end: float

    @property
    def duration(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class IterationReport:
    mode: str
    fwd_compute: float
    bwd_compute: float
    exposed_dp_comm: float
    exposed_mp_comm: float
    total: float
    collectives: tuple[CollectiveTiming, ...] = field(default=(), repr=False)

    @property
    def exposed_comm(self) -> float:
        return self.exposed_dp_comm + self.exposed_mp_comm


# --------------------------------------------------------------------- parsing

_KIND_ALIASES = {
    "ar": "AllReduce", "allreduce": "AllReduce",
    "rs": "ReduceScatter", "reducescatter": "ReduceScatter",
    "ag": "AllGather", "allgather": "AllGather",
    "a2a": ALL_TO_ALL, "alltoall": ALL_TO_ALL,
}


def _parse_kind(text: str, where: str) -> str | None:
    key = text.strip().lower().replace("-", "").replace("_", "")
    if key in ("none", ""):
        return None
    try:
        return _KIND_ALIASES[key]
    except KeyError:
        raise WorkloadError(f"{where}: unknown collective kind {text!r}") from None


def _check_dims_token(token: str, where: str) -> str:
    tok = token.strip().lower()
    try:
        if tok == "all":
            return tok
        if tok.startswith(("head:", "tail:")):
            if int(tok.split(":", 1)[1]) < 1:
                raise ValueError
            return tok
        lo, _, hi = tok.partition("-")
        a, b = int(lo), int(hi or lo)
        if not 1 <= a <= b:
            raise ValueError
        return tok
    except ValueError:
        raise WorkloadError(f"{where}: bad dimension range {token!r}") from None


def _parse_comm(kind: str, size: str, dims: str, where: str) -> CommSpec | None:
    k = _parse_kind(kind, where)
    if k is None:
        return None
    try:
        nbytes = float(size)
    except ValueError:
        raise WorkloadError(f"{where}: bad byte count {size!r}") from None
    if nbytes < 0 or not math.isfinite(nbytes):
        raise WorkloadError(f"{where}: byte count must be a finite value >= 0")
    return CommSpec(k, nbytes, _check_dims_token(dims, where))


def load_workload(text: str, name: str = "") -> Workload:
    """Parse a line-oriented trace; ``#`` starts a comment, ``none`` marks empty fields.

    Columns: ``name, fwd_us, bwd_ig_us, bwd_wg_us, fwd_comm_kind, fwd_comm_bytes,
    fwd_dims, bwd_comm_kind, bwd_comm_bytes, bwd_dims, overlap_tag``. A
    ``# parallelism: hybrid`` comment sets the parallelism descriptor.
    """
    parallelism = "data"
    layers: list[LayerSpec] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line.startswith("#"):
            key, _, value = line[1:].partition(":")
            if key.strip().lower() == "parallelism":
                parallelism = value.strip().lower()
            continue
        if not line:
            continue
        cols = [c.strip() for c in next(csv.reader([line]))]
        if cols[0] == "name":
            continue
        where = f"line {lineno} ({cols[0]})"
        if len(cols) != 11:
            raise WorkloadError(f"{where}: expected 11 columns, got {len(cols)}")
        try:
            fwd, ig, wg = (float(c) * US for c in cols[1:4])
        except ValueError:
            raise WorkloadError(f"{where}: compute times must be numbers") from None
        if min(fwd, ig, wg) < 0:
            raise WorkloadError(f"{where}: compute times must be >= 0")
        tag = cols[10].lower() if cols[10].lower() in ("blocking", "overlapped", "none") else cols[10]
        if tag == "none":
            tag = "blocking"
        if not (tag == "blocking" or tag == "overlapped" or tag.startswith("overlapped@")):
            raise WorkloadError(f"{where}: overlap tag must be blocking, overlapped or overlapped@LAYER")
        layers.append(LayerSpec(
            cols[0], fwd, ig, wg,
            _parse_comm(cols[4], cols[5], cols[6], where),
            _parse_comm(cols[7], cols[8], cols[9], where),
            tag,
        ))
    if not layers:
        raise WorkloadError("workload has no layers")
    if parallelism not in ("data", "model", "hybrid"):
        raise WorkloadError(f"parallelism must be data, model or hybrid, got {parallelism!r}")
    wl = Workload(tuple(layers), parallelism, name)
    _check_wait_targets(wl)
    return wl


def _check_wait_targets(wl: Workload) -> None:
    names = {l.name for l in wl.layers}
    if len(names) != len(wl.layers):
        raise WorkloadError("layer names must be unique")
    for layer in wl.layers:
        if layer.wait_before is not None and layer.wait_before not in names:
            raise WorkloadError(f"layer {layer.name}: wait target {layer.wait_before!r} is not a layer")


def check_workload(workload: Workload, topology: Topology) -> None:
    for layer in workload.layers:
        for comm in (layer.fwd_comm, layer.bwd_comm):
            if comm is not None:
                try:
                    resolve_dims(comm.dims, topology)
                except WorkloadError as exc:
                    raise WorkloadError(f"layer {layer.name}: {exc}") from None


def bundled_traces() -> list[str]:
    return sorted(p.name[:-4] for p in resources.files("hiercoll.traces").iterdir() if p.name.endswith(".csv"))


def bundled_trace(name: str) -> Workload:
    try:
        text = resources.files("hiercoll.traces").joinpath(f"{name}.csv").read_text()
    except FileNotFoundError:
        raise WorkloadError(f"no bundled trace named {name!r}; available: {', '.join(bundled_traces())}") from None
    return load_workload(text, name)


def resolve_workload(spec: str) -> Workload:
    """A bundled trace name or a path to a trace file."""
    if spec in bundled_traces():
        return bundled_trace(spec)
    with open(spec) as fh:
        return load_workload(fh.read(), spec)


def resolve_dims(token: str, topology: Topology) -> tuple[int, ...]:
    """Map a dimension-range token onto 1-based dimension indices of ``topology``.

    ``head:N`` is the longest leading run whose NPU product stays within N;
    ``tail:N`` is everything after it.
    """
    D = topology.ndims
    if token == "all":
        return tuple(range(1, D + 1))
    if token.startswith(("head:", "tail:")):
        which, n = token.split(":")
        limit, prod, cut = int(n), 1, 0
        for size in topology.sizes:
            if prod * size > limit:
                break
            prod *= size
            cut += 1
        dims = tuple(range(1, cut + 1)) if which == "head" else tuple(range(cut + 1, D + 1))
        if not dims:
            raise WorkloadError(f"range {token!r} selects no dimension of {topology.describe()}")
        return dims
    lo, _, hi = token.partition("-")
    a, b = int(lo), int(hi or lo)
    if b > D:
        raise WorkloadError(f"range {token!r} exceeds the {D} dimensions of the topology")
    return tuple(range(a, b + 1))


# -------------------------------------------------------------------- timing

def roofline_time(flops: float, peak_flops: float = A100_FP16_FLOPS, mem_bytes: float = 0.0,
                  mem_bw: float = math.inf) -> float:
    """Compute time at the roofline: the slower of the FLOP and memory bounds."""
    if flops < 0 or mem_bytes < 0:
        raise ValueError("work must be non-negative")
    return max(flops / peak_flops, mem_bytes / mem_bw)


def _mode_policy(mode: str, base: EnginePolicy) -> EnginePolicy:
    intra = "SCF" if mode == "ThemisSCF" else "FIFO"
    return EnginePolicy(intra, base.max_concurrency, base.latency_mode)


@lru_cache(maxsize=8192)
def collective_time(kind: str, nbytes: float, topology: Topology, mode: str,
                    config: SchedulerConfig, policy: EnginePolicy) -> float:
    """Duration of one collective on ``topology`` under the given mode."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if nbytes == 0:
        return 0.0
    if kind == ALL_TO_ALL:
        p = topology.total_npus
        volume = (p - 1) / p * nbytes
        if mode == "Ideal":
            return volume / topology.total_bw()
        return max(d.step_latency for d in topology.dims) + volume / topology.total_bw()
    ck = CollectiveKind(kind)
    if mode == "Ideal":
        scale = 1.0 if ck is CollectiveKind.ALL_REDUCE else 0.5
        return scale * ideal_latency(nbytes, topology)
    if mode == "Baseline":
        scheds = baseline_schedule(ck, topology, nbytes, config.chunks_per_collective)
    else:
        scheds = cached_themis_schedule(ck, nbytes, config, topology)
    return simulate(topology, scheds, _mode_policy(mode, policy), record=False).makespan


def _category(comm: CommSpec, pass_: str, dims: tuple[int, ...], ndims: int) -> str:
    if comm.kind == ALL_TO_ALL or pass_ == "fwd":
        return "mp"
    return "dp" if dims[-1] == ndims else "mp"


def run_iteration(
    workload: Workload,
    topology: Topology,
    scheduler_cfg: SchedulerConfig | None = None,
    engine_policy: EnginePolicy | None = None,
    mode: str = "ThemisSCF",
) -> IterationReport:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    cfg = scheduler_cfg or SchedulerConfig()
    policy = engine_policy or EnginePolicy()
    check_workload(workload, topology)
    D = topology.ndims

    t = 0.0
    net_free = 0.0
    exposed = {"dp": 0.0, "mp": 0.0}
    timings: list[CollectiveTiming] = []
    pending: list[tuple[str | None, CollectiveTiming]] = []

    pos = {l.name: i for i, l in enumerate(workload.layers)}

    def wait_target(layer: LayerSpec, pass_: str) -> str | None:
        target = layer.wait_before
        if target is None:
            return None
        later = pos[target] > pos[layer.name] if pass_ == "fwd" else pos[target] < pos[layer.name]
        return target if later else None

    def issue(layer: LayerSpec, comm: CommSpec | None, pass_: str) -> None:
        nonlocal t, net_free
        if comm is None:
            return
        dims = resolve_dims(comm.dims, topology)
        sub = topology if len(dims) == D else topology.subtopology(dims)
        dur = collective_time(comm.kind, comm.bytes, sub, mode, cfg, policy)
        start = max(t, net_free)
        net_free = start + dur
        timing = CollectiveTiming(layer.name, pass_, comm.kind, comm.bytes, dims,
                                  _category(comm, pass_, dims, D), t, start, net_free)
        timings.append(timing)
        if layer.overlapped:
            pending.append((wait_target(layer, pass_), timing))
        else:
            exposed[timing.category] += net_free - t
            t = net_free

    def wait(target: str | None) -> None:
        nonlocal t, pending
        due = sorted((p for p in pending if p[0] == target), key=lambda p: p[1].end)
        pending = [p for p in pending if p[0] != target]
        for _, timing in due:
            if timing.end > t:
                exposed[timing.category] += timing.end - t
                t = timing.end

    fwd_total = bwd_total = 0.0
    for layer in workload.layers:
        wait(layer.name)
        t += layer.fwd_compute
        fwd_total += layer.fwd_compute
        issue(layer, layer.fwd_comm, "fwd")
    wait(None)
    for layer in reversed(workload.layers):
        wait(layer.name)
        step = layer.bwd_ig_compute + layer.bwd_wg_compute
        t += step
        bwd_total += step
        issue(layer, layer.bwd_comm, "bwd")
    wait(None)
    return IterationReport(mode, fwd_total, bwd_total, exposed["dp"], exposed["mp"], t, tuple(timings))


def compare_modes(workload: Workload, topology: Topology, modes: Sequence[str] = MODES,
                  scheduler_cfg: SchedulerConfig | None = None,
                  engine_policy: EnginePolicy | None = None) -> dict[str, IterationReport]:
    return {m: run_iteration(workload, topology, scheduler_cfg, engine_policy, m) for m in modes}


def reports_to_csv(reports: dict[str, IterationReport], baseline: str = "Baseline") -> str:
    """Stacked decomposition per mode, with total time normalised to ``baseline``."""
    ref = reports[baseline].total if baseline in reports else None
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["mode", "fwd_compute_s", "bwd_compute_s", "exposed_dp_comm_s", "exposed_mp_comm_s",
                "total_s", "normalized_total"])
    for mode, r in reports.items():
        w.writerow([mode, r.fwd_compute, r.bwd_compute, r.exposed_dp_comm, r.exposed_mp_comm, r.total,
                    r.total / ref if ref else ""])
    return buf.getvalue()


def collectives_to_csv(report: IterationReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["layer", "pass", "kind", "bytes", "dims", "category", "issue_s", "start_s", "end_s", "duration_s"])
    for c in report.collectives:
        w.writerow([c.layer, c.pass_, c.kind, c.bytes, "-".join(map(str, c.dims)), c.category,
                    c.issue, c.start, c.end, c.duration])
    return buf.getvalue()
