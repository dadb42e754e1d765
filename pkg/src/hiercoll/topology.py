"""Multi-dimensional network topologies.

A topology is an ordered product of dimensions ``P1 x P2 x ... x PD``. Each
dimension carries its own physical kind, per-link bandwidth, link count and
per-step latency. Bandwidths are stored in bytes/second; config files use
decimal Gb/s and nanoseconds.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

GBPS = 1e9 / 8.0  # bytes/second in one Gb/s
NS = 1e-9


class TopologyError(ValueError):
    """Raised for malformed or invalid topology descriptions."""


class DimKind(enum.Enum):
    RING = "ring"
    FULLY_CONNECTED = "fully_connected"
    SWITCH = "switch"

    @classmethod
    def parse(cls, text: str) -> "DimKind":
        key = text.strip().lower().replace("-", "_")
        aliases = {"fc": "fully_connected", "sw": "switch", "fullyconnected": "fully_connected"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise TopologyError(f"unknown dimension kind {text!r}") from None


def _is_pow2(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


@dataclass(frozen=True)
class NetworkDim:
    index: int
    size: int
    kind: DimKind
    bw_per_link: float  # bytes/s
    links_per_npu: int = 1
    step_latency: float = 0.0  # seconds

    def __post_init__(self):
        where = f"dim{self.index}"
        if not isinstance(self.size, int) or self.size < 2:
            raise TopologyError(f"{where}: size must be an integer >= 2, got {self.size!r}")
        if not self.bw_per_link > 0:
            raise TopologyError(f"{where}: bw_per_link must be positive")
        if not isinstance(self.links_per_npu, int) or self.links_per_npu < 1:
            raise TopologyError(f"{where}: links_per_npu must be an integer >= 1")
        if self.step_latency < 0:
            raise TopologyError(f"{where}: step_latency must be >= 0")
        if self.kind is DimKind.SWITCH and not _is_pow2(self.size):
            raise TopologyError(
                f"{where}: switch dimension needs a power-of-two size for halving-doubling, got {self.size}"
            )

    @property
    def aggregate_bw(self) -> float:
        return aggregate_bw(self)

    def to_record(self) -> dict:
        return {
            "size": self.size,
            "kind": self.kind.value,
            "bw_per_link_gbps": self.bw_per_link / GBPS,
            "links_per_npu": self.links_per_npu,
            "step_latency_ns": self.step_latency / NS,
        }


@dataclass(frozen=True)
class Topology:
    dims: tuple[NetworkDim, ...]
    name: str = ""

    def __post_init__(self):
        if not self.dims:
            raise TopologyError("topology needs at least one dimension")
        for pos, dim in enumerate(self.dims, start=1):
            if dim.index != pos:
                raise TopologyError(f"dimension indices must be 1..D in order; position {pos} has index {dim.index}")

    @property
    def ndims(self) -> int:
        return len(self.dims)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(d.size for d in self.dims)

    @property
    def total_npus(self) -> int:
        return math.prod(self.sizes)

    def dim(self, k: int) -> NetworkDim:
        """Return the 1-based dimension ``k``."""
        if not 1 <= k <= self.ndims:
            raise IndexError(f"dimension index {k} out of range 1..{self.ndims}")
        return self.dims[k - 1]

    def total_bw(self) -> float:
        return sum(aggregate_bw(d) for d in self.dims)

    def subtopology(self, indices: Sequence[int]) -> "Topology":
        """Restrict to a contiguous run of dimensions, re-indexed from 1."""
        idx = list(indices)
        if not idx:
            raise TopologyError("empty dimension range")
        if idx != list(range(idx[0], idx[0] + len(idx))):
            raise TopologyError(f"dimension range {idx} is not contiguous")
        dims = tuple(
            NetworkDim(pos, d.size, d.kind, d.bw_per_link, d.links_per_npu, d.step_latency)
            for pos, d in enumerate((self.dim(k) for k in idx), start=1)
        )
        return Topology(dims, name=f"{self.name}[{idx[0]}-{idx[-1]}]" if self.name else "")

    def with_bandwidths(self, aggregate: Sequence[float]) -> "Topology":
        """Copy with new per-NPU aggregate bandwidths (bytes/s), one link per dimension."""
        if len(aggregate) != self.ndims:
            raise TopologyError("bandwidth vector length must equal the number of dimensions")
        dims = tuple(
            NetworkDim(d.index, d.size, d.kind, float(bw), 1, d.step_latency)
            for d, bw in zip(self.dims, aggregate)
        )
        return Topology(dims, name=self.name)

    def fingerprint(self) -> tuple:
        return tuple((d.size, d.kind.value, d.bw_per_link, d.links_per_npu, d.step_latency) for d in self.dims)

    def describe(self) -> str:
        return "x".join(str(s) for s in self.sizes)


def aggregate_bw(dim: NetworkDim) -> float:
    """Per-NPU bandwidth of a dimension in bytes/s (all links treated as one pipe)."""
    return dim.bw_per_link * dim.links_per_npu


def required_balanced_bw(topology: Topology, k: int) -> float:
    """Bandwidth of dimension ``k`` that makes baseline stages equal-length.

    Baseline scheduling shrinks each chunk by ``P_i`` per reduce-scatter stage,
    so dimension ``k`` sees ``1/prod(P_1..P_{k-1})`` of the data dimension 1 sees.
    """
    topology.dim(k)
    shrink = math.prod(topology.sizes[: k - 1])
    return aggregate_bw(topology.dims[0]) / shrink


def make_dim(
    index: int,
    size: int,
    kind: DimKind | str,
    bw_per_link_gbps: float,
    links_per_npu: int = 1,
    step_latency_ns: float = 0.0,
) -> NetworkDim:
    if isinstance(kind, str):
        kind = DimKind.parse(kind)
    return NetworkDim(index, size, kind, bw_per_link_gbps * GBPS, links_per_npu, step_latency_ns * NS)


def make_topology(records: Iterable[dict], name: str = "") -> Topology:
    dims = []
    for pos, rec in enumerate(records, start=1):
        missing = [f for f in _FIELDS if f not in rec]
        if missing:
            raise TopologyError(f"dim{pos}: missing field(s) {', '.join(missing)}")
        size = rec["size"]
        if isinstance(size, float) and size.is_integer():
            size = int(size)
        links = rec["links_per_npu"]
        if isinstance(links, float) and links.is_integer():
            links = int(links)
        try:
            kind = DimKind.parse(str(rec["kind"]))
        except TopologyError as exc:
            raise TopologyError(f"dim{pos}: {exc}") from None
        dims.append(
            make_dim(pos, size, kind, float(rec["bw_per_link_gbps"]), links, float(rec["step_latency_ns"]))
        )
    return Topology(tuple(dims), name=name)


_FIELDS = ("size", "kind", "bw_per_link_gbps", "links_per_npu", "step_latency_ns")


def load_topology(config_text: str) -> Topology:
    """Parse a JSON topology description.

    Accepts either a list of dimension records or an object with ``dims``
    (and optional ``name``). Preset names are also accepted.
    """
    stripped = config_text.strip()
    if stripped in PRESETS:
        return preset(stripped)
    try:
        data = json.loads(config_text)
    except json.JSONDecodeError as exc:
        lines = config_text.splitlines()
        context = lines[exc.lineno - 1] if 0 < exc.lineno <= len(lines) else ""
        raise TopologyError(f"parse error at line {exc.lineno}: {exc.msg}: {context.strip()!r}") from None
    name = ""
    if isinstance(data, dict):
        name = str(data.get("name", ""))
        data = data.get("dims")
    if not isinstance(data, list):
        raise TopologyError("topology must be a list of dimension records or an object with 'dims'")
    for pos, rec in enumerate(data, start=1):
        if not isinstance(rec, dict):
            raise TopologyError(f"dim{pos}: expected an object, got {type(rec).__name__}")
    return make_topology(data, name=name)


def dump_topology(topology: Topology) -> str:
    return json.dumps({"name": topology.name, "dims": [d.to_record() for d in topology.dims]}, indent=2)


# (size, kind, bw/link Gb/s, links/NPU, latency ns) per dimension
_PRESET_TABLE: dict[str, list[tuple]] = {
    "2D-SW_SW": [(16, "switch", 200, 6, 700), (64, "switch", 800, 1, 1700)],
    "3D-SW_SW_SW_homo": [(16, "switch", 200, 4, 700), (8, "switch", 200, 4, 700), (8, "switch", 800, 1, 1700)],
    "3D-SW_SW_SW_hetero": [(16, "switch", 200, 8, 700), (8, "switch", 200, 4, 700), (8, "switch", 400, 1, 1700)],
    "3D-FC_Ring_SW": [(8, "fully_connected", 200, 7, 700), (16, "ring", 200, 4, 700), (8, "switch", 400, 1, 1700)],
    "4D-Ring_SW_SW_SW": [
        (4, "ring", 1000, 2, 20),
        (4, "switch", 200, 8, 700),
        (8, "switch", 200, 4, 700),
        (8, "switch", 400, 1, 1700),
    ],
    "4D-Ring_FC_Ring_SW": [
        (4, "ring", 1500, 2, 20),
        (8, "fully_connected", 200, 7, 700),
        (4, "ring", 200, 6, 700),
        (8, "switch", 800, 1, 1700),
    ],
    # today's two-level platform: NVLink-class dim1, 100 Gb/s NIC dim2
    "2D-current": [(16, "switch", 200, 6, 700), (64, "switch", 100, 1, 1700)],
    # small latency-free instance for hand-checkable examples
    "4x4-2to1": [(4, "switch", 200, 1, 0), (4, "switch", 100, 1, 0)],
}

NEXT_GEN_PRESETS = (
    "2D-SW_SW",
    "3D-SW_SW_SW_homo",
    "3D-SW_SW_SW_hetero",
    "3D-FC_Ring_SW",
    "4D-Ring_SW_SW_SW",
    "4D-Ring_FC_Ring_SW",
)
PRESETS = tuple(_PRESET_TABLE)


def preset(name: str) -> Topology:
    try:
        rows = _PRESET_TABLE[name]
    except KeyError:
        raise TopologyError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None
    return Topology(tuple(make_dim(i, *row) for i, row in enumerate(rows, start=1)), name=name)


def resolve_topology(spec: str) -> Topology:
    """Preset name or path to a JSON file."""
    if spec in _PRESET_TABLE:
        return preset(spec)
    try:
        with open(spec, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise TopologyError(f"cannot read topology {spec!r} ({exc.strerror}); it is not a preset either "
                            f"({', '.join(PRESETS)})") from None
    topo = load_topology(text)
    if not topo.name:
        topo = Topology(topo.dims, name=spec)
    return topo
