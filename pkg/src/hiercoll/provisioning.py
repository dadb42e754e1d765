"""Bandwidth-provisioning checks between pairs of dimensions.

Under baseline scheduling, dimension ``l`` receives data already shrunk by
every dimension before it. Stages ``k`` and ``l`` take equally long exactly
when ``BW(k) = P_k * ... * P_{l-1} * BW(l)``. The ratio of the two sides
tells which dimension has bandwidth to spare.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass

from .topology import GBPS, Topology, aggregate_bw, required_balanced_bw

DEFAULT_TOLERANCE = 0.01


class Scenario(enum.Enum):
    JUST_ENOUGH = "JustEnough"
    OVER_PROVISIONED = "OverProvisioned"  # dim l has more BW than the baseline can use
    UNDER_PROVISIONED = "UnderProvisioned"  # dim l is the bottleneck


@dataclass(frozen=True)
class ProvisioningVerdict:
    k: int
    l: int
    scenario: Scenario
    ratio: float


def classify(topology: Topology, k: int, l: int, tolerance: float = DEFAULT_TOLERANCE) -> ProvisioningVerdict:
    if not 1 <= k < l <= topology.ndims:
        raise IndexError(f"need 1 <= k < l <= {topology.ndims}, got k={k}, l={l}")
    if tolerance < 0:
        raise ValueError("tolerance must be >= 0")
    shrink = math.prod(topology.sizes[k - 1 : l - 1])
    ratio = aggregate_bw(topology.dim(k)) / (shrink * aggregate_bw(topology.dim(l)))
    if abs(ratio - 1.0) <= tolerance:
        scenario = Scenario.JUST_ENOUGH
    elif ratio < 1.0:
        scenario = Scenario.OVER_PROVISIONED
    else:
        scenario = Scenario.UNDER_PROVISIONED
    return ProvisioningVerdict(k, l, scenario, ratio)


def classify_all(topology: Topology, tolerance: float = DEFAULT_TOLERANCE) -> list[ProvisioningVerdict]:
    D = topology.ndims
    return [classify(topology, k, l, tolerance) for k in range(1, D) for l in range(k + 1, D + 1)]


def recommend(topology: Topology) -> tuple[float, ...]:
    """Per-dimension bandwidth (bytes/s) that balances baseline stages, keeping dim1 fixed."""
    return tuple(required_balanced_bw(topology, k) for k in range(1, topology.ndims + 1))


def recommend_gbps(topology: Topology) -> tuple[float, ...]:
    return tuple(bw / GBPS for bw in recommend(topology))


def verdicts_to_csv(verdicts: list[ProvisioningVerdict], topology: Topology | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "l", "scenario", "ratio", "recommended_bw_l_gbps"])
    rec = recommend_gbps(topology) if topology is not None else None
    for v in verdicts:
        w.writerow([v.k, v.l, v.scenario.value, v.ratio, rec[v.l - 1] if rec else ""])
    return buf.getvalue()
