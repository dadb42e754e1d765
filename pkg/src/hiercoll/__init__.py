"""Chunked hierarchical collective scheduling and simulation."""

__version__ = "0.1.0"

from .collectives import CollectiveKind, Phase
from .engine import DeadlockError, EnginePolicy, RunMetrics, activity_rate, simulate, weighted_utilization
from .latency import DimLatencyParams, chunk_load, fixed_delay, stage_duration
from .oracle import OracleResult, exhaustive_best, ideal_latency
from .provisioning import ProvisioningVerdict, Scenario, classify, classify_all, recommend
from .scheduler import (
    ChunkSchedule,
    DimLoadTracker,
    SchedulerConfig,
    baseline_schedule,
    intra_dim_order,
    themis_schedule,
)
from .topology import DimKind, NetworkDim, Topology, TopologyError, load_topology, make_dim, preset
from .workload import IterationReport, LayerSpec, Workload, load_workload, run_iteration

__all__ = [
    "ChunkSchedule", "CollectiveKind", "DeadlockError", "DimKind", "DimLatencyParams", "DimLoadTracker",
    "EnginePolicy", "IterationReport", "LayerSpec", "NetworkDim", "OracleResult", "Phase",
    "ProvisioningVerdict", "RunMetrics", "Scenario", "SchedulerConfig", "Topology", "TopologyError",
    "Workload", "activity_rate", "baseline_schedule", "chunk_load", "classify", "classify_all",
    "exhaustive_best", "fixed_delay", "ideal_latency", "intra_dim_order", "load_topology", "load_workload",
    "make_dim", "preset", "recommend", "run_iteration", "simulate", "stage_duration", "themis_schedule",
    "weighted_utilization",
]
