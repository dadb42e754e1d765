"""Command-line experiment driver. Every command writes CSV (stdout or ``--out``)."""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import re
import sys
from typing import Sequence

from . import __version__
from .collectives import CollectiveKind
from .engine import DeadlockError, EnginePolicy, simulate
from .oracle import SearchSpaceTooLarge, exhaustive_best, ideal_latency
from .provisioning import classify_all, recommend_gbps
from .scheduler import SchedulerConfig, baseline_schedule, cached_themis_schedule
from .topology import NEXT_GEN_PRESETS, PRESETS, Topology, TopologyError, resolve_topology
from .workload import MODES, WorkloadError, collective_time, compare_modes, resolve_workload

DEFAULT_SIZES = ("100MB", "250MB", "500MB", "1GB")
DEFAULT_CPCS = (4, 8, 16, 32, 64, 128, 256, 512)
_UNITS = {"": 1, "b": 1, "kb": 1e3, "mb": 1e6, "gb": 1e9, "tb": 1e12}


def parse_size(text: str) -> float:
    """Decimal byte sizes such as ``256MB`` or ``1.5GB``."""
    m = re.fullmatch(r"\s*([0-9]*\.?[0-9]+(?:[eE][-+]?\d+)?)\s*([kKmMgGtT]?[bB]?)\s*", text)
    if not m:
        raise argparse.ArgumentTypeError(f"bad size {text!r}")
    value = float(m.group(1)) * _UNITS[m.group(2).lower()]
    if not value > 0:
        raise argparse.ArgumentTypeError("size must be positive")
    return value


def _split(values: Sequence[str] | None, default: Sequence[str]) -> list[str]:
    if not values:
        return list(default)
    return [v.strip() for item in values for v in item.split(",") if v.strip()]


def _fingerprint(args: argparse.Namespace) -> str:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out")}
    blob = json.dumps(cfg, sort_keys=True, default=str)
    digest = hashlib.sha256(blob.encode()).hexdigest()[:16]
    return f"# hiercoll {__version__} config {digest} {blob}\n"


def _modes(args) -> list[str]:
    modes = _split(args.mode, MODES)
    for m in modes:
        if m not in MODES:
            raise ValueError(f"unknown mode {m!r}; choose from {', '.join(MODES)}")
    return modes


def _topologies(args, default=NEXT_GEN_PRESETS) -> list[Topology]:
    return [resolve_topology(t) for t in _split(args.topology, default)]


def _policy(args, intra: str | None = None) -> EnginePolicy:
    return EnginePolicy(intra or args.policy, args.concurrency, args.latency_mode)


def run_collective(topology: Topology, kind: CollectiveKind, size: float, cpc: int, mode: str,
                   policy: EnginePolicy):
    """Return ``(makespan, weighted utilization, per-dim busy)`` for one collective."""
    if mode == "Ideal":
        mk = collective_time(kind.value, size, topology, mode, SchedulerConfig(cpc), policy)
        return mk, 1.0, ()
    cfg = SchedulerConfig(cpc)
    if mode == "Baseline":
        scheds = baseline_schedule(kind, topology, size, cpc)
    else:
        scheds = cached_themis_schedule(kind, size, cfg, topology)
    intra = "SCF" if mode == "ThemisSCF" else "FIFO"
    m = simulate(topology, scheds, EnginePolicy(intra, policy.max_concurrency, policy.latency_mode), record=False)
    return m.makespan, m.weighted_utilization, m.busy


def cmd_sweep(args, w) -> None:
    kind = CollectiveKind.parse(args.collective)
    sizes = [parse_size(s) for s in _split(args.size, DEFAULT_SIZES)]
    cpc = args.cpc[0] if args.cpc else 64
    modes = _modes(args)
    policy = _policy(args)
    w.writerow(["topology", "size_bytes", "mode", "makespan_s", "weighted_utilization", "speedup_vs_baseline",
                "ideal_s", "busy_s_per_dim"])
    for topo in _topologies(args):
        for size in sizes:
            ideal = ideal_latency(size, topo)
            rows = {m: run_collective(topo, kind, size, cpc, m, policy) for m in modes}
            base = rows["Baseline"][0] if "Baseline" in rows else run_collective(topo, kind, size, cpc, "Baseline",
                                                                                 policy)[0]
            for m, (mk, util, busy) in rows.items():
                w.writerow([topo.name or topo.describe(), size, m, mk, util, base / mk, ideal,
                            ";".join(repr(b) for b in busy)])


def cmd_sensitivity(args, w) -> None:
    kind = CollectiveKind.parse(args.collective)
    size = parse_size(_split(args.size, ("100MB",))[0])
    cpcs = args.cpc or list(DEFAULT_CPCS)
    modes = [m for m in _modes(args) if m != "Ideal"] if not args.mode else _modes(args)
    policy = _policy(args)
    w.writerow(["topology", "cpc", "mode", "makespan_s", "weighted_utilization"])
    for topo in _topologies(args, ("3D-SW_SW_SW_hetero", "4D-Ring_FC_Ring_SW")):
        for cpc in cpcs:
            for m in modes:
                mk, util, _ = run_collective(topo, kind, size, cpc, m, policy)
                w.writerow([topo.name or topo.describe(), cpc, m, mk, util])


def cmd_workload(args, w) -> None:
    modes = _modes(args)
    cfg = SchedulerConfig(args.cpc[0] if args.cpc else 64)
    policy = _policy(args)
    w.writerow(["workload", "topology", "mode", "fwd_compute_s", "bwd_compute_s", "exposed_dp_comm_s",
                "exposed_mp_comm_s", "total_s", "normalized_total"])
    for trace in _split(args.trace, ("resnet152",)):
        wl = resolve_workload(trace)
        for topo in _topologies(args):
            reports = compare_modes(wl, topo, modes, cfg, policy)
            ref = reports["Baseline"].total if "Baseline" in reports else None
            for m, r in reports.items():
                w.writerow([wl.name or trace, topo.name or topo.describe(), m, r.fwd_compute, r.bwd_compute,
                            r.exposed_dp_comm, r.exposed_mp_comm, r.total, r.total / ref if ref else ""])


def cmd_oracle(args, w) -> None:
    kind = CollectiveKind.parse(args.collective)
    size = parse_size(_split(args.size, ("256MB",))[0])
    cpc = args.cpc[0] if args.cpc else 4
    policy = _policy(args)
    w.writerow(["topology", "row", "schedule", "makespan_s"])
    for topo in _topologies(args, ("4x4-2to1",)):
        name = topo.name or topo.describe()
        base_policy = EnginePolicy("FIFO", policy.max_concurrency, policy.latency_mode)
        base = simulate(topo, baseline_schedule(kind, topo, size, cpc), base_policy, record=False).makespan
        themis_s = cached_themis_schedule(kind, size, SchedulerConfig(cpc), topo)
        themis = simulate(topo, themis_s, policy, record=False).makespan
        res = exhaustive_best(topo, kind, size, cpc, policy, args.full_space, cap=args.cap)
        w.writerow([name, "baseline", "", base])
        w.writerow([name, "themis", " ".join(s.encode() for s in themis_s), themis])
        w.writerow([name, "optimal", res.best_encoding, res.best_makespan])
        w.writerow([name, "space_size", "", res.space_size])


def cmd_provision(args, w) -> None:
    w.writerow(["topology", "k", "l", "scenario", "ratio", "recommended_bw_gbps_l"])
    for topo in _topologies(args, ("2D-current",)):
        rec = recommend_gbps(topo)
        name = topo.name or topo.describe()
        w.writerow([name, 1, "", "recommendation", "", rec[0]])
        for v in classify_all(topo, args.tolerance):
            w.writerow([name, v.k, v.l, v.scenario.value, v.ratio, rec[v.l - 1]])


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hiercoll", description="Hierarchical collective scheduling experiments.")
    p.add_argument("--version", action="version", version=f"hiercoll {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--topology", action="append",
                        help=f"preset name or JSON file; repeat or comma-separate (presets: {', '.join(PRESETS)})")
        sp.add_argument("--mode", action="append", help=f"one or more of {', '.join(MODES)}")
        sp.add_argument("--size", action="append", help="collective size, e.g. 100MB or 1GB")
        sp.add_argument("--cpc", type=int, action="append", help="chunks per collective")
        sp.add_argument("--policy", default="FIFO", choices=("FIFO", "SCF"),
                        help="intra-dimension policy where the mode does not fix it")
        sp.add_argument("--concurrency", type=int, default=1, help="stages served at once per dimension")
        sp.add_argument("--latency-mode", default="pipelined", choices=("pipelined", "serial"))
        sp.add_argument("--collective", default="AllReduce")
        sp.add_argument("--out", help="output CSV path (default stdout)")
        sp.add_argument("--seed", type=int, default=0, help="reserved; every component is deterministic")
        return sp

    common(sub.add_parser("sweep", help="makespan and utilization across sizes and modes")).set_defaults(
        func=cmd_sweep)
    common(sub.add_parser("sensitivity", help="utilization versus chunks per collective")).set_defaults(
        func=cmd_sensitivity)
    sp = common(sub.add_parser("workload", help="training-iteration decomposition"))
    sp.add_argument("--trace", action="append", help="bundled trace name or trace file")
    sp.set_defaults(func=cmd_workload)
    sp = common(sub.add_parser("oracle", help="baseline, greedy and exhaustive optimum on a tiny instance"))
    sp.add_argument("--full-space", action="store_true", help="do not tie all-gather order to reduce-scatter")
    sp.add_argument("--cap", type=int, default=10**6, help="largest schedule space to enumerate")
    sp.set_defaults(func=cmd_oracle, policy="SCF")
    sp = common(sub.add_parser("provision", help="bandwidth-balance verdict per dimension pair"))
    sp.add_argument("--tolerance", type=float, default=0.01)
    sp.set_defaults(func=cmd_provision)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    buf = io.StringIO()
    try:
        buf.write(_fingerprint(args))
        args.func(args, csv.writer(buf, lineterminator="\n"))
    except (TopologyError, WorkloadError, SearchSpaceTooLarge, DeadlockError, ValueError, OSError) as exc:
        print(f"hiercoll {args.command}: error: {exc}", file=sys.stderr)
        return 2
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return 0


if __name__ == "__main__":
    sys.exit(main())
