"""Time the compiled event loop against the pure-Python one on identical inputs.

    python benchmarks/bench_kernel.py [--cpc 64 256] [--repeat 3]
"""

import argparse
import time

from hiercoll import _kernel
from hiercoll.collectives import CollectiveKind
from hiercoll.engine import EnginePolicy, simulate
from hiercoll.scheduler import SchedulerConfig, themis_schedule
from hiercoll.topology import NEXT_GEN_PRESETS, preset


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def timed(kernel, sink):
    def run(*a):
        t0 = time.perf_counter()
        out = kernel(*a)
        sink.append(time.perf_counter() - t0)
        return out
    return run


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cpc", type=int, nargs="+", default=[64, 256])
    ap.add_argument("--topology", nargs="+", default=["3D-SW_SW_SW_hetero", "4D-Ring_FC_Ring_SW"],
                    choices=NEXT_GEN_PRESETS)
    ap.add_argument("--policy", default="SCF", choices=("FIFO", "SCF"))
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    if "compiled" not in _kernel.KERNELS:
        raise SystemExit("compiled kernel not built; reinstall without HIERCOLL_NO_EXT")
    py, cy = _kernel.KERNELS["python"], _kernel.KERNELS["compiled"]
    print(f"{'topology':20s} {'cpc':>5s} {'ops':>6s} {'py_sim_s':>9s} {'c_sim_s':>9s} {'sim_x':>6s} "
          f"{'py_loop_s':>10s} {'c_loop_s':>10s} {'loop_x':>7s} same")
    for name in args.topology:
        topo = preset(name)
        for cpc in args.cpc:
            scheds = themis_schedule(CollectiveKind.ALL_REDUCE, 1e9, SchedulerConfig(cpc), topo)
            pol = EnginePolicy(args.policy)
            lp, lc = [], []
            tp, mp = best_of(lambda: simulate(topo, scheds, pol, record=False, kernel=timed(py, lp)), args.repeat)
            tc, mc = best_of(lambda: simulate(topo, scheds, pol, record=False, kernel=timed(cy, lc)), args.repeat)
            same = mp.op_end == mc.op_end
            print(f"{name:20s} {cpc:5d} {len(mp.ops):6d} {tp:9.4f} {tc:9.4f} {tp / tc:5.1f}x "
                  f"{min(lp):10.5f} {min(lc):10.5f} {min(lp) / min(lc):6.1f}x {same}")


if __name__ == "__main__":
    main()
