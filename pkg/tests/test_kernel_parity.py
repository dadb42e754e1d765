import os
import subprocess
import sys

import pytest
from hypothesis import given, strategies as st

from conftest import AR
from hiercoll import _kernel, _kernel_py
from hiercoll.engine import EnginePolicy, simulate
from hiercoll.scheduler import SchedulerConfig, baseline_schedule, intra_dim_order, themis_schedule
from hiercoll.topology import NEXT_GEN_PRESETS, Topology, make_dim, preset

compiled = pytest.mark.skipif("compiled" not in _kernel.KERNELS, reason="compiled kernel not built")


def both(topo, scheds, policy, order=None):
    a = simulate(topo, scheds, policy, order, kernel=_kernel.KERNELS["python"])
    b = simulate(topo, scheds, policy, order, kernel=_kernel.KERNELS["compiled"])
    return a, b


@compiled
@pytest.mark.parametrize("name", NEXT_GEN_PRESETS)
@pytest.mark.parametrize("policy", ["FIFO", "SCF"])
def test_compiled_kernel_is_bit_identical_on_presets(name, policy):
    topo = preset(name)
    a, b = both(topo, themis_schedule(AR, 1e9, SchedulerConfig(64), topo), EnginePolicy(policy))
    assert a.op_start == b.op_start and a.op_end == b.op_end and a.start_order == b.start_order


topos = st.lists(
    st.tuples(st.sampled_from([2, 4, 8]), st.sampled_from(["ring", "switch", "fc"]), st.floats(10, 1000),
              st.sampled_from([0, 20, 700])),
    min_size=1, max_size=4,
).map(lambda rows: Topology(tuple(make_dim(i, p, k, bw, 1, lat) for i, (p, k, bw, lat) in enumerate(rows, 1))))


@compiled
@given(topos, st.integers(1, 20), st.integers(1, 5), st.sampled_from(["FIFO", "SCF"]),
       st.sampled_from(["pipelined", "serial"]), st.booleans())
def test_compiled_kernel_is_bit_identical_on_random_runs(topo, cpc, conc, policy, mode, greedy):
    scheds = (themis_schedule(AR, 1e8, SchedulerConfig(cpc), topo) if greedy
              else baseline_schedule(AR, topo, 1e8, cpc))
    a, b = both(topo, scheds, EnginePolicy(policy, conc, mode))
    assert a.op_start == b.op_start and a.op_end == b.op_end


@compiled
def test_compiled_kernel_matches_under_enforced_order_and_deadlock():
    topo = preset("3D-SW_SW_SW_hetero")
    scheds = themis_schedule(AR, 1e8, SchedulerConfig(32), topo)
    order = intra_dim_order(scheds, topo, "SCF")
    a, b = both(topo, scheds, EnginePolicy("FIFO"), order)
    assert a.op_end == b.op_end
    args = (2, [0, 0], [0.0, 0.0], [1.0, 1.0], [0.0, 0.0], [1.0, 1.0], 1, 1, False, [0, 1], [1])
    assert _kernel_py.run(*args)[3] == _kernel.KERNELS["compiled"](*args)[3] == 1


def test_pure_python_can_be_forced():
    code = "from hiercoll import _kernel; print(_kernel.BACKEND)"
    env = dict(os.environ, HIERCOLL_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
