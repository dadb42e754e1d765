import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import AG, AR, MB, RS
from hiercoll import _kernel_py
from hiercoll.collectives import Phase
from hiercoll.engine import (
    ChunkOp, DeadlockError, EnginePolicy, ScheduleMismatchError, activity_rate, activity_to_csv, expand_ops,
    metrics_to_csv, simulate, weighted_utilization,
)
from hiercoll.latency import chunk_load
from hiercoll.scheduler import ChunkSchedule, SchedulerConfig, baseline_schedule, themis_schedule
from hiercoll.topology import Topology, aggregate_bw, make_dim, preset
from reference_sim import reference_makespan


def test_worked_example_baseline_timeline(fig_topo, unit):
    m = simulate(fig_topo, baseline_schedule(AR, fig_topo, 256 * MB, 4))
    assert m.makespan / unit == pytest.approx(8.0)
    assert m.busy[1] / unit == pytest.approx(4.0)
    assert m.busy[0] / unit == pytest.approx(8.0)
    # dim1 serves RS of chunks 0..3 back to back, then the AG stages
    starts = sorted((s / unit, op.chunk_id, op.dim_index, op.phase.value)
                    for s, op in zip(m.op_start, m.ops) if op.dim_index == 1)
    assert [round(s, 9) for s, *_ in starts] == [0, 1, 2, 3, 4, 5, 6, 7]


def test_worked_example_greedy_with_scf_beats_baseline(fig_topo, unit):
    s = themis_schedule(AR, 256 * MB, SchedulerConfig(4), fig_topo)
    m = simulate(fig_topo, s, EnginePolicy("SCF"))
    assert m.makespan / unit == pytest.approx(7.0)


def test_expand_ops_tracks_resident_size(fig_topo):
    ops = expand_ops(fig_topo, ChunkSchedule(0, (1, 2), (2, 1), 64 * MB))
    assert [o.bytes_before / MB for o in ops] == pytest.approx([64, 16, 4, 16])
    assert [o.phase for o in ops] == [Phase.RS, Phase.RS, Phase.AG, Phase.AG]
    assert isinstance(ops[0], ChunkOp) and ops[0].duration(2) == pytest.approx(2 * ops[0].byte_time)


def test_two_equal_concurrent_stages_finish_together_at_double_time():
    topo = Topology((make_dim(1, 4, "ring", 100, 1, 500),))
    s = baseline_schedule(RS, topo, 2e6, 2)
    m = simulate(topo, s, EnginePolicy(max_concurrency=2, latency_mode="serial"))
    one = chunk_load(topo.dim(1), Phase.RS, 1e6)
    assert m.op_end[0] == m.op_end[1] == pytest.approx(3 * 500e-9 + 2 * one)


def test_membership_change_reprorates_remaining_work():
    # chunk0: 4s on dim A then a tiny stage on B; chunk1: 1s on B then 4s on A
    L = 2
    op_dim = [0, 1, 1, 0]
    op_load = [4.0, 1e-3, 1.0, 4.0]
    zeros = [0.0] * 4
    start, end, seq, status = _kernel_py.run(L, op_dim, zeros, op_load, zeros, [1, 1, 1, 1], 2, 2, False)
    assert status == 0
    assert end[0] == pytest.approx(7.0)  # 1s alone, then 3s of work at half rate
    assert end[3] == pytest.approx(8.0)  # 3s of work at half rate by t=7, last 1s alone
    assert start[1] == pytest.approx(7.0)


@pytest.mark.parametrize("scf,first", [(False, 3), (True, 5)])
def test_fifo_serves_earliest_ready_and_scf_smallest_resident(scf, first):
    # dim0 is busy until t=5; op3 (10 bytes) is ready at t=1, op5 (1 byte) at t=2
    L = 2
    op_dim = [0, 1, 1, 0, 2, 0]
    op_load = [5.0, 1.0, 1.0, 1.0, 2.0, 1.0]
    op_key = [1.0, 1.0, 1.0, 10.0, 1.0, 1.0]
    zeros = [0.0] * 6
    start, end, seq, status = _kernel_py.run(L, op_dim, zeros, op_load, zeros, op_key, 3, 1, scf)
    assert status == 0
    assert start[first] == 5.0
    assert end[first] == 6.0


def test_enforced_order_that_cannot_progress_deadlocks(fig_topo):
    s = baseline_schedule(AR, fig_topo, 256 * MB, 2)
    order = {1: [(0, Phase.AG), (0, Phase.RS), (1, Phase.RS), (1, Phase.AG)],
             2: [(0, Phase.RS), (0, Phase.AG), (1, Phase.RS), (1, Phase.AG)]}
    with pytest.raises(DeadlockError, match="chunk 0"):
        simulate(fig_topo, s, enforced_order=order)


def test_enforced_order_must_cover_the_dimension(fig_topo):
    s = baseline_schedule(AR, fig_topo, 256 * MB, 2)
    with pytest.raises(ScheduleMismatchError):
        simulate(fig_topo, s, enforced_order={1: [(0, Phase.RS)], 2: []})


def test_rejects_bad_schedule_sets(fig_topo):
    with pytest.raises(ScheduleMismatchError):
        simulate(fig_topo, [])
    a = ChunkSchedule(0, (1, 2), (2, 1), 1.0)
    with pytest.raises(ScheduleMismatchError):
        simulate(fig_topo, [a, a])
    with pytest.raises(ScheduleMismatchError):
        simulate(fig_topo, [a, ChunkSchedule(1, (1, 2), (), 1.0)])
    with pytest.raises(ValueError):
        EnginePolicy("LIFO")
    with pytest.raises(ValueError):
        EnginePolicy(max_concurrency=0)
    with pytest.raises(ValueError):
        EnginePolicy(latency_mode="eager")


def test_metrics_consistency_and_exports():
    topo = preset("3D-FC_Ring_SW")
    m = simulate(topo, themis_schedule(AR, 1e8, SchedulerConfig(16), topo), EnginePolicy("SCF"))
    bws = [aggregate_bw(d) for d in topo.dims]
    assert m.weighted_utilization == pytest.approx(sum(b * u for b, u in zip(bws, m.busy)) / m.makespan / sum(bws))
    assert weighted_utilization(m, topo) == pytest.approx(m.weighted_utilization)
    for k in range(3):
        last = max(e for e, op in zip(m.op_end, m.ops) if op.dim_index == k + 1)
        assert m.idle[k] == pytest.approx(last - m.busy[k])
        assert 0 < m.utilization(k + 1) <= 1
    assert metrics_to_csv(m, topo).splitlines()[0].startswith("row,dim,busy_s")
    window = m.makespan / 7.5
    rates = activity_rate(m, window)
    assert rates.shape == (3, 8)
    assert np.all((rates >= 0) & (rates <= 1 + 1e-12))
    widths = np.minimum(np.arange(1, 9) * window, m.makespan) - np.arange(8) * window
    assert (rates * widths).sum(axis=1) == pytest.approx(list(m.busy))
    assert len(activity_to_csv(m, window).splitlines()) == 9
    with pytest.raises(ValueError):
        activity_rate(m, 0)


def test_runs_are_repeatable():
    topo = preset("4D-Ring_SW_SW_SW")
    s = themis_schedule(AR, 1e9, SchedulerConfig(64), topo)
    a = simulate(topo, s, EnginePolicy("SCF"))
    b = simulate(topo, s, EnginePolicy("SCF"))
    assert a == b and a.op_end == b.op_end and a.start_order == b.start_order


tiny_topos = st.lists(
    st.tuples(st.sampled_from([2, 4, 8]), st.sampled_from(["ring", "switch", "fc"]), st.floats(10, 1000),
              st.sampled_from([0, 100, 1700])),
    min_size=1, max_size=3,
).map(lambda rows: Topology(tuple(make_dim(i, p, k, bw, 1, lat) for i, (p, k, bw, lat) in enumerate(rows, 1))))


@st.composite
def instances(draw):
    topo = draw(tiny_topos)
    kind = draw(st.sampled_from([AR, RS, AG]))
    cpc = draw(st.integers(1, 6))
    size = draw(st.floats(1e4, 1e9))
    if draw(st.booleans()):
        scheds = themis_schedule(kind, size, SchedulerConfig(cpc), topo)
    else:
        scheds = baseline_schedule(kind, topo, size, cpc)
    return topo, scheds


@given(instances(), st.sampled_from(["FIFO", "SCF"]), st.sampled_from(["pipelined", "serial"]))
def test_matches_independent_single_server_model(inst, policy, mode):
    topo, scheds = inst
    m = simulate(topo, scheds, EnginePolicy(policy, 1, mode))
    assert m.makespan == pytest.approx(reference_makespan(topo, scheds, policy, mode), rel=1e-9)


@given(instances(), st.integers(1, 4), st.sampled_from(["FIFO", "SCF"]))
def test_run_invariants(inst, conc, policy):
    topo, scheds = inst
    m = simulate(topo, scheds, EnginePolicy(policy, conc))
    L = len(m.ops) // len(scheds)
    for c in range(len(scheds)):
        for s in range(L - 1):  # stages of a chunk run in order
            assert m.op_start[c * L + s + 1] >= m.op_end[c * L + s]
    for k in range(topo.ndims):
        assert m.busy[k] <= m.makespan * (1 + 1e-12)
    assert 0 < m.weighted_utilization <= 1 + 1e-12
    assert m.makespan == max(m.op_end)


@given(instances())
def test_concurrency_one_serves_one_stage_at_a_time_in_serial_mode(inst):
    topo, scheds = inst
    m = simulate(topo, scheds, EnginePolicy("FIFO", 1, "serial"))
    for k in range(1, topo.ndims + 1):
        spans = sorted((s, e) for s, e, op in zip(m.op_start, m.op_end, m.ops) if op.dim_index == k)
        for (s0, e0), (s1, e1) in zip(spans, spans[1:]):
            assert s1 >= e0 - 1e-15
        assert m.busy[k - 1] == pytest.approx(sum(e - s for s, e in spans))
