import pytest
from hypothesis import HealthCheck, settings

from hiercoll.collectives import CollectiveKind, Phase
from hiercoll.latency import chunk_load
from hiercoll.topology import Topology, make_dim

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

MB = 1e6
AR = CollectiveKind.ALL_REDUCE
RS = CollectiveKind.REDUCE_SCATTER
AG = CollectiveKind.ALL_GATHER


def two_to_one() -> Topology:
    """4x4, dim1 twice as fast as dim2, no step latency."""
    return Topology((make_dim(1, 4, "switch", 200), make_dim(2, 4, "switch", 100)))


@pytest.fixture
def fig_topo():
    return two_to_one()


@pytest.fixture
def unit(fig_topo):
    return chunk_load(fig_topo.dim(1), Phase.RS, 64 * MB)


ACCEPTANCE_LINES: list[str] = []


def report_criterion(number, title, ok, detail):
    """Record one acceptance line and return ``ok`` so the caller can assert it."""
    line = f"CRITERION {number} {'PASS' if ok else 'FAIL'}: {title} | {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
