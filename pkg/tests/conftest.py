import numpy as np
import pytest

from stardamp.graph import build_star, indicator_damping
from stardamp.initial import gaussian_packets


@pytest.fixture
def small():
    return build_star(3, 10.0, 0.1)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def default_graph():
    return build_star(3, 20.0, 0.05)


@pytest.fixture(scope="session")
def default_damping(default_graph):
    return indicator_damping(default_graph, 1.0, 5.0)


def random_state(g, rng, scale=1.0):
    from stardamp.graph import GraphState
    interior = rng.normal(size=(g.n_edges, g.points_per_edge - 1)) \
        + 1j * rng.normal(size=(g.n_edges, g.points_per_edge - 1))
    v = complex(rng.normal(), rng.normal())
    return GraphState.from_interior(scale * v, scale * interior)


def packet(g, seed=0, amplitude=1.0):
    return gaussian_packets(g, seed, amplitude)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(RESULTS):
        name, ok, detail = RESULTS[num]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {num:2d}. {name}: {detail}")
