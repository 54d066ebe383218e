import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stardamp.dynamics import Trajectory, free_trajectory
from stardamp.graph import GraphState, build_star, indicator_damping, sample_function
from stardamp.initial import gaussian_packets
from stardamp.norms import (INF, EnergyTrace, admissible_q, energy_trace, exponents, l2_energy,
                            lp_norm, lp_norm_series, mixed_norm, triple_norm)

from conftest import random_state


def detached_one(g):
    # u = 1 on the interior of edge 1 only; the vertex is 0
    edges = np.zeros((g.n_edges, g.points_per_edge), complex)
    edges[0, :-1] = 1.0
    return GraphState(0.0, edges)


def test_zero_state_norms(small):
    z = GraphState.zeros(small)
    per, tot = l2_energy(z, small)
    assert tot == 0 and not np.any(per)
    assert lp_norm(z, small, 4) == 0 and lp_norm(z, small, INF) == 0


def test_constant_on_one_edge_tends_to_length():
    errs = []
    for dx in (0.1, 0.05, 0.025):
        g = build_star(3, 10.0, dx)
        per, tot = l2_energy(detached_one(g), g)
        errs.append(abs(per[0] - 10.0))
        assert per[1] == per[2] == 0
        assert lp_norm(detached_one(g), g, 4) == pytest.approx(10.0 ** 0.25, rel=2 * dx)
    assert errs[0] > errs[1] > errs[2]


def test_antisymmetric_sine_energies():
    g = build_star(3, 10.0, 0.05)
    k = np.pi / g.L
    s = sample_function(g, [lambda x: 0 * x, lambda x: np.sin(k * x), lambda x: -np.sin(k * x)])
    per, tot = l2_energy(s, g)
    # direct trapezoid oracle on [0, L]
    x = np.linspace(0, g.L, g.points_per_edge + 1)
    f = np.sin(k * x) ** 2
    oracle = g.dx * (f.sum() - 0.5 * (f[0] + f[-1]))
    np.testing.assert_allclose(per, [0.0, oracle, oracle], rtol=1e-13)
    assert tot == pytest.approx(10.0, rel=1e-3)


def test_lp_definitions(small, rng):
    s = random_state(small, rng)
    _, tot = l2_energy(s, small)
    assert lp_norm(s, small, 2) ** 2 == pytest.approx(tot, rel=1e-12)
    assert lp_norm(s, small, INF) == pytest.approx(max(abs(s.vertex), np.abs(s.edges).max()))
    with pytest.raises(ValueError):
        lp_norm(s, small, 0.5)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6), st.complex_numbers(min_magnitude=1e-3, max_magnitude=1e3,
                                                   allow_nan=False, allow_infinity=False),
       st.sampled_from([1, 2, 3, 4.5, 6, INF]))
def test_norm_homogeneity(seed, c, p):
    g = build_star(3, 2.0, 0.1)
    s = random_state(g, np.random.default_rng(seed))
    assert lp_norm(s.scaled(c), g, p) == pytest.approx(abs(c) * lp_norm(s, g, p), rel=1e-12)


def test_exponents_exact():
    e3, e5 = exponents(3), exponents(5)
    assert (e3.r, e3.r_prime, e3.theta) == (8, Fraction(8, 7), Fraction(1, 2))
    assert (e5.r, e5.r_prime, e5.theta) == (6, Fraction(6, 5), 0)
    for a in range(3, 30, 2):
        e = exponents(a)
        assert isinstance(e.r, Fraction)
        assert 1 / e.r + 1 / e.r_prime == 1
        assert e.theta + Fraction(a - 1, 4) == 1
    for bad in (2, 1, 4):
        with pytest.raises(ValueError):
            exponents(bad)


@settings(max_examples=60, deadline=None)
@given(st.fractions(min_value=Fraction(201, 100), max_value=1000))
def test_admissible_roundtrip(p):
    q = admissible_q(p)
    assert Fraction(2) / q == Fraction(1, 2) - 1 / Fraction(p)


def test_admissible_endpoints():
    assert admissible_q(6) == 6
    assert admissible_q(4) == 8
    assert admissible_q(2) == math.inf
    assert admissible_q(INF) == 4
    with pytest.raises(ValueError):
        admissible_q(1.5)


def test_mixed_norm_constant_in_time(small, rng):
    s = random_state(small, rng)
    n, dt = 21, 0.05
    traj = Trajectory(small, np.full(n, s.vertex), np.broadcast_to(s.edges, (n,) + s.edges.shape), dt)
    T = (n - 1) * dt
    for p, q in ((6, 6), (4, 8), (2, 3)):
        assert mixed_norm(traj, p, q) == pytest.approx(T ** (1 / q) * lp_norm(s, small, p),
                                                       rel=1e-12)
    assert mixed_norm(traj, 2, INF) == pytest.approx(lp_norm(s, small, 2), rel=1e-14)
    assert mixed_norm(traj, 3, INF) == lp_norm_series(traj, 3).max()


def test_mixed_norm_zero_and_empty(small):
    z = Trajectory(small, np.zeros(3), np.zeros((3, 3, 100)), 0.1)
    assert mixed_norm(z, 6, 6) == 0 and triple_norm(z, 3) == 0
    with pytest.raises(ValueError):
        mixed_norm(Trajectory(small, np.zeros(0), np.zeros((0, 3, 100)), 0.1), 6, 6)


def test_triple_norm_parts(small, rng):
    s = random_state(small, rng)
    tr = free_trajectory(s, small, 0.5, 0.05)
    sup2 = lp_norm_series(tr, 2).max()
    assert triple_norm(tr, 3) >= sup2
    assert triple_norm(tr, 3) == pytest.approx(sup2 + mixed_norm(tr, 4, 8), rel=1e-14)
    single = Trajectory(small, np.array([s.vertex]), s.edges[None], 0.05)
    assert triple_norm(single, 5) == pytest.approx(lp_norm(s, small, 2))


def test_mixed_norm_refinement_stable():
    vals = []
    for dt in (0.02, 0.01):
        g = build_star(3, 20.0, 0.05)
        phi = gaussian_packets(g, 2)
        vals.append(mixed_norm(free_trajectory(phi, g, 2.0, dt), 6, 6))
    assert abs(vals[0] - vals[1]) / vals[1] < 0.1


def test_energy_trace_invariants_and_csv(tmp_path, small):
    from stardamp.dynamics import SimParams, evolve
    d = indicator_damping(small, 1.0, 5.0)
    phi = gaussian_packets(small, 4)
    tr = energy_trace(evolve(phi, small, d, SimParams(-1.0, 3, 0.02, 2.0)), d)
    np.testing.assert_allclose(tr.per_edge_energy.sum(axis=0), tr.total_energy, rtol=1e-12)
    assert np.all(np.diff(tr.dissipation_integral) >= 0)
    tr.to_csv(tmp_path / "e.csv")
    header = (tmp_path / "e.csv").read_text().splitlines()[0]
    assert header == "t,E_total,E_1,E_2,E_3,dissipation_cumulative"
    back = EnergyTrace.from_csv(tmp_path / "e.csv")
    np.testing.assert_array_equal(back.total_energy, tr.total_energy)
    np.testing.assert_array_equal(back.per_edge_energy, tr.per_edge_energy)
