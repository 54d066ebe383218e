import json
import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stardamp.dynamics import SimParams, Trajectory, evolve, free_trajectory, linear_step
from stardamp.duhamel import (MAX_PICARD_STEPS, HorizonInputs, PicardReport, critical_condition,
                              forcing, local_time_horizon, picard_map, picard_solve,
                              strichartz_quotient, triple_distance)
from stardamp.graph import GraphError, GraphState, build_star, indicator_damping, no_damping
from stardamp.initial import gaussian_packets
from stardamp.norms import INF, lp_norm_series, triple_norm

from conftest import random_state


@pytest.fixture
def coarse():
    return build_star(3, 20.0, 0.2)


def direct_duhamel(u, phi, g, d, lam, alpha):
    """Independent O(n_t^2) evaluation: each term propagated on its own."""
    dt = u.dt_stored
    n_t = len(u)
    fv, fe = forcing(u.vertex, u.edges, d, lam, alpha)
    out_v = np.empty(n_t, complex)
    out_e = np.zeros_like(u.edges)
    for n in range(n_t):
        acc = GraphState.zeros(g)
        for k in range(n + 1):
            w = 0.5 if k in (0, n) else 1.0
            if n == 0:
                w = 0.0
            edges = fe[k].copy()
            edges[:, -1] = 0
            s = GraphState(fv[k], edges)
            for _ in range(n - k):
                s = linear_step(s, g, dt)
            acc = GraphState(acc.vertex + w * s.vertex, acc.edges + w * s.edges)
        free = phi
        for _ in range(n):
            free = linear_step(free, g, dt)
        out_v[n] = free.vertex + 1j * dt * acc.vertex
        out_e[n] = free.edges + 1j * dt * acc.edges
    return out_v, out_e


def test_picard_map_matches_direct_double_sum():
    g = build_star(3, 4.0, 0.25)
    d = indicator_damping(g, 1.0, 2.0)
    rng = np.random.default_rng(5)
    phi = random_state(g, rng, 0.3)
    p = SimParams(-1.0, 3, 0.05, 0.5)
    u = free_trajectory(random_state(g, rng, 0.3), g, 0.5, 0.05)
    got = picard_map(u, phi, g, d, p)
    ov, oe = direct_duhamel(u, phi, g, d, p.lam, p.alpha)
    np.testing.assert_allclose(got.vertex, ov, rtol=0, atol=1e-13)
    np.testing.assert_allclose(got.edges, oe, rtol=0, atol=1e-13)


def test_picard_map_trivial_cases(coarse, rng):
    p0 = SimpleNamespace(lam=0.0, alpha=3)
    u = free_trajectory(random_state(coarse, rng), coarse, 0.5, 0.05)
    zero = picard_map(u, GraphState.zeros(coarse), coarse, no_damping(coarse), p0)
    assert not np.any(zero.edges) and not np.any(zero.vertex)
    phi = gaussian_packets(coarse, 0)
    p = SimParams(-1.0, 3, 0.05, 0.5)
    u0 = Trajectory(coarse, np.zeros(11), np.zeros((11, 3, 100)), 0.05)
    free = free_trajectory(phi, coarse, 0.5, 0.05)
    out = picard_map(u0, phi, coarse, indicator_damping(coarse, 1.0, 5.0), p)
    np.testing.assert_allclose(out.edges, free.edges, rtol=0, atol=1e-15)


def test_picard_map_grid_mismatch(coarse):
    other = build_star(3, 20.0, 0.1)
    u = free_trajectory(gaussian_packets(other, 0), other, 0.1, 0.05)
    with pytest.raises(GraphError):
        picard_map(u, gaussian_packets(coarse, 0), coarse, None, SimParams(-1.0, 3, 0.05, 0.1))


def test_evolve_is_near_fixed_point():
    # |||evolve - Phi(evolve)||| shrinks like dt^2 (it is the split-step defect)
    res = []
    for dt in (0.05, 0.025):
        g = build_star(3, 20.0, 0.2)
        d = indicator_damping(g, 1.0, 5.0)
        phi = gaussian_packets(g, 0, amplitude=0.5)
        p = SimParams(-1.0, 3, dt, 0.5)
        u = evolve(phi, g, d, p)
        res.append(triple_distance(picard_map(u, phi, g, d, p), u, 3) / triple_norm(u, 3))
    assert res[0] < 1e-3
    assert 3.0 < res[0] / res[1] < 5.0


def test_picard_zero_data(coarse):
    u, rep = picard_solve(GraphState.zeros(coarse), coarse, None, SimParams(-1.0, 3, 0.05, 0.5))
    assert rep.converged and rep.iterates_used == 1
    assert rep.final_residual == 0.0
    assert not np.any(u.edges)


def test_picard_small_data_converges(coarse):
    d = indicator_damping(coarse, 1.0, 5.0)
    phi = gaussian_packets(coarse, 0, amplitude=0.1)
    p = SimParams(-1.0, 3, 0.05, 0.5)
    u, rep = picard_solve(phi, coarse, d, p, tol=1e-10)
    assert rep.converged and not rep.diverged
    assert rep.final_residual <= 1e-10
    assert all(r < 1 for r in rep.contraction_ratios)
    ref = evolve(phi, coarse, d, p)
    gap = lp_norm_series(u - ref, 2).max() / lp_norm_series(ref, 2).max()
    assert gap < 1e-3
    # converged output really satisfies the residual bound
    assert triple_distance(picard_map(u, phi, coarse, d, p), u, 3) <= 1e-9


def test_picard_large_data_diverges(coarse):
    phi = gaussian_packets(coarse, 0, amplitude=10.0)
    p = SimParams(1.0, 3, 0.05, 2.0)
    _, rep = picard_solve(phi, coarse, None, p, max_iter=30)
    assert not rep.converged
    assert rep.diverged
    assert rep.contraction_ratios and rep.contraction_ratios[-1] >= 1.0


def test_picard_guard(coarse):
    with pytest.raises(ValueError, match="guard"):
        picard_solve(gaussian_packets(coarse, 0), coarse, None,
                     SimParams(-1.0, 3, 0.001, (MAX_PICARD_STEPS + 1) * 0.001))


def test_picard_report_json(tmp_path):
    rep = PicardReport(2, [0.1, 0.01], [0.1], True, False, 0.01)
    rep.to_json(tmp_path / "r.json")
    back = json.loads((tmp_path / "r.json").read_text())
    assert back["converged"] is True and back["contraction_ratios"] == [0.1]
    assert PicardReport().to_dict()["final_residual"] is None


def test_horizon_worked_examples():
    assert local_time_horizon(HorizonInputs(1.0, 0.0, 3)) == 0.5
    assert local_time_horizon(HorizonInputs(1.0, 1.0, 5)) == 0.0
    assert local_time_horizon(HorizonInputs(1.0, 0.0, 5)) == 1.0 / 3.0
    with pytest.raises(ValueError):
        HorizonInputs(0.0, 1.0, 3)
    with pytest.raises(ValueError):
        local_time_horizon(HorizonInputs(1.0, 1.0, 7))


@settings(max_examples=60, deadline=None)
@given(st.floats(0.05, 5.0), st.floats(0.0, 3.0))
def test_horizon_alpha3_matches_quadratic_root(C, m):
    # alpha = 3, theta = 1/2: with s = sqrt(T), 2C s^2 + 8 C^3 m^2 s - 1 = 0
    B = 8 * C ** 3 * m ** 2
    s = 2.0 / (B + math.sqrt(B * B + 8 * C))  # cancellation-free root
    assert local_time_horizon(HorizonInputs(C, m, 3)) == pytest.approx(s * s, rel=1e-12,
                                                                        abs=1e-300)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.05, 3.0), st.floats(0.0, 2.0), st.floats(0.0, 1.0), st.sampled_from([3, 5]))
def test_horizon_monotone(C, m, bump, alpha):
    h = local_time_horizon(HorizonInputs(C, m, alpha))
    assert local_time_horizon(HorizonInputs(C, m + bump, alpha)) <= h
    assert local_time_horizon(HorizonInputs(C + bump, m, alpha)) <= h


@settings(max_examples=80, deadline=None)
@given(st.floats(0.01, 2.0), st.floats(0.0, 2.0))
def test_critical_horizon_positive_iff_small(C, m):
    h = local_time_horizon(HorizonInputs(C, m, 5))
    assert (h > 0) == (critical_condition(C, m) < 1)


def test_strichartz_quotient_basics(coarse):
    phi = gaussian_packets(coarse, 3)
    q2 = strichartz_quotient(phi, coarse, 2, INF, 2.0, 0.05)
    assert abs(q2 - 1.0) <= 1e-12
    a = strichartz_quotient(phi, coarse, 6, 6, 2.0, 0.05)
    b = strichartz_quotient(phi.scaled(2.0), coarse, 6, 6, 2.0, 0.05)
    assert a == pytest.approx(b, rel=1e-12) and math.isfinite(a)
    with pytest.raises(ValueError, match="admissible"):
        strichartz_quotient(phi, coarse, 6, 5, 2.0, 0.05)
    with pytest.raises(ValueError, match="zero"):
        strichartz_quotient(GraphState.zeros(coarse), coarse, 4, 8, 2.0, 0.05)
