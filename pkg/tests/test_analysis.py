import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stardamp.analysis import (ObservabilityReport, contraction_prediction, decay_fit,
                               energy_identity, energy_identity_residual, estimate_c, is_monotone,
                               lemma31_check, measured_factor, observability_ratio)
from stardamp.dynamics import SimParams, evolve
from stardamp.graph import GraphState, build_star, indicator_damping, sample_function
from stardamp.initial import gaussian_packets
from stardamp.norms import EnergyTrace, energy_trace


def synthetic(f, t):
    E = f(t)
    return EnergyTrace(t, E[None, :], E, np.zeros_like(t))


def report(ratio, T=10.0, R=5.0):
    return ObservabilityReport(ratio, 1.0, 0.0, ratio, T, R, False)


def test_decay_fit_exact_exponential():
    t = np.linspace(0, 20, 401)
    fit = decay_fit(synthetic(lambda t: 3.0 * np.exp(-0.7 * t), t), window=(0.0, 20.0))
    assert fit.c_fit == pytest.approx(3.0, rel=1e-10)
    assert fit.omega_fit == pytest.approx(0.7, rel=1e-10)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-10)
    fit = decay_fit(synthetic(lambda t: 3.0 * np.exp(-0.7 * t), t))
    assert fit.window == (2.0, 20.0) and fit.omega_fit == pytest.approx(0.7, rel=1e-10)


def test_decay_fit_power_law_counter_model():
    t = np.linspace(0, 20, 401)
    fit = decay_fit(synthetic(lambda t: 1.0 / (1.0 + t), t))
    assert fit.model_comparison > 0


def test_decay_fit_errors():
    t = np.linspace(0, 1, 11)
    with pytest.raises(ValueError, match="nonpositive"):
        decay_fit(synthetic(lambda t: 1.0 - t, t), window=(0.5, 1.0))
    with pytest.raises(ValueError, match="3 samples"):
        decay_fit(synthetic(np.exp, t), window=(0.0, 0.1))
    with pytest.raises(ValueError, match="outside"):
        decay_fit(synthetic(np.exp, t), window=(0.0, 2.0))


def test_estimate_c_examples():
    assert estimate_c([report(0.3)]) == 0.3
    assert estimate_c([report(0.5), report(0.2), report(0.9)]) == 0.2
    degenerate = ObservabilityReport(0.0, 0.0, 0.0, None, 10.0, 5.0, True)
    assert estimate_c([degenerate, report(0.4)]) == 0.4
    with pytest.raises(ValueError, match="degenerate"):
        estimate_c([degenerate])
    with pytest.raises(ValueError, match="mix"):
        estimate_c([report(0.1), report(0.2, T=5.0)])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(1e-6, 10.0), min_size=1, max_size=20), st.floats(1e-6, 10.0))
def test_estimate_c_monotone_under_additions(ratios, extra):
    base = estimate_c([report(r) for r in ratios])
    assert estimate_c([report(r) for r in ratios] + [report(extra)]) <= base


def test_contraction_prediction_example():
    factor, omega = contraction_prediction(0.5, 0.5, 2.0)
    assert factor == 0.5
    assert omega == pytest.approx(math.log(2) / 2, rel=1e-15)
    assert contraction_prediction(0.5, 0.5, 1e12)[0] < 1e-11
    with pytest.raises(ValueError):
        contraction_prediction(0.0, 1.0, 1.0)


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-4, 1e3), st.floats(1e-4, 1e3), st.floats(1e-3, 1e3))
def test_contraction_factor_in_unit_interval(c, a0, T):
    f, w = contraction_prediction(c, a0, T)
    assert 0 < f < 1 and w > 0


@pytest.fixture(scope="module")
def run():
    g = build_star(3, 20.0, 0.05)
    d = indicator_damping(g, 1.0, 5.0)
    phi = gaussian_packets(g, 0)
    return g, d, evolve(phi, g, d, SimParams(-1.0, 3, 0.01, 20.0))


def test_zero_data_reports(run):
    g, d, _ = run
    tr = evolve(GraphState.zeros(g), g, d, SimParams(-1.0, 3, 0.05, 2.0))
    ident = energy_identity(tr, d)
    assert ident.value == 0 and ident.absolute
    l31 = lemma31_check(tr, d, 1.0)
    assert (l31.lhs, l31.rhs, l31.slack) == (0.0, 0.0, 0.0)
    obs = observability_ratio(tr, d, 1.0)
    assert obs.degenerate and obs.ratio is None


def test_identity_without_damping_is_mass_drift():
    g = build_star(3, 10.0, 0.05)
    tr = evolve(gaussian_packets(g, 1), g, None, SimParams(1.0, 3, 0.01, 5.0))
    assert energy_identity_residual(tr) < 1e-8


def test_identity_and_monotone_on_default_run(run):
    g, d, tr = run
    assert energy_identity_residual(tr, d) <= 5e-3
    assert is_monotone(tr.step_mass)
    assert not is_monotone([1.0, 1.0 + 1e-9])


def test_lemma31_on_edge_one_data():
    g = build_star(3, 20.0, 0.05)
    d = indicator_damping(g, 1.0, 5.0)
    phi = sample_function(g, [lambda x: np.exp(-(x - 8.0) ** 2 + 1j * x) - np.exp(-64.0),
                              lambda x: 0 * x - np.exp(-64.0) + 0j,
                              lambda x: 0 * x - np.exp(-64.0) + 0j])
    tr = evolve(phi, g, d, SimParams(-1.0, 3, 0.01, 5.0))
    l31 = lemma31_check(tr, d, 5.0)
    assert l31.holds and l31.eps_quad > 0
    assert l31.slack >= -l31.eps_quad


def test_lemma31_validation(run):
    g, d, tr = run
    from stardamp.graph import DampingProfile
    with pytest.raises(ValueError):
        lemma31_check(tr, DampingProfile(d.values, d.vertex_by_edge, 1.0, 25.0), 1.0)


def test_observability_far_data_ratio_large():
    g = build_star(3, 20.0, 0.05)
    d = indicator_damping(g, 4.0, 5.0)
    phi = sample_function(g, [lambda x: np.exp(-2 * (x - 12.0) ** 2) + 0j] + [lambda x: 0j * x] * 2,
                          tol=1e-9)
    tr = evolve(phi, g, d, SimParams(-1.0, 3, 0.01, 1.0))
    obs = observability_ratio(tr, d, 1.0)
    assert obs.ratio > 1
    assert obs.lhs >= 0 and obs.rhs_branch >= 0 and obs.rhs_local >= 0


def test_decay_on_default_run(run):
    g, d, tr = run
    et = energy_trace(tr, d)
    fit = decay_fit(et)
    assert fit.omega_fit > 0
    assert measured_factor(et, 10.0) == pytest.approx(et.total_energy[1000] / et.total_energy[0])
