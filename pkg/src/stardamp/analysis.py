"""Stabilisation diagnostics on computed trajectories.

Checks the mass-dissipation identity, the branch/local energy inequality,
the observability ratio and its ensemble lower bound, the one-period
contraction factor implied by that bound, and exponential decay fits.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .dynamics import Trajectory, steps_for
from .graph import DampingProfile
from .norms import (EnergyTrace, _edge_integrals, dissipation_density,
                    energy_trace, trapezoid)

DEGENERATE_TOL = 1e-14


@dataclass
class IdentityResidual:
    value: float
    absolute: bool  # True when E_u(0) = 0 and the residual is not normalised
    series: np.ndarray  # signed E(t_n) - E(0) + D(t_n)


def energy_identity(traj: Trajectory, d: DampingProfile | None = None) -> IdentityResidual:
    tr = energy_trace(traj, d)
    series = tr.total_energy - tr.total_energy[0] + tr.dissipation_integral
    e0 = tr.total_energy[0]
    if e0 == 0:
        return IdentityResidual(float(np.abs(series).max()), True, series)
    return IdentityResidual(float(np.abs(series).max() / e0), False, series)


def energy_identity_residual(traj: Trajectory, d: DampingProfile | None = None) -> float:
    """Max over stored times of ``|E(t) - E(0) + 2 int_0^t int a|u|^2| / E(0)``.

    Returns the absolute residual when ``E(0) = 0`` (see :func:`energy_identity`
    for the flag).
    """
    return energy_identity(traj, d).value


def is_monotone(step_mass, rtol: float = 1e-12) -> bool:
    m = np.asarray(step_mass)
    return bool(np.all(m[1:] <= m[:-1] * (1.0 + rtol)))


def _local_mass(traj: Trajectory, R: float) -> np.ndarray:
    """``int_0^R |u_1|^2`` per stored state.

    Nodes with ``x <= R`` carry their full cell weight, so this term and the
    ``x > R`` remainder partition the edge-1 mass exactly on the grid.
    """
    g = traj.graph
    w = g.node_weights() * (g.x <= R)
    e1 = traj.edges[:, 0, :]
    return (e1.real ** 2 + e1.imag ** 2) @ w + 0.5 * g.dx * np.abs(traj.vertex) ** 2


def _branch_mass(traj: Trajectory) -> np.ndarray:
    per_edge = _edge_integrals(traj.vertex, traj.edges, traj.graph, 2)
    return per_edge[:, 1:].sum(axis=1)


@dataclass
class LocalMassCheck:
    lhs: float
    rhs: float
    slack: float
    eps_quad: float

    @property
    def holds(self) -> bool:
        return self.slack >= -self.eps_quad


def lemma31_check(traj: Trajectory, d: DampingProfile, t: float) -> LocalMassCheck:
    """Compare ``int_0^t E`` with the branch + local bound.

    ``eps_quad`` is the energy-identity defect at ``t`` divided by
    ``2 alpha0`` (plus roundoff); on this grid that is the only way the
    discrete inequality can fail.
    """
    if not d.alpha0 > 0:
        raise ValueError("alpha0 must be positive")
    if d.R >= traj.graph.L:
        raise ValueError("R must be smaller than L")
    tr = traj.truncated(t)
    dt = tr.dt_stored
    et = energy_trace(tr, d)
    lhs = trapezoid(et.total_energy, dt)
    e0, et_ = et.total_energy[0], et.total_energy[-1]
    rhs = (trapezoid(_branch_mass(tr), dt) + trapezoid(_local_mass(tr, d.R), dt)
           - (et_ - e0) / (2.0 * d.alpha0))
    defect = abs(et_ - e0 + et.dissipation_integral[-1])
    eps = defect / (2.0 * d.alpha0) + 1e-12 * max(lhs, e0 * max(t, 1.0))
    return LocalMassCheck(float(lhs), float(rhs), float(rhs - lhs), float(eps))


@dataclass
class ObservabilityReport:
    lhs: float
    rhs_branch: float
    rhs_local: float
    ratio: float | None
    T: float
    R: float
    degenerate: bool

    def to_dict(self) -> dict:
        return asdict(self)


def observability_ratio(traj: Trajectory, d: DampingProfile, T: float) -> ObservabilityReport:
    """Dissipation functional over ``branch + local`` mass integrals on ``[0, T]``."""
    tr = traj.truncated(T)
    dt = tr.dt_stored
    lhs = trapezoid(dissipation_density(tr, d), dt)
    branch = trapezoid(_branch_mass(tr), dt)
    local = trapezoid(_local_mass(tr, d.R), dt)
    den = branch + local
    degenerate = den <= DEGENERATE_TOL
    return ObservabilityReport(lhs, branch, local, None if degenerate else lhs / den,
                               float(T), float(d.R), bool(degenerate))


def estimate_c(reports: Sequence[ObservabilityReport]) -> float:
    """Smallest ratio over the non-degenerate reports."""
    good = [r for r in reports if not r.degenerate]
    if not good:
        raise ValueError("every observability report is degenerate")
    keys = {(r.T, r.R) for r in good}
    if len(keys) > 1:
        raise ValueError(f"reports mix (T, R) settings: {sorted(keys)}")
    return float(min(r.ratio for r in good))


def contraction_prediction(c_hat: float, alpha0: float, T: float):
    """``(factor, omega)`` with ``C = 1/(2c) + 1/(2 alpha0)`` and ``factor = C/(C+T)``."""
    if not (c_hat > 0 and alpha0 > 0 and T > 0):
        raise ValueError("c_hat, alpha0 and T must be positive")
    C = 1.0 / (2.0 * c_hat) + 1.0 / (2.0 * alpha0)
    factor = C / (C + T)
    return factor, -math.log(factor) / T


@dataclass
class DecayFit:
    c_fit: float
    omega_fit: float
    r_squared: float
    window: tuple
    model_comparison: float  # exponential RSS minus power-law RSS (log space)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["window"] = list(self.window)
        return out


def _linfit(x, y):
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    return coef, float(resid @ resid)


def decay_fit(trace: EnergyTrace, window=None, skip_fraction: float = 0.1) -> DecayFit:
    """Least-squares fit of ``ln E`` against ``t`` (and against ``ln t``).

    The default window drops the first ``skip_fraction`` of the time range.
    """
    t = np.asarray(trace.times, float)
    E = np.asarray(trace.total_energy, float)
    if window is None:
        window = (t[0] + skip_fraction * (t[-1] - t[0]), t[-1])
    t0, t1 = window
    if t0 < t[0] - 1e-12 or t1 > t[-1] + 1e-12 or t1 <= t0:
        raise ValueError(f"window {window} outside trace range [{t[0]}, {t[-1]}]")
    sel = (t >= t0 - 1e-12) & (t <= t1 + 1e-12)
    ts, Es = t[sel], E[sel]
    if ts.size < 3:
        raise ValueError("decay fit needs at least 3 samples in the window")
    if np.any(Es <= 0):
        raise ValueError("nonpositive energy in the fit window")
    y = np.log(Es)
    (slope, icpt), rss = _linfit(ts, y)
    sst = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - rss / sst if sst > 0 else (1.0 if rss == 0 else 0.0)
    if np.any(ts <= 0):
        pl_rss = math.nan
    else:
        _, pl_rss = _linfit(np.log(ts), y)
    return DecayFit(float(math.exp(icpt)), float(-slope), float(min(max(r2, 0.0), 1.0)),
                    (float(t0), float(t1)), float(rss - pl_rss))


def measured_factor(trace: EnergyTrace, T: float) -> float:
    """``E(T) / E(0)`` read off a trace."""
    n = steps_for(T - trace.times[0], trace.times[1] - trace.times[0])
    return float(trace.total_energy[n] / trace.total_energy[0])
