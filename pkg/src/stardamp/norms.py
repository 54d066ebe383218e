"""L2 mass, Lebesgue and space-time norms, and the Strichartz exponent algebra.

Throughout, "energy" is the squared L2 norm ``E_u = sum_i int |u_i|^2``.
Spatial integrals are trapezoidal with the vertex cell ``N*dx/2`` split
evenly between the edges; time integrals are trapezoidal over the stored
states of a trajectory.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

import numpy as np

from .dynamics import Trajectory
from .graph import DampingProfile, GraphState, StarGraph

INF = math.inf


@dataclass(frozen=True)
class ExponentSet:
    alpha: int
    r: Fraction
    r_prime: Fraction
    theta: Fraction


def exponents(alpha: int) -> ExponentSet:
    """Exact exponents ``r = 4(alpha+1)/(alpha-1)``, ``r' = r/(r-1)``, ``theta = 1-(alpha-1)/4``."""
    if int(alpha) != alpha or alpha < 3 or alpha % 2 == 0:
        raise ValueError(f"alpha must be an odd integer >= 3, got {alpha}")
    a = Fraction(int(alpha))
    r = 4 * (a + 1) / (a - 1)
    return ExponentSet(int(alpha), r, r / (r - 1), 1 - (a - 1) / 4)


def admissible_q(p):
    """Time exponent ``q`` with ``2/q = 1/2 - 1/p``; exact for rational ``p``.

    ``p = 2`` gives ``inf`` and ``p = inf`` gives 4.
    """
    if p == INF:
        return Fraction(4)
    if p < 2:
        raise ValueError(f"p must be >= 2, got {p}")
    if p == 2:
        return INF
    if isinstance(p, (int, Rational)):
        p = Fraction(p)
    return 4 * p / (p - 2)


def _edge_integrals(vertex, edges, g: StarGraph, p: float):
    """Per-edge trapezoid of ``|u|^p``; leading axes are kept."""
    vertex = np.asarray(vertex)
    edges = np.asarray(edges)
    w = g.node_weights()
    if p == 2:
        body = (edges.real ** 2 + edges.imag ** 2) @ w
        head = np.abs(vertex) ** 2
    else:
        body = np.abs(edges) ** p @ w
        head = np.abs(vertex) ** p
    return body + 0.5 * g.dx * np.expand_dims(head, -1)


def l2_energy(s: GraphState, g: StarGraph):
    """``(per_edge, total)`` squared L2 norms of a state."""
    s.check_on(g)
    per_edge = _edge_integrals(s.vertex, s.edges, g, 2)
    return per_edge, float(per_edge.sum())


def _lp(vertex, edges, g, p):
    if p == INF:
        return np.maximum(np.abs(vertex), np.abs(edges).max(axis=(-2, -1)))
    return _edge_integrals(vertex, edges, g, float(p)).sum(axis=-1) ** (1.0 / float(p))


def lp_norm(s: GraphState, g: StarGraph, p) -> float:
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    s.check_on(g)
    return float(_lp(s.vertex, s.edges, g, p))


def lp_norm_series(traj: Trajectory, p) -> np.ndarray:
    """``lp_norm`` of every stored state."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    return np.asarray(_lp(traj.vertex, traj.edges, traj.graph, p), dtype=float)


def trapezoid(values, dt: float) -> float:
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        return 0.0
    return float(dt * (values.sum() - 0.5 * (values[0] + values[-1])))


def cumulative_trapezoid(values, dt: float) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    out = np.zeros_like(values)
    out[1:] = np.cumsum(0.5 * dt * (values[1:] + values[:-1]))
    return out


def mixed_norm(traj: Trajectory, p, q) -> float:
    """``(int_0^T ||u(t)||_p^q dt)^(1/q)``; ``q = inf`` takes the max over stored states."""
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    norms = lp_norm_series(traj, p)
    if q == INF:
        return float(norms.max())
    q = float(q)
    return trapezoid(norms ** q, traj.dt_stored) ** (1.0 / q)


def triple_norm(traj: Trajectory, alpha: int) -> float:
    """Sup-in-time L2 norm plus the ``L^r_t L^(alpha+1)_x`` norm.

    The sup runs over stored states only, so it bounds the continuum sup
    from below.
    """
    ex = exponents(alpha)
    sup = float(lp_norm_series(traj, 2).max())
    return sup + mixed_norm(traj, alpha + 1, ex.r)


@dataclass
class EnergyTrace:
    times: np.ndarray
    per_edge_energy: np.ndarray  # shape (n_edges, n_t)
    total_energy: np.ndarray
    dissipation_integral: np.ndarray  # cumulative 2 int_0^t int a|u|^2

    def to_csv(self, path) -> None:
        n = self.per_edge_energy.shape[0]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "E_total"] + [f"E_{i + 1}" for i in range(n)]
                       + ["dissipation_cumulative"])
            for k, t in enumerate(self.times):
                w.writerow([repr(float(t)), repr(float(self.total_energy[k]))]
                           + [repr(float(e)) for e in self.per_edge_energy[:, k]]
                           + [repr(float(self.dissipation_integral[k]))])

    @classmethod
    def from_csv(cls, path) -> "EnergyTrace":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, 0], data[:, 2:-1].T.copy(), data[:, 1], data[:, -1])


def dissipation_density(traj: Trajectory, d: DampingProfile) -> np.ndarray:
    """``int a |u|^2 dx`` at every stored state (all damped edges)."""
    g = traj.graph
    w = g.node_weights()
    sq = traj.edges.real ** 2 + traj.edges.imag ** 2
    body = np.einsum("tim,im,m->t", sq, d.values, w)
    head = 0.5 * g.dx * d.vertex_by_edge.sum() * np.abs(traj.vertex) ** 2
    return body + head


def energy_trace(traj: Trajectory, d: DampingProfile | None = None) -> EnergyTrace:
    d = traj.damping if d is None else d
    per_edge = _edge_integrals(traj.vertex, traj.edges, traj.graph, 2).T
    total = per_edge.sum(axis=0)
    if d is None:
        diss = np.zeros_like(total)
    else:
        diss = 2.0 * cumulative_trapezoid(dissipation_density(traj, d), traj.dt_stored)
    return EnergyTrace(traj.times, per_edge, total, diss)
