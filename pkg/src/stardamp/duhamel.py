"""Picard iteration on the discrete Duhamel formula.

For a trajectory ``u`` on the time grid ``t_n = n dt`` the map is

    Phi(u)_n = P^n phi + i dt sum'_{k=0..n} P^(n-k) F(u_k),
    F(u) = lam |u|^(alpha-1) u + i a u,

with ``P`` one Crank-Nicolson step and ``sum'`` the trapezoid rule. The
inner sum runs over ``[0, t_n]``. It is accumulated by the recursion
``S_n = P S_(n-1) + F_n``, which equals the double sum term by term.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .dynamics import SimParams, Trajectory, _cn, factorize, free_trajectory, steps_for
from .graph import DampingProfile, GraphError, GraphState, StarGraph, no_damping
from .norms import admissible_q, exponents, lp_norm, mixed_norm, triple_norm

MAX_PICARD_STEPS = 2000


@dataclass
class PicardReport:
    iterates_used: int = 0
    successive_distances: list = field(default_factory=list)
    contraction_ratios: list = field(default_factory=list)
    converged: bool = False
    diverged: bool = False
    final_residual: float = math.inf

    def to_dict(self) -> dict:
        return {k: (v if not isinstance(v, float) or math.isfinite(v) else None)
                for k, v in asdict(self).items()}

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)


def forcing(vertex, edges, d: DampingProfile, lam: float, alpha: int):
    """``lam |u|^(alpha-1) u + i a u`` on arrays of stored states."""
    pw = alpha - 1
    fv = lam * np.abs(vertex) ** pw * vertex + 1j * d.vertex_effective * vertex
    fe = lam * np.abs(edges) ** pw * edges + 1j * d.values * edges
    return fv, fe


def _check_grid(u: Trajectory, phi: GraphState, g: StarGraph):
    if not u.graph.compatible(g):
        raise GraphError("trajectory and graph grids differ")
    phi.check_on(g)
    if len(u) - 1 > MAX_PICARD_STEPS:
        raise ValueError(f"{len(u) - 1} time steps exceed the Picard guard ({MAX_PICARD_STEPS})")


def _propagate_sum(fv, fe, fac):
    """``S_n = sum_{k<=n} P^(n-k) F_k`` and ``G_n = P^n F_0`` for all n."""
    n_t = fv.shape[0]
    Sv = np.empty_like(fv)
    Se = np.zeros_like(fe)
    Gv = np.empty_like(fv)
    Ge = np.zeros_like(fe)
    sv, sU = fv[0], fe[0, :, :-1]
    gv, gU = sv, sU
    Sv[0], Se[0, :, :-1], Gv[0], Ge[0, :, :-1] = sv, sU, gv, gU
    for n in range(1, n_t):
        sv, sU = _cn(sv, sU, fac)
        sv, sU = sv + fv[n], sU + fe[n, :, :-1]
        gv, gU = _cn(gv, gU, fac)
        Sv[n], Se[n, :, :-1], Gv[n], Ge[n, :, :-1] = sv, sU, gv, gU
    return Sv, Se, Gv, Ge


def _apply(u: Trajectory, free: Trajectory, d, lam, alpha, fac) -> Trajectory:
    dt = u.dt_stored
    fv, fe = forcing(u.vertex, u.edges, d, lam, alpha)
    fe[:, :, -1] = 0.0
    Sv, Se, Gv, Ge = _propagate_sum(fv, fe, fac)
    vert = free.vertex + 1j * dt * (Sv - 0.5 * Gv - 0.5 * fv)
    edges = free.edges + 1j * dt * (Se - 0.5 * Ge - 0.5 * fe)
    return Trajectory(u.graph, vert, edges, dt, u.params, d)


def picard_map(u: Trajectory, phi: GraphState, g: StarGraph, d: DampingProfile | None,
               p: SimParams) -> Trajectory:
    """One application of the Duhamel map to the stored trajectory ``u``."""
    _check_grid(u, phi, g)
    d = no_damping(g) if d is None else d
    dt = u.dt_stored
    fac = factorize(g, dt)
    free = free_trajectory(phi, g, u.T, dt) if len(u) > 1 else _single(phi, g, dt)
    return _apply(u, free, d, p.lam, p.alpha, fac)


def _single(phi, g, dt):
    return Trajectory(g, np.array([phi.vertex]), phi.edges[None], dt)


def triple_distance(a: Trajectory, b: Trajectory, alpha: int) -> float:
    return triple_norm(a - b, alpha)


def picard_solve(phi: GraphState, g: StarGraph, d: DampingProfile | None, p: SimParams,
                 tol: float = 1e-10, max_iter: int = 50, diverge_after: int = 3):
    """Iterate the Duhamel map from the free evolution until the triple-norm step is below ``tol``.

    Returns ``(trajectory, report)``. The returned trajectory is the last
    iterate whose residual ``|||u - Phi(u)|||`` was measured. Iteration stops
    early when the contraction ratio exceeds 1 ``diverge_after`` times in a
    row or values become non-finite.
    """
    d = no_damping(g) if d is None else d
    n = steps_for(p.t_final, p.dt)
    if n > MAX_PICARD_STEPS:
        raise ValueError(f"{n} time steps exceed the Picard guard ({MAX_PICARD_STEPS})")
    fac = factorize(g, p.dt)
    free = free_trajectory(phi, g, p.t_final, p.dt)
    free = Trajectory(g, free.vertex, free.edges, p.dt, p, d)
    u = free
    rep = PicardReport()
    above = 0
    for k in range(max_iter):
        with np.errstate(over="ignore", invalid="ignore"):
            nxt = _apply(u, free, d, p.lam, p.alpha, fac)
            finite = np.isfinite(nxt.vertex).all() and np.isfinite(nxt.edges).all()
            dist = triple_distance(nxt, u, p.alpha) if finite else math.inf
        rep.iterates_used = k + 1
        if not (finite and math.isfinite(dist)):
            rep.diverged = True
            break
        prev = rep.successive_distances[-1] if rep.successive_distances else None
        rep.successive_distances.append(dist)
        if prev is not None and prev > 1e-14:
            ratio = dist / prev
            rep.contraction_ratios.append(ratio)
            above = above + 1 if ratio > 1 else 0
        rep.final_residual = dist
        if dist <= tol:
            rep.converged = True
            break
        if above >= diverge_after:
            rep.diverged = True
            break
        u = nxt
    return u, rep


@dataclass(frozen=True)
class HorizonInputs:
    C: float
    phi_l2: float
    alpha: int

    def __post_init__(self):
        if not self.C > 0:
            raise ValueError("C must be positive")
        if self.phi_l2 < 0:
            raise ValueError("phi_l2 must be nonnegative")


def critical_condition(C: float, phi_l2: float) -> float:
    """``2^5 C^5 |phi|^4``; the critical horizon is positive iff this is < 1."""
    return 32.0 * C ** 5 * phi_l2 ** 4


def local_time_horizon(h: HorizonInputs) -> float:
    """Existence horizon of the contraction argument.

    Subcritical ``alpha < 5``: the root of ``2CT + 2^a C^a T^theta |phi|^(a-1) = 1``.
    Critical ``alpha = 5``: ``(1 - 2^5 C^5 |phi|^4) / (1 + 2C)``, clamped at 0.
    """
    alpha, C, m = h.alpha, float(h.C), float(h.phi_l2)
    ex = exponents(alpha)
    if alpha > 5:
        raise ValueError("no L2 horizon for supercritical alpha > 5")
    if alpha == 5:
        return max(0.0, (1.0 - critical_condition(C, m)) / (1.0 + 2.0 * C))
    B = 2.0 ** alpha * C ** alpha * m ** (alpha - 1)
    if B == 0:
        return 1.0 / (2.0 * C)
    theta = float(ex.theta)

    def lhs(T):
        return 2.0 * C * T + B * T ** theta

    lo, hi = 0.0, 1.0 / (2.0 * C)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if lhs(mid) < 1.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-16 * hi:
            break
    return lo


def strichartz_quotient(phi: GraphState, g: StarGraph, p, q, T: float, dt: float) -> float:
    """``||exp(it Lap) phi||_{L^q_t L^p_x} / ||phi||_2`` on ``[0, T]``."""
    if admissible_q(p) != q:
        raise ValueError(f"(p, q) = ({p}, {q}) is not admissible")
    norm = lp_norm(phi, g, 2)
    if norm == 0:
        raise ValueError("zero initial data: quotient undefined")
    tr = free_trajectory(phi, g, T, dt)
    return mixed_norm(tr, p, q) / norm
