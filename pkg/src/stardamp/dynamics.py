"""Time integration of the damped NLS on a star graph.

The linear part ``i u_t + u_xx = 0`` with Kirchhoff coupling is advanced by
Crank-Nicolson; the pointwise part ``i u_t + lam |u|^(alpha-1) u + i a u = 0``
has a closed-form flow. ``evolve`` composes them by Strang splitting.

The CN matrix is an arrowhead: a tridiagonal block per edge plus one vertex
row/column. It is solved exactly by Thomas sweeps on the edges followed by
a scalar Schur complement for the vertex.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from .graph import DampingProfile, GraphError, GraphState, StarGraph, no_damping

SCHEMES = ("strang_split", "full_crank_nicolson")


class BlowUpError(FloatingPointError):
    """Non-finite values appeared during time stepping."""

    def __init__(self, step: int, time: float):
        super().__init__(f"non-finite field at step {step} (t = {time:g})")
        self.step = step
        self.time = time


class SolverBreakdown(ArithmeticError):
    pass


@dataclass(frozen=True)
class SimParams:
    lam: float
    alpha: int = 3
    dt: float = 0.01
    t_final: float = 1.0
    scheme: str = "strang_split"
    stride: int = 1
    allow_large_dt: bool = False

    def __post_init__(self):
        if self.lam == 0 or not math.isfinite(self.lam):
            raise ValueError("lambda must be a nonzero real")
        if int(self.alpha) != self.alpha or self.alpha < 3 or self.alpha % 2 == 0:
            raise ValueError(f"alpha must be an odd integer >= 3, got {self.alpha}")
        if self.alpha not in (3, 5):
            warnings.warn(f"alpha = {self.alpha} is outside the treated cases {{3, 5}}",
                          stacklevel=2)
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.dt > 0.1 and not self.allow_large_dt:
            raise ValueError(f"dt = {self.dt} > 0.1 (accuracy guard; set allow_large_dt)")
        if not self.t_final > 0:
            raise ValueError("t_final must be positive")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if int(self.stride) != self.stride or self.stride < 1:
            raise ValueError("stride must be a positive integer")

    @property
    def n_steps(self) -> int:
        return steps_for(self.t_final, self.dt)


def steps_for(t: float, dt: float) -> int:
    ratio = t / dt
    n = int(round(ratio))
    if abs(ratio - n) > 1e-9 * max(1.0, ratio):
        raise ValueError(f"t/dt = {ratio!r} is not an integer")
    return n


@dataclass(frozen=True)
class Factorization:
    """Precomputed Thomas coefficients of ``I - i dt/2 Lap`` on one graph."""
    beta: complex
    cp: np.ndarray
    inv_den: np.ndarray
    y: np.ndarray
    inv_schur: complex


def factorize(g: StarGraph, dt: float) -> Factorization:
    return _factorize(g.n_edges, g.points_per_edge - 1, g.dx, float(dt))


@lru_cache(maxsize=64)
def _factorize(n: int, m: int, dx: float, dt: float) -> Factorization:
    beta = 0.5j * dt / dx ** 2
    diag = 1.0 + 2.0 * beta
    off = -beta
    cp = np.empty(m, dtype=np.complex128)
    inv_den = np.empty(m, dtype=np.complex128)
    den = diag
    for k in range(m):
        if k > 0:
            den = diag - off * cp[k - 1]
        if abs(den) < 1e-300:
            raise SolverBreakdown(f"zero pivot at row {k}")
        inv_den[k] = 1.0 / den
        cp[k] = off / den
    # y = T^{-1} e_0
    g = np.zeros(m, dtype=np.complex128)
    g[0] = inv_den[0]
    for k in range(1, m):
        g[k] = -off * g[k - 1] * inv_den[k]
    for k in range(m - 2, -1, -1):
        g[k] -= cp[k] * g[k + 1]
    schur = 1.0 + 2.0 * beta - 2.0 * beta * beta * g[0]
    if abs(schur) < 1e-300:
        raise SolverBreakdown("singular vertex Schur complement")
    for arr in (cp, inv_den, g):
        arr.setflags(write=False)
    return Factorization(beta, cp, inv_den, g, 1.0 / schur)


def laplacian_matrix(g: StarGraph) -> np.ndarray:
    """Dense discrete Kirchhoff Laplacian (vertex first, then edges). For tests."""
    n, m, h2 = g.n_edges, g.points_per_edge - 1, 1.0 / g.dx ** 2
    size = 1 + n * m
    A = np.zeros((size, size))
    A[0, 0] = -2.0 * h2
    for i in range(n):
        base = 1 + i * m
        A[0, base] = 2.0 * h2 / n
        for k in range(m):
            A[base + k, base + k] = -2.0 * h2
            if k > 0:
                A[base + k, base + k - 1] = h2
            else:
                A[base, 0] = h2
            if k < m - 1:
                A[base + k, base + k + 1] = h2
    return A


def _cn(v, U, fac: Factorization):
    return kernels.cn_step(v, U, fac.beta, fac.cp, fac.inv_den, fac.y, fac.inv_schur)


def linear_step(s: GraphState, g: StarGraph, dt: float) -> GraphState:
    """One Crank-Nicolson step of ``i u_t + Lap u = 0``."""
    s.check_on(g)
    v, U = _cn(s.vertex, s.interior, factorize(g, dt))
    return GraphState.from_interior(v, U, s.time + dt)


def _nl(v, U, a_v, a_U, lam, alpha, h):
    n, m = U.shape
    z = np.empty(1 + n * m, dtype=np.complex128)
    z[0] = v
    z[1:] = U.ravel()
    w = kernels.nl_damp_step(z, np.concatenate(([a_v], a_U.ravel())), lam, alpha, h)
    return complex(w[0]), w[1:].reshape(n, m)


def nonlinear_damping_step(s: GraphState, d: DampingProfile, p: SimParams,
                           dt: float) -> GraphState:
    """Exact pointwise flow of the nonlinearity and damping over ``dt``.

    ``|u|`` decays as ``exp(-a dt)``; the phase advances by
    ``lam |u0|^(alpha-1) (1 - exp(-(alpha-1) a dt)) / ((alpha-1) a)``.
    """
    v, U = _nl(s.vertex, s.interior, d.vertex_effective, d.values[:, :-1],
               p.lam, p.alpha, dt)
    return GraphState.from_interior(v, U, s.time)


class Trajectory:
    """Stored states ``t_n = n * dt_stored`` of one run.

    ``vertex`` has shape ``(n_t,)`` and ``edges`` ``(n_t, n_edges, M)``.
    ``step_mass`` holds the total discrete mass after every integrator step
    (independent of the storage stride).
    """

    def __init__(self, graph: StarGraph, vertex, edges, dt_stored: float,
                 params: SimParams | None = None, damping: DampingProfile | None = None,
                 step_mass=None, t0: float = 0.0):
        self.graph = graph
        self.vertex = np.asarray(vertex, dtype=np.complex128)
        self.edges = np.asarray(edges, dtype=np.complex128)
        if self.edges.ndim != 3 or self.edges.shape[0] != self.vertex.shape[0]:
            raise GraphError("trajectory arrays have inconsistent shapes")
        if self.edges.shape[1:] != (graph.n_edges, graph.points_per_edge):
            raise GraphError("trajectory does not match its graph")
        self.dt_stored = float(dt_stored)
        self.params = params
        self.damping = damping
        self.step_mass = None if step_mass is None else np.asarray(step_mass)
        self.t0 = t0

    def __len__(self):
        return self.vertex.shape[0]

    def __getitem__(self, n) -> GraphState:
        return GraphState(self.vertex[n], self.edges[n], self.times[n])

    @property
    def states(self):
        return [self[n] for n in range(len(self))]

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt_stored * np.arange(len(self))

    @property
    def T(self) -> float:
        return self.dt_stored * (len(self) - 1)

    def with_values(self, vertex, edges) -> "Trajectory":
        return Trajectory(self.graph, vertex, edges, self.dt_stored, self.params,
                          self.damping, None, self.t0)

    def __sub__(self, other: "Trajectory") -> "Trajectory":
        if len(self) != len(other) or not self.graph.compatible(other.graph):
            raise GraphError("trajectories are defined on different grids")
        return self.with_values(self.vertex - other.vertex, self.edges - other.edges)

    def truncated(self, t: float) -> "Trajectory":
        """Stored states with ``time <= t``."""
        n = steps_for(t, self.dt_stored)
        if n >= len(self):
            raise ValueError(f"t = {t} is beyond the trajectory end {self.T}")
        return Trajectory(self.graph, self.vertex[: n + 1], self.edges[: n + 1],
                          self.dt_stored, self.params, self.damping, None, self.t0)

    @classmethod
    def from_states(cls, graph, states, dt_stored, params=None, damping=None):
        vertex = np.array([s.vertex for s in states])
        edges = np.stack([s.edges for s in states])
        return cls(graph, vertex, edges, dt_stored, params, damping)


def mass(vertex, edges, g: StarGraph):
    """Total discrete L2 mass; vectorised over leading axes."""
    w = g.node_weights()
    vertex = np.asarray(vertex)
    edges = np.asarray(edges)
    sq = (edges.real ** 2 + edges.imag ** 2) @ w
    return g.vertex_weight() * np.abs(vertex) ** 2 + sq.sum(axis=-1)


def _check_finite(v, U, step, t):
    if not (math.isfinite(v.real) and math.isfinite(v.imag)) or not np.isfinite(U).all():
        raise BlowUpError(step, t)


def evolve(phi: GraphState, g: StarGraph, d: DampingProfile | None, p: SimParams,
           dt_sign: float = 1.0) -> Trajectory:
    """Integrate from ``phi`` to ``p.t_final``.

    ``dt_sign=-1`` integrates backwards in time (used for reversibility
    checks on undamped runs). States are stored every ``p.stride`` steps.
    """
    phi.check_on(g)
    if d is None:
        d = no_damping(g)
    d.check_on(g)
    n_steps = p.n_steps
    if n_steps % p.stride:
        raise ValueError(f"stride {p.stride} does not divide the {n_steps} steps")
    if dt_sign < 0 and not d.is_zero():
        raise ValueError("backward integration is only defined without damping")
    dt = math.copysign(p.dt, dt_sign)
    fac = factorize(g, dt)
    a_v = d.vertex_effective
    a_U = np.ascontiguousarray(d.values[:, :-1])
    n_store = n_steps // p.stride + 1
    vert = np.empty(n_store, dtype=np.complex128)
    edges = np.zeros((n_store, g.n_edges, g.points_per_edge), dtype=np.complex128)
    step_mass = np.empty(n_steps + 1)

    v, U = phi.vertex, np.array(phi.interior)
    vert[0], edges[0, :, :-1] = v, U
    step_mass[0] = mass(v, edges[0], g)
    w = g.node_weights()[:-1]
    vw = g.vertex_weight()
    for n in range(1, n_steps + 1):
        if p.scheme == "strang_split":
            v, U = _nl(v, U, a_v, a_U, p.lam, p.alpha, 0.5 * dt)
            v, U = _cn(v, U, fac)
            v, U = _nl(v, U, a_v, a_U, p.lam, p.alpha, 0.5 * dt)
        else:
            v, U = _cn_picard_step(v, U, a_v, a_U, p, dt, fac)
        _check_finite(v, U, n, n * dt)
        step_mass[n] = vw * abs(v) ** 2 + float(((U.real ** 2 + U.imag ** 2) @ w).sum())
        if n % p.stride == 0:
            k = n // p.stride
            vert[k] = v
            edges[k, :, :-1] = U
    return Trajectory(g, vert, edges, dt * p.stride, p, d, step_mass)


def _forcing(v, U, a_v, a_U, lam, alpha):
    pw = alpha - 1
    fv = 1j * lam * abs(v) ** pw * v - a_v * v
    fU = 1j * lam * np.abs(U) ** pw * U - a_U * U
    return fv, fU


def _cn_picard_step(v, U, a_v, a_U, p: SimParams, dt, fac):
    # A^{-1} w = (CN(w) + w) / 2 since CN = A^{-1} (2I - A)
    lv, lU = _cn(v, U, fac)
    f0v, f0U = _forcing(v, U, a_v, a_U, p.lam, p.alpha)

    def solve(fv, fU):
        cv, cU = _cn(fv, fU, fac)
        return 0.5 * (cv + fv), 0.5 * (cU + fU)

    sv, sU = solve(f0v, f0U)
    pv, pU = lv + dt * sv, lU + dt * sU
    f1v, f1U = _forcing(pv, pU, a_v, a_U, p.lam, p.alpha)
    sv, sU = solve(0.5 * (f0v + f1v), 0.5 * (f0U + f1U))
    return lv + dt * sv, lU + dt * sU


def free_propagate(phi: GraphState, g: StarGraph, t: float, dt: float) -> GraphState:
    """Discrete ``exp(i t Lap) phi`` by ``t/dt`` Crank-Nicolson steps."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    phi.check_on(g)
    n = steps_for(t, dt) if t > 0 else 0
    fac = factorize(g, dt)
    v, U = phi.vertex, np.array(phi.interior)
    for _ in range(n):
        v, U = _cn(v, U, fac)
    return GraphState.from_interior(v, U, phi.time + t)


def free_trajectory(phi: GraphState, g: StarGraph, T: float, dt: float) -> Trajectory:
    """Every CN step of the free evolution on ``[0, T]``."""
    phi.check_on(g)
    n = steps_for(T, dt)
    fac = factorize(g, dt)
    vert = np.empty(n + 1, dtype=np.complex128)
    edges = np.zeros((n + 1, g.n_edges, g.points_per_edge), dtype=np.complex128)
    v, U = phi.vertex, np.array(phi.interior)
    vert[0], edges[0, :, :-1] = v, U
    for k in range(1, n + 1):
        v, U = _cn(v, U, fac)
        vert[k], edges[k, :, :-1] = v, U
    return Trajectory(g, vert, edges, dt)


def discrete_eigenvalue(g: StarGraph, mode: int = 1) -> float:
    """``k_h^2`` of the antisymmetric Dirichlet mode ``sin(mode*pi*x/L)``."""
    return 4.0 / g.dx ** 2 * math.sin(mode * math.pi * g.dx / (2.0 * g.L)) ** 2
