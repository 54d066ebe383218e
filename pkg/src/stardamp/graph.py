"""Star-graph geometry, grid states and damping profiles.

A star graph has ``n_edges`` half-lines glued at one vertex. Each edge is
truncated at length ``L`` (homogeneous Dirichlet condition there) and
sampled on the uniform grid ``x = dx, 2dx, ..., L``. The vertex is a single
unknown shared by every edge, so continuity holds by construction; the flux
(Kirchhoff) condition is carried by the finite-volume vertex cell of the
discrete Laplacian.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np


class GraphError(ValueError):
    """Invalid graph, state or damping configuration."""


@dataclass(frozen=True)
class StarGraph:
    n_edges: int
    edge_length: float
    dx: float
    points_per_edge: int

    @property
    def L(self) -> float:
        return self.edge_length

    @property
    def n_unknowns(self) -> int:
        """Vertex plus interior nodes (the far ends are pinned to zero)."""
        return 1 + self.n_edges * (self.points_per_edge - 1)

    @property
    def x(self) -> np.ndarray:
        """Grid coordinates ``dx, 2dx, ..., L`` of one edge."""
        return self.dx * np.arange(1, self.points_per_edge + 1)

    def vertex_weight(self) -> float:
        """Length of the vertex cell, ``N*dx/2``."""
        return 0.5 * self.n_edges * self.dx

    def node_weights(self) -> np.ndarray:
        """Trapezoid weights of the edge samples, shape ``(M,)``."""
        w = np.full(self.points_per_edge, self.dx)
        w[-1] = 0.5 * self.dx
        return w

    def compatible(self, other: "StarGraph") -> bool:
        return (self.n_edges == other.n_edges
                and self.points_per_edge == other.points_per_edge
                and abs(self.dx - other.dx) <= 1e-12 * self.dx)


def build_star(n_edges: int, edge_length: float, dx: float,
               allow_small: bool = False) -> StarGraph:
    """Discretise a star graph with ``n_edges`` equal edges of length ``edge_length``.

    ``allow_small`` lifts the ``n_edges >= 3`` restriction.
    """
    if int(n_edges) != n_edges or n_edges < 1:
        raise GraphError(f"n_edges must be a positive integer, got {n_edges!r}")
    n_edges = int(n_edges)
    if n_edges < 3 and not allow_small:
        raise GraphError(f"n_edges must be >= 3 (got {n_edges}); pass allow_small=True to override")
    if not edge_length > 0 or not dx > 0:
        raise GraphError(f"edge_length and dx must be positive, got L={edge_length}, dx={dx}")
    ratio = edge_length / dx
    m = int(round(ratio))
    if abs(ratio - m) > 1e-9 * ratio:
        raise GraphError(f"edge_length/dx = {ratio!r} is not an integer")
    if m < 8:
        raise GraphError(f"edge_length/dx = {m} < 8; grid too coarse")
    # snap dx so that M*dx == L
    return StarGraph(n_edges, float(edge_length), float(edge_length) / m, m)


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class GraphState:
    """Complex field on the graph at one instant.

    ``edges[i, j]`` is the sample of edge ``i`` at ``x = (j+1)*dx``; the
    last column (the far end) is always zero.
    """
    vertex: complex
    edges: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        edges = np.array(self.edges, dtype=np.complex128)
        if edges.ndim != 2 or edges.shape[1] < 2:
            raise GraphError(f"edges must have shape (n_edges, M), got {edges.shape}")
        if np.any(edges[:, -1] != 0):
            raise GraphError("far endpoint samples must be zero (Dirichlet truncation)")
        object.__setattr__(self, "vertex", complex(self.vertex))
        object.__setattr__(self, "edges", _frozen(edges))
        object.__setattr__(self, "time", float(self.time))

    @classmethod
    def from_interior(cls, vertex, interior, time=0.0) -> "GraphState":
        interior = np.asarray(interior, dtype=np.complex128)
        edges = np.zeros((interior.shape[0], interior.shape[1] + 1), dtype=np.complex128)
        edges[:, :-1] = interior
        return cls(vertex, edges, time)

    @classmethod
    def zeros(cls, g: StarGraph, time=0.0) -> "GraphState":
        return cls(0.0, np.zeros((g.n_edges, g.points_per_edge), dtype=np.complex128), time)

    @property
    def n_edges(self) -> int:
        return self.edges.shape[0]

    @property
    def interior(self) -> np.ndarray:
        return self.edges[:, :-1]

    def check_on(self, g: StarGraph) -> None:
        if self.edges.shape != (g.n_edges, g.points_per_edge):
            raise GraphError(f"state shape {self.edges.shape} does not match graph "
                             f"({g.n_edges}, {g.points_per_edge})")

    def with_time(self, time: float) -> "GraphState":
        return GraphState(self.vertex, self.edges, time)

    def scaled(self, c: complex) -> "GraphState":
        return GraphState(c * self.vertex, c * self.edges, self.time)

    def conj(self) -> "GraphState":
        return GraphState(self.vertex.conjugate(), self.edges.conj(), self.time)

    def permuted(self, perm: Sequence[int]) -> "GraphState":
        """Relabel edges: new edge ``k`` is old edge ``perm[k]``."""
        perm = list(perm)
        if sorted(perm) != list(range(self.n_edges)):
            raise GraphError(f"{perm} is not a permutation of range({self.n_edges})")
        return GraphState(self.vertex, self.edges[perm], self.time)

    def allclose(self, other: "GraphState", atol=0.0, rtol=1e-12) -> bool:
        return (np.allclose(self.vertex, other.vertex, atol=atol, rtol=rtol)
                and np.allclose(self.edges, other.edges, atol=atol, rtol=rtol))

    def to_dict(self, g: StarGraph) -> dict:
        """Checkpoint schema (see README)."""
        return {
            "n_edges": g.n_edges,
            "L": g.L,
            "dx": g.dx,
            "time": self.time,
            "vertex": [self.vertex.real, self.vertex.imag],
            "edges": [[[z.real, z.imag] for z in row] for row in self.edges.tolist()],
        }

    @classmethod
    def from_dict(cls, d: dict) -> tuple["GraphState", StarGraph]:
        g = build_star(d["n_edges"], d["L"], d["dx"], allow_small=True)
        edges = np.asarray(d["edges"], dtype=np.float64)
        if edges.shape != (g.n_edges, g.points_per_edge, 2):
            raise GraphError(f"edges array has shape {edges.shape}, expected "
                             f"({g.n_edges}, {g.points_per_edge}, 2)")
        re, im = d["vertex"]
        state = cls(complex(re, im), edges[..., 0] + 1j * edges[..., 1], d.get("time", 0.0))
        return state, g


EdgeFunction = Callable[[np.ndarray], np.ndarray]


def sample_function(g: StarGraph, f: EdgeFunction | Sequence[EdgeFunction],
                    tol: float = 1e-9) -> GraphState:
    """Sample per-edge functions on the grid.

    ``f`` is either one vectorised callable used on every edge or a sequence
    of ``n_edges`` callables. The values at ``x = 0`` must agree across edges.
    """
    fs = [f] * g.n_edges if callable(f) else list(f)
    if len(fs) != g.n_edges:
        raise GraphError(f"expected {g.n_edges} edge functions, got {len(fs)}")
    x = g.x
    at_zero = np.array([complex(np.asarray(fi(np.zeros(1)), dtype=complex).ravel()[0]) for fi in fs])
    if np.max(np.abs(at_zero - at_zero[0])) > tol:
        listing = ", ".join(f"edge {i + 1}: {z:.6g}" for i, z in enumerate(at_zero))
        raise GraphError(f"vertex continuity violated: f(0) per edge = [{listing}]")
    edges = np.empty((g.n_edges, g.points_per_edge), dtype=np.complex128)
    for i, fi in enumerate(fs):
        edges[i] = np.broadcast_to(np.asarray(fi(x), dtype=np.complex128), x.shape)
    edges[:, -1] = 0.0
    return GraphState(at_zero[0], edges)


def one_sided_derivatives(s: GraphState, g: StarGraph) -> np.ndarray:
    """Second-order outgoing derivative of each edge at the vertex."""
    u1 = s.edges[:, 0]
    u2 = s.edges[:, 1]
    return (-3.0 * s.vertex + 4.0 * u1 - u2) / (2.0 * g.dx)


def kirchhoff_flux_residual(s: GraphState, g: StarGraph) -> float:
    """``|sum_i d/dx u_i(0)|`` with one-sided second-order differences."""
    s.check_on(g)
    # sorted summation keeps the result independent of edge order
    d = one_sided_derivatives(s, g)
    total = complex(np.sum(np.sort_complex(d)))
    return abs(total)


@dataclass(frozen=True, eq=False)
class DampingProfile:
    """Nonnegative damping coefficient ``a(x)`` per edge.

    ``values`` has the state's edge layout; ``vertex_by_edge`` holds each
    edge's limit ``a_i(0)``. ``active_edges`` lists (0-based) the edges on
    which ``a >= alpha0`` beyond ``R`` is required.
    """
    values: np.ndarray
    vertex_by_edge: np.ndarray
    alpha0: float
    R: float
    active_edges: tuple = (0,)
    kind: str = "custom_table"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        vb = np.array(self.vertex_by_edge, dtype=np.float64).reshape(-1)
        if values.ndim != 2 or vb.shape != (values.shape[0],):
            raise GraphError("damping values must be (n_edges, M) with one vertex value per edge")
        if np.any(values < 0) or np.any(vb < 0) or not np.all(np.isfinite(values)):
            raise GraphError("damping coefficient must be finite and nonnegative")
        if not self.alpha0 > 0:
            raise GraphError(f"alpha0 must be positive, got {self.alpha0}")
        if not self.R > 0:
            raise GraphError(f"R must be positive, got {self.R}")
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "vertex_by_edge", _frozen(vb))
        object.__setattr__(self, "active_edges", tuple(int(i) for i in self.active_edges))

    @property
    def vertex_effective(self) -> float:
        """Coefficient used on the vertex cell.

        Each edge owns ``dx/2`` of the ``N*dx/2`` vertex cell, so the
        effective value is the mean of the per-edge limits.
        """
        return float(np.mean(self.vertex_by_edge))

    @property
    def sup(self) -> float:
        return float(max(self.values.max(), self.vertex_by_edge.max()))

    def is_zero(self) -> bool:
        return not np.any(self.values) and not np.any(self.vertex_by_edge)

    def check_on(self, g: StarGraph) -> None:
        if self.values.shape != (g.n_edges, g.points_per_edge):
            raise GraphError(f"damping shape {self.values.shape} does not match graph")
        if self.R >= g.L:
            raise GraphError(f"R = {self.R} must be smaller than L = {g.L}")
        beyond = g.x > self.R
        for i in self.active_edges:
            if np.any(self.values[i, beyond] < self.alpha0 - 1e-12):
                raise GraphError(f"edge {i + 1}: a(x) < alpha0 somewhere beyond R")

    def beyond_mask(self, g: StarGraph) -> np.ndarray:
        return g.x > self.R


def _active(g: StarGraph, all_edges: bool) -> tuple:
    return tuple(range(g.n_edges)) if all_edges else (0,)


def no_damping(g: StarGraph, alpha0: float = 1.0, R: float | None = None) -> DampingProfile:
    R = 0.5 * g.L if R is None else R
    return DampingProfile(np.zeros((g.n_edges, g.points_per_edge)), np.zeros(g.n_edges),
                          alpha0, R, active_edges=(), kind="none")


def indicator_damping(g: StarGraph, alpha0: float, R: float,
                      all_edges: bool = False) -> DampingProfile:
    """``a = alpha0 * 1{x > R}`` on edge 1 (or on every edge)."""
    edges = _active(g, all_edges)
    values = np.zeros((g.n_edges, g.points_per_edge))
    for i in edges:
        values[i] = np.where(g.x > R, alpha0, 0.0)
    d = DampingProfile(values, np.zeros(g.n_edges), alpha0, R, edges, kind="indicator_beyond_R")
    d.check_on(g)
    return d


def ramp_damping(g: StarGraph, alpha0: float, R: float, all_edges: bool = False,
                 width: float = 1.0) -> DampingProfile:
    """Cosine transition from 0 at ``R - width`` to ``alpha0`` at ``R``."""
    edges = _active(g, all_edges)

    def a(x):
        s = np.clip((x - (R - width)) / width, 0.0, 1.0)
        return alpha0 * 0.5 * (1.0 - np.cos(np.pi * s))

    values = np.zeros((g.n_edges, g.points_per_edge))
    vb = np.zeros(g.n_edges)
    for i in edges:
        values[i] = a(g.x)
        vb[i] = a(np.zeros(1))[0]
    d = DampingProfile(values, vb, alpha0, R, edges, kind="smooth_ramp")
    d.check_on(g)
    return d


def table_damping(g: StarGraph, values, alpha0: float, R: float,
                  vertex_by_edge=None, active_edges=(0,)) -> DampingProfile:
    values = np.asarray(values, dtype=np.float64)
    if vertex_by_edge is None:
        vertex_by_edge = np.zeros(g.n_edges)
    d = DampingProfile(values, vertex_by_edge, alpha0, R, tuple(active_edges),
                       kind="custom_table")
    d.check_on(g)
    return d
