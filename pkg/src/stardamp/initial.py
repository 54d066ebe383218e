"""Initial data generators: seeded Gaussian packets and eigenmodes."""
from __future__ import annotations

import numpy as np

from .graph import GraphError, GraphState, StarGraph, sample_function
from .norms import l2_energy


def _normalise(s: GraphState, g: StarGraph, amplitude: float) -> GraphState:
    if amplitude == 0:
        return GraphState.zeros(g)
    _, m = l2_energy(s, g)
    if m == 0:
        raise GraphError("cannot normalise a zero state to nonzero amplitude")
    return s.scaled(amplitude / np.sqrt(m))


def vertex_blend(x: np.ndarray, dx: float) -> np.ndarray:
    """Smooth cutoff equal to 1 at x = 0 and 0 for x >= 2*dx."""
    return np.where(x < 2 * dx, np.cos(np.pi * np.minimum(x, 2 * dx) / (4 * dx)) ** 2, 0.0)


def packet_parameters(g: StarGraph, seed: int, center=None, wavenumber=None,
                      width=None, edge_weights=None) -> dict:
    """Draw per-edge packet parameters; explicit arguments override the draws.

    All draws happen in a fixed order so overriding one parameter leaves the
    others unchanged for a given seed.
    """
    n = g.n_edges
    rng = np.random.default_rng(seed)
    c = rng.uniform(0.1 * g.L, 0.5 * g.L, n)
    k = rng.uniform(-2.0, 2.0, n)
    s = rng.uniform(0.7, 1.5, n)
    w = rng.uniform(0.2, 1.0, n) * np.exp(2j * np.pi * rng.uniform(0.0, 1.0, n))

    def fill(val, drawn, dtype=float):
        if val is None:
            return drawn
        arr = np.broadcast_to(np.asarray(val, dtype=dtype), (n,)).copy()
        return arr

    return {
        "center": fill(center, c),
        "wavenumber": fill(wavenumber, k),
        "width": fill(width, s),
        "weight": fill(edge_weights, w, complex),
    }


def gaussian_packets(g: StarGraph, seed: int = 0, amplitude: float = 1.0, center=None,
                     wavenumber=None, width=None, edge_weights=None) -> GraphState:
    """Sum of one Gaussian packet per edge, continuous at the vertex.

    Each edge carries ``w exp(-(x-c)^2/(2 s^2) + i k x)``; the edge values
    are blended over ``[0, 2dx]`` to a common vertex value and the state is
    scaled to L2 norm ``amplitude``.
    """
    par = packet_parameters(g, seed, center, wavenumber, width, edge_weights)

    def raw(i):
        c, k, s, w = (par[key][i] for key in ("center", "wavenumber", "width", "weight"))
        return lambda x: w * np.exp(-((x - c) ** 2) / (2 * s * s) + 1j * k * x)

    raws = [raw(i) for i in range(g.n_edges)]
    at0 = np.array([complex(f(np.zeros(1))[0]) for f in raws])
    v = at0.mean()

    def blended(i):
        return lambda x: raws[i](x) + (v - at0[i]) * vertex_blend(np.asarray(x, float), g.dx)

    s = sample_function(g, [blended(i) for i in range(g.n_edges)])
    return _normalise(s, g, amplitude)


def eigenmode(g: StarGraph, mode: int = 1, amplitude: float = 1.0,
              edge_weights=None) -> GraphState:
    """``sigma_i sin(mode pi x / L)`` with ``sum(sigma) = 0`` (Kirchhoff exact)."""
    if edge_weights is None:
        sigma = np.zeros(g.n_edges)
        sigma[1], sigma[2 % g.n_edges] = 1.0, -1.0
    else:
        sigma = np.broadcast_to(np.asarray(edge_weights, float), (g.n_edges,))
    if abs(sigma.sum()) > 1e-12:
        raise GraphError(f"eigenmode weights must sum to zero, got {sigma.sum()}")
    k = mode * np.pi / g.L
    s = sample_function(g, [lambda x, a=a: a * np.sin(k * x) for a in sigma])
    return _normalise(s, g, amplitude)
