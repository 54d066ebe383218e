"""File formats: JSON checkpoints, trajectory CSV, damping tables."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .dynamics import Trajectory
from .graph import DampingProfile, GraphState, StarGraph, table_damping


def write_checkpoint(state: GraphState, g: StarGraph, path) -> None:
    Path(path).write_text(json.dumps(state.to_dict(g)) + "\n")


def read_checkpoint(path) -> tuple[GraphState, StarGraph]:
    return GraphState.from_dict(json.loads(Path(path).read_text()))


def write_trajectory_csv(traj: Trajectory, path) -> None:
    """Rows ``t, edge, x, re, im``; edges are 1-based and ``x = 0`` is the vertex."""
    g = traj.graph
    x = np.concatenate(([0.0], g.x))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "edge", "x", "re", "im"])
        for n, t in enumerate(traj.times):
            for i in range(g.n_edges):
                vals = np.concatenate(([traj.vertex[n]], traj.edges[n, i]))
                for xj, z in zip(x, vals):
                    w.writerow([repr(float(t)), i + 1, repr(float(xj)),
                                repr(float(z.real)), repr(float(z.imag))])


def read_trajectory_csv(path, g: StarGraph) -> Trajectory:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    times = np.unique(data[:, 0])
    m = g.points_per_edge + 1
    block = data.reshape(len(times), g.n_edges, m, 5)
    z = block[..., 3] + 1j * block[..., 4]
    dt = times[1] - times[0] if len(times) > 1 else 1.0
    return Trajectory(g, z[:, 0, 0], z[:, :, 1:], dt, t0=times[0])


def read_damping_table(path, g: StarGraph, alpha0: float, R: float,
                       active_edges=(0,)) -> DampingProfile:
    """JSON ``{"vertex": [a_1(0), ...], "edges": [[a(dx), ..., a(L)], ...]}``."""
    raw = json.loads(Path(path).read_text())
    return table_damping(g, raw["edges"], alpha0, R, raw.get("vertex"),
                         raw.get("active_edges", list(active_edges)))
