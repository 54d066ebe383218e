"""Compare the compiled and pure-Python kernel backends.

Usage: ``python benchmarks/bench_kernels.py [--repeat 5] [--steps 200]``.
Times one Crank-Nicolson step, one nonlinear/damping step and a short
full evolution at the default resolution for every importable backend,
and checks that the backends agree.
"""
import argparse
import timeit

import numpy as np

from stardamp import kernels
from stardamp.dynamics import factorize
from stardamp.graph import build_star, indicator_damping
from stardamp.initial import gaussian_packets


def bench(mod, g, fac, v, U, z, a, repeat, number):
    args = (fac.beta, fac.cp, fac.inv_den, fac.y, fac.inv_schur)
    t_cn = min(timeit.repeat(lambda: mod.cn_step(v, U, *args), repeat=repeat, number=number))
    t_nl = min(timeit.repeat(lambda: mod.nl_damp_step(z, a, -1.0, 3, 0.005),
                             repeat=repeat, number=number))
    return t_cn / number, t_nl / number


def evolve_with(mod, g, d, phi, steps, dt=0.01):
    fac = factorize(g, dt)
    args = (fac.beta, fac.cp, fac.inv_den, fac.y, fac.inv_schur)
    v, U = phi.vertex, np.array(phi.interior)
    a = np.concatenate(([d.vertex_effective], d.values[:, :-1].ravel()))
    n, m = U.shape
    for _ in range(steps):
        z = mod.nl_damp_step(np.concatenate(([v], U.ravel())), a, -1.0, 3, 0.5 * dt)
        v, U = mod.cn_step(z[0], z[1:].reshape(n, m), *args)
        z = mod.nl_damp_step(np.concatenate(([v], U.ravel())), a, -1.0, 3, 0.5 * dt)
        v, U = z[0], z[1:].reshape(n, m)
    return v, U


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--number", type=int, default=20)
    ap.add_argument("--steps", type=int, default=200)
    ap.add_argument("--dx", type=float, default=0.05)
    args = ap.parse_args()

    g = build_star(3, 20.0, args.dx)
    d = indicator_damping(g, 1.0, 5.0)
    phi = gaussian_packets(g, 0)
    fac = factorize(g, 0.01)
    v, U = phi.vertex, np.array(phi.interior)
    z = np.concatenate(([v], U.ravel()))
    a = np.concatenate(([d.vertex_effective], d.values[:, :-1].ravel()))

    backends = kernels.available_backends()
    print(f"grid: N={g.n_edges}, M={g.points_per_edge}, unknowns={g.n_unknowns}; "
          f"default backend: {kernels.BACKEND}")
    print(f"{'backend':<8} {'cn_step [us]':>14} {'nl_step [us]':>14} {'evolve/step [us]':>18}")
    results = {}
    for name, mod in sorted(backends.items()):
        t_cn, t_nl = bench(mod, g, fac, v, U, z, a, args.repeat, args.number)
        t_ev = min(timeit.repeat(lambda: evolve_with(mod, g, d, phi, args.steps),
                                 repeat=max(1, args.repeat // 2), number=1)) / args.steps
        results[name] = (t_cn, t_nl, t_ev, evolve_with(mod, g, d, phi, args.steps))
        print(f"{name:<8} {t_cn * 1e6:14.1f} {t_nl * 1e6:14.1f} {t_ev * 1e6:18.1f}")
    if "cython" in results:
        py, cy = results["python"], results["cython"]
        print(f"speedup (python / cython): cn {py[0] / cy[0]:.1f}x, nl {py[1] / cy[1]:.1f}x, "
              f"evolve {py[2] / cy[2]:.1f}x")
        vp, Up = py[3]
        vc, Uc = cy[3]
        diff = max(abs(vp - vc), float(np.abs(Up - Uc).max()))
        print(f"max |python - cython| after {args.steps} steps: {diff:.2e}")


if __name__ == "__main__":
    main()
