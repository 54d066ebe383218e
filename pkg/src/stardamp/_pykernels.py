"""Pure-Python (numpy) reference kernels.

Same signatures and arithmetic order as the compiled ``_ckernels`` module.
The Thomas sweeps are vectorised across edges but loop over grid points,
so this backend is slower by roughly two orders of magnitude.
"""
import numpy as np

BACKEND = "python"


def _canonical_sum(vals):
    """Sequential sum in lexicographic (real, imag) order, so edge order is irrelevant."""
    acc = 0j
    for z in np.sort_complex(vals):
        acc += z
    return acc


def cn_step(v, U, beta, cp, inv_den, y, inv_schur):
    """One Crank-Nicolson step of the star-graph Laplacian.

    ``U`` has shape (n_edges, m) with the m interior nodes of each edge
    (far end excluded, pinned to zero); ``v`` is the vertex value.
    ``beta = i*dt/(2*dx**2)``; ``cp``, ``inv_den``, ``y`` and ``inv_schur``
    come from :func:`stardamp.dynamics.factorize`. Returns ``(v_new, U_new)``.
    """
    U = np.asarray(U, dtype=np.complex128)
    n, m = U.shape
    off = -beta
    two_beta_n = 2.0 * beta / n

    # explicit half: b = (I + i dt/2 Lap) u
    b = np.empty_like(U)
    left = np.empty_like(U)
    left[:, 0] = v
    left[:, 1:] = U[:, :-1]
    right = np.zeros_like(U)
    right[:, :-1] = U[:, 1:]
    b[:] = U + beta * (left - 2.0 * U + right)
    bv = v + two_beta_n * _canonical_sum(U[:, 0] - v)

    # forward sweep
    g = np.empty_like(U)
    g[:, 0] = b[:, 0] * inv_den[0]
    for k in range(1, m):
        g[:, k] = (b[:, k] - off * g[:, k - 1]) * inv_den[k]
    # back substitution
    x = g
    for k in range(m - 2, -1, -1):
        x[:, k] = g[:, k] - cp[k] * x[:, k + 1]

    # vertex (scalar Schur complement)
    v_new = (bv + two_beta_n * _canonical_sum(x[:, 0])) * inv_schur
    U_new = x + (v_new * beta) * y[None, :]
    return complex(v_new), U_new


def nl_damp_step(z, a, lam, alpha, dt):
    """Exact flow of ``u' = i*lam*|u|**(alpha-1)*u - a*u`` over ``dt``."""
    z = np.asarray(z, dtype=np.complex128)
    a = np.asarray(a, dtype=np.float64)
    p = alpha - 1.0
    mod = np.abs(z)
    pw = mod ** p
    damped = a != 0.0
    phase = np.where(
        damped,
        lam * pw * (-np.expm1(-p * a * dt)) / np.where(damped, p * a, 1.0),
        lam * pw * dt,
    )
    decay = np.exp(-a * dt)
    return z * decay * np.exp(1j * phase)
