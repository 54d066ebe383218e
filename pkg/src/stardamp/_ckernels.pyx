# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels for the Strang-split integrator.

Drop-in replacement for ``stardamp._pykernels``; see that module for the
argument conventions.
"""
import numpy as np

from libc.math cimport exp, expm1, fabs, pow, sqrt, cos, sin

BACKEND = "cython"


cdef inline bint _less(double complex a, double complex b) nogil:
    return a.real < b.real or (a.real == b.real and a.imag < b.imag)


cdef double complex _canonical_sum(double complex[::1] buf) nogil:
    # insertion sort then sequential sum: independent of edge order
    cdef Py_ssize_t i, j, n = buf.shape[0]
    cdef double complex t, acc = 0.0
    for i in range(1, n):
        t = buf[i]
        j = i - 1
        while j >= 0 and _less(t, buf[j]):
            buf[j + 1] = buf[j]
            j -= 1
        buf[j + 1] = t
    for i in range(n):
        acc = acc + buf[i]
    return acc


def cn_step(double complex v, U_in, double complex beta,
            const double complex[::1] cp, const double complex[::1] inv_den,
            const double complex[::1] y, double complex inv_schur):
    cdef const double complex[:, ::1] U = np.ascontiguousarray(U_in, dtype=np.complex128)
    cdef Py_ssize_t n = U.shape[0]
    cdef Py_ssize_t m = U.shape[1]
    out = np.empty((n, m), dtype=np.complex128)
    cdef double complex[:, ::1] x = out
    cdef double complex off = -beta
    cdef double complex two_beta_n = 2.0 * beta / n
    cdef double complex[::1] buf = np.empty(n, dtype=np.complex128)
    cdef double complex acc
    cdef double complex bv, v_new, left, right, bk, vb
    cdef Py_ssize_t i, k

    with nogil:
        for i in range(n):
            buf[i] = U[i, 0] - v
        acc = _canonical_sum(buf)
        bv = v + two_beta_n * acc

        for i in range(n):
            # fused explicit half + forward sweep
            for k in range(m):
                left = v if k == 0 else U[i, k - 1]
                right = U[i, k + 1] if k < m - 1 else 0.0
                bk = U[i, k] + beta * (left - 2.0 * U[i, k] + right)
                if k == 0:
                    x[i, 0] = bk * inv_den[0]
                else:
                    x[i, k] = (bk - off * x[i, k - 1]) * inv_den[k]
            for k in range(m - 2, -1, -1):
                x[i, k] = x[i, k] - cp[k] * x[i, k + 1]

        for i in range(n):
            buf[i] = x[i, 0]
        acc = _canonical_sum(buf)
        v_new = (bv + two_beta_n * acc) * inv_schur
        vb = v_new * beta
        for i in range(n):
            for k in range(m):
                x[i, k] = x[i, k] + vb * y[k]
    return complex(v_new), out


def nl_damp_step(z_in, a_in, double lam, double alpha, double dt):
    cdef const double complex[::1] z = np.ascontiguousarray(z_in, dtype=np.complex128).ravel()
    cdef const double[::1] a = np.ascontiguousarray(a_in, dtype=np.float64).ravel()
    shape = np.shape(z_in)
    out = np.empty(z.shape[0], dtype=np.complex128)
    cdef double complex[::1] w = out
    cdef double p = alpha - 1.0
    cdef double r2, pw, phase, decay, ak, c, s
    cdef Py_ssize_t k, j
    # alpha odd makes alpha - 1 even: |u|^(alpha-1) = (|u|^2)^half by repeated products
    cdef int half = <int>(p / 2.0)
    cdef bint integral = (2.0 * half == p)
    with nogil:
        for k in range(z.shape[0]):
            r2 = z[k].real * z[k].real + z[k].imag * z[k].imag
            if integral:
                pw = 1.0
                for j in range(half):
                    pw = pw * r2
            else:
                pw = pow(sqrt(r2), p)
            ak = a[k]
            if ak != 0.0:
                phase = lam * pw * (-expm1(-p * ak * dt)) / (p * ak)
                decay = exp(-ak * dt)
            else:
                phase = lam * pw * dt
                decay = 1.0
            c = cos(phase) * decay
            s = sin(phase) * decay
            w[k].real = z[k].real * c - z[k].imag * s
            w[k].imag = z[k].real * s + z[k].imag * c
    return out.reshape(shape)
