# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False, language_level=3
"""Compiled projected-gradient inner loop.

Same contract as ``_pg_py.pg_inner`` (without ``history``). Complex matrices
are passed as interleaved float64 views of C-contiguous complex128 arrays, so
entry ``(i, j)`` lives at ``[i, 2j]`` (real) and ``[i, 2j + 1]`` (imag).
"""

from libc.math cimport sqrt, fabs, isfinite
import numpy as np


cdef inline double _clip(double v, double lo, double hi) nogil:
    if v < lo:
        return lo
    if v > hi:
        return hi
    return v


def pg_inner(double[:, ::1] A, double[:, ::1] Q, double[:, ::1] B,
             double[:, ::1] X, double[:, ::1] Xprev,
             double mu, double beta, int k_max, double lo, double hi,
             bint accel, double tol):
    cdef Py_ssize_t K = X.shape[0]
    cdef Py_ssize_t L = X.shape[1] // 2
    cdef Py_ssize_t i, j, m, k
    cdef double tau = 1.0, tau_next, alpha = 0.0
    cdef double two_beta = 2.0 * beta
    cdef double two_beta_mu = 2.0 * beta * mu
    cdef double ar, ai, zr, zi, tr, ti, xr, xi, step, d
    cdef double[:, ::1] Z = np.empty((K, 2 * L))
    cdef double[:, ::1] W = np.empty((K, 2 * L))
    cdef double[:, ::1] T = np.empty((K, 2 * L))
    cdef double[:, ::1] V = np.empty((K, 2 * L))
    cdef int taken = k_max
    cdef bint bad = False

    with nogil:
        for k in range(k_max):
            if accel:
                tau_next = 0.5 * (1.0 + sqrt(1.0 + 4.0 * tau * tau))
                alpha = (tau - 1.0) / tau_next
                tau = tau_next
            for i in range(K):
                for j in range(2 * L):
                    Z[i, j] = X[i, j] + alpha * (X[i, j] - Xprev[i, j])
            # W = A Z and V = W Q, accumulated row-wise for contiguous access
            for i in range(K):
                for j in range(2 * L):
                    W[i, j] = 0.0
                    V[i, j] = 0.0
                for m in range(K):
                    ar = A[i, 2 * m]
                    ai = A[i, 2 * m + 1]
                    for j in range(L):
                        zr = Z[m, 2 * j]
                        zi = Z[m, 2 * j + 1]
                        W[i, 2 * j] += ar * zr - ai * zi
                        W[i, 2 * j + 1] += ar * zi + ai * zr
                for m in range(L):
                    ar = W[i, 2 * m]
                    ai = W[i, 2 * m + 1]
                    for j in range(L):
                        zr = Q[m, 2 * j]
                        zi = Q[m, 2 * j + 1]
                        V[i, 2 * j] += ar * zr - ai * zi
                        V[i, 2 * j + 1] += ar * zi + ai * zr
            # T = Z - 2b (V - B) + 2b mu X, then clamp to the hull box
            step = 0.0
            for i in range(K):
                for j in range(L):
                    xr = X[i, 2 * j]
                    xi = X[i, 2 * j + 1]
                    tr = Z[i, 2 * j] - two_beta * (V[i, 2 * j] - B[i, 2 * j]) + two_beta_mu * xr
                    ti = Z[i, 2 * j + 1] - two_beta * (V[i, 2 * j + 1] - B[i, 2 * j + 1]) + two_beta_mu * xi
                    if not (isfinite(tr) and isfinite(ti)):
                        bad = True
                    tr = _clip(tr, lo, hi)
                    ti = _clip(ti, lo, hi)
                    d = fabs(tr - xr)
                    if d > step:
                        step = d
                    d = fabs(ti - xi)
                    if d > step:
                        step = d
                    Xprev[i, 2 * j] = xr
                    Xprev[i, 2 * j + 1] = xi
                    T[i, 2 * j] = tr
                    T[i, 2 * j + 1] = ti
            if bad:
                taken = -(k + 1)
                break
            for i in range(K):
                for j in range(2 * L):
                    X[i, j] = T[i, j]
            if step < tol:
                taken = k + 1
                break
    if taken < 0:
        raise FloatingPointError(f"non-finite iterate at inner step {-taken - 1}")
    return taken
