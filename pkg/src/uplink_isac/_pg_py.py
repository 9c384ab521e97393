"""Pure-NumPy projected-gradient inner loop (reference and fallback).

Works on the complex ``K x L`` iterate. With ``A = H^H H``, ``Q = P^T P^*`` and
``B = H^H Y Q`` the real gradient ``2 G^T G x - 2 G^T y - 2 mu x_k`` maps to
``2 (A Z Q - B) - 2 mu X_k``.
"""

import math

import numpy as np


def _clamp(t, lo, hi):
    return np.clip(t.real, lo, hi) + 1j * np.clip(t.imag, lo, hi)


def pg_inner(A, Q, B, X, Xprev, mu, beta, k_max, lo, hi, accel, tol, history=None):
    """Run up to ``k_max`` extrapolated PG steps in place on ``X``/``Xprev``.

    ``history`` (a list) receives ``X`` after every step when given.
    Returns the number of steps taken.
    """
    tau = 1.0
    two_beta = 2.0 * beta
    for k in range(k_max):
        if accel:
            tau_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * tau * tau))
            alpha = (tau - 1.0) / tau_next
            tau = tau_next
            Z = X + alpha * (X - Xprev)
        else:
            Z = X
        T = Z - two_beta * (A @ Z @ Q - B) + two_beta * mu * X
        if not np.all(np.isfinite(T)):
            raise FloatingPointError(f"non-finite iterate at inner step {k}")
        Xn = _clamp(T, lo, hi)
        step = max(np.max(np.abs(Xn.real - X.real)), np.max(np.abs(Xn.imag - X.imag)))
        Xprev[...] = X
        X[...] = Xn
        if history is not None:
            history.append(X.copy())
        if step < tol:
            return k + 1
    return k_max
