"""Flexible projector family built from the radar waveform.

``P_perp`` projects onto the complement of the waveform row space,
``P_par = I - P_perp`` onto the row space itself, and
``P_fp(rho) = P_perp + rho * P_par`` interpolates between the two receiver
endpoints. The Kronecker operators ``P kron I`` and ``P kron H_c`` are only
ever applied through the matrix identity ``vec(A X B^T) = (B kron A) vec X``.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .signal_model import unvec, vec

RANK_TOL = 1e-8


class RankDeficientWaveform(ValueError):
    pass


@dataclass(frozen=True)
class ProjectorPair:
    p_perp: np.ndarray
    p_par: np.ndarray

    @property
    def snapshots(self) -> int:
        return self.p_perp.shape[0]


def identity_pair(L: int) -> ProjectorPair:
    """Pair for a receiver that ignores the waveform (``P_perp = I``)."""
    return ProjectorPair(np.eye(L, dtype=complex), np.zeros((L, L), complex))


def build_projectors(x_r: np.ndarray) -> ProjectorPair:
    """Projector pair for a full-row-rank waveform ``x_r`` (``M_t x L``).

    ``P_par = X_r^T (X_r^* X_r^T)^{-1} X_r^*``.
    """
    x_r = np.atleast_2d(np.asarray(x_r, dtype=complex))
    L = x_r.shape[1]
    if x_r.shape[0] == 0:
        return identity_pair(L)
    gram = x_r.conj() @ x_r.T
    ev = np.linalg.eigvalsh(gram)
    if ev[0] <= 1e-10 * max(ev[-1], np.finfo(float).tiny):
        raise RankDeficientWaveform("radar waveform is not full row rank")
    p_par = x_r.T @ np.linalg.solve(gram, x_r.conj())
    p_par = 0.5 * (p_par + p_par.conj().T)
    return ProjectorPair(np.eye(L) - p_par, p_par)


@dataclass(frozen=True)
class FlexProjector:
    pair: ProjectorPair
    rho: float

    def __post_init__(self):
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError(f"rho={self.rho} outside [0, 1]")

    @cached_property
    def p_fp(self) -> np.ndarray:
        # endpoints are exact so rho=1 / rho=0 reproduce the SIC / projection receivers bitwise
        if self.rho == 1.0:
            return np.eye(self.pair.snapshots, dtype=complex)
        if self.rho == 0.0:
            return self.pair.p_perp
        return self.pair.p_perp + self.rho * self.pair.p_par

    @cached_property
    def gram(self) -> np.ndarray:
        """``P_fp^T P_fp^*``, the right factor of ``G_fp^H G_fp`` in matrix form."""
        if self.rho == 1.0:
            return np.eye(self.pair.snapshots, dtype=complex)
        return (self.pair.p_perp + self.rho ** 2 * self.pair.p_par).conj()


def _check_rows(m, rows, what):
    if m.shape[0] != rows:
        raise ValueError(f"{what} has {m.shape[0]} rows, expected {rows}")


def apply_flex_to_received(fp: FlexProjector, y: np.ndarray) -> np.ndarray:
    """``(P_fp kron I_{M_r}) vec(Y)`` computed as ``vec(Y P_fp^T)``."""
    y = np.asarray(y)
    if y.shape[1] != fp.pair.snapshots:
        raise ValueError("received matrix and projector disagree on L")
    return vec(y @ fp.p_fp.T)


def apply_flex_channel(fp: FlexProjector, h_c: np.ndarray, x_c_vec: np.ndarray) -> np.ndarray:
    """``(P_fp kron H_c) x_c`` computed as ``vec(H_c X_c P_fp^T)``."""
    K = h_c.shape[1]
    x_c_vec = np.asarray(x_c_vec).ravel()
    if x_c_vec.size != K * fp.pair.snapshots:
        raise ValueError(f"x_c_vec has length {x_c_vec.size}, expected {K * fp.pair.snapshots}")
    return vec(h_c @ unvec(x_c_vec, K) @ fp.p_fp.T)


def apply_flex_channel_adjoint(fp: FlexProjector, h_c: np.ndarray, r_vec: np.ndarray) -> np.ndarray:
    """``(P_fp kron H_c)^H r`` computed as ``vec(H_c^H R P_fp^*)``."""
    r = unvec(np.asarray(r_vec).ravel(), h_c.shape[0])
    _check_rows(r, h_c.shape[0], "residual")
    return vec(h_c.conj().T @ r @ fp.p_fp.conj())


def condition_number(fp: FlexProjector, h_c: np.ndarray) -> float:
    """``Cond(G_fp) = Cond(H_c) / rho``; infinite at ``rho = 0``."""
    if fp.rho == 0:
        return np.inf
    s = np.linalg.svd(h_c, compute_uv=False)
    return float(s[0] / (fp.rho * s[-1]))


def effective_rank(x_r: np.ndarray, h_c: np.ndarray, L: int) -> int:
    """Rank of ``G = P_perp kron H_c``: ``(L - M_t) K`` for full-rank inputs."""
    x_r = np.atleast_2d(x_r)
    mt = x_r.shape[0] if x_r.size else 0
    return (L - mt) * h_c.shape[1]


def pinv_flex(fp: FlexProjector) -> np.ndarray:
    """Moore-Penrose pseudoinverse of ``P_fp``: ``P_perp + P_par / rho`` (``P_perp`` at rho=0)."""
    if fp.rho == 0:
        return fp.pair.p_perp.copy()
    if fp.rho == 1:
        return np.eye(fp.pair.snapshots, dtype=complex)
    return fp.pair.p_perp + fp.pair.p_par / fp.rho
