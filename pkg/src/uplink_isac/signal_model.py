"""Uplink ISAC signal model: scenario configuration, random generators,
frame synthesis and the real-valued reformulation used by the detectors.

Matrices follow the column-stacking convention ``vec(A X B^T) = (B kron A) vec(X)``
so every Kronecker-structured operator can be applied in ``M_r x L`` form.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import sqrtm


@dataclass(frozen=True)
class SystemConfig:
    """Dimensions and powers of one scenario.

    Attributes:
        mt: number of sensing transmit antennas ``M_t``.
        mr: number of receive antennas ``M_r``.
        k_users: number of single-antenna communication users ``K``.
        snapshots: snapshots processed jointly ``L`` (must exceed ``mt``).
        p_c: communication transmit power per user (W).
        p_r: sensing transmit power (W).
        sigma2: receiver noise power (W).
    """

    mt: int = 4
    mr: int = 8
    k_users: int = 8
    snapshots: int = 16
    p_c: float = 1.0
    p_r: float = 1.0
    sigma2: float = 0.01

    def __post_init__(self):
        if self.mt < 1 or self.mr < 1 or self.k_users < 1:
            raise ValueError("antenna and user counts must be >= 1")
        if self.k_users > self.mr:
            raise ValueError(f"k_users={self.k_users} exceeds mr={self.mr}")
        if self.snapshots <= self.mt:
            raise ValueError(f"snapshots={self.snapshots} must exceed mt={self.mt}")
        if self.p_c <= 0 or self.sigma2 <= 0 or self.p_r < 0:
            raise ValueError("p_c and sigma2 must be positive, p_r non-negative")

    def replace(self, **changes) -> "SystemConfig":
        kw = {f: getattr(self, f) for f in self.__dataclass_fields__}
        kw.update(changes)
        return SystemConfig(**kw)


@dataclass(frozen=True)
class Constellation:
    """Unit-average-energy symbol alphabet.

    ``labels[i]`` is the Gray bit label of ``points[i]``. ``hull_bounds`` is the
    per-real-dimension interval of the convex hull (both QPSK variants here
    are square, so the hull is a box and projection is a clamp).
    """

    name: str
    points: np.ndarray
    labels: np.ndarray
    bits_per_symbol: int
    d_min: float
    hull_bounds: tuple

    @property
    def size(self) -> int:
        return len(self.points)

    def bits(self, indices: np.ndarray) -> np.ndarray:
        """Bit array of shape ``indices.shape + (bits_per_symbol,)``, MSB first."""
        lab = self.labels[np.asarray(indices)]
        shifts = np.arange(self.bits_per_symbol - 1, -1, -1)
        return (lab[..., None] >> shifts) & 1


def _min_distance(points):
    diff = np.abs(points[:, None] - points[None, :])
    return float(diff[~np.eye(len(points), dtype=bool)].min())


def constellation(name: str) -> Constellation:
    """Build a named alphabet: ``"qam4"`` or ``"psk4"``.

    ``qam4`` indexes points by their Gray label (bit 0 -> sign of the real
    part, bit 1 -> sign of the imaginary part). ``psk4`` orders the same four
    points by phase (pi/4, 3pi/4, ...) with labels ``k ^ (k >> 1)``.
    """
    s = 1.0 / np.sqrt(2.0)
    if name == "qam4":
        idx = np.arange(4)
        b0, b1 = idx >> 1, idx & 1
        points = ((1 - 2 * b0) + 1j * (1 - 2 * b1)) * s
        labels = idx
    elif name == "psk4":
        k = np.arange(4)
        points = np.exp(1j * (np.pi / 4 + k * np.pi / 2))
        # snap to exact +-1/sqrt(2) so hull membership is exact
        points = np.sign(points.real) * s + 1j * np.sign(points.imag) * s
        labels = k ^ (k >> 1)
    else:
        raise ValueError(f"unknown constellation {name!r}")
    points = points.astype(complex)
    return Constellation(
        name=name,
        points=points,
        labels=labels.astype(np.int64),
        bits_per_symbol=2,
        d_min=_min_distance(points),
        hull_bounds=(-s, s),
    )


@dataclass
class Frame:
    """One coherent processing block ``Y = H_c X_c + H_r X_r + N``."""

    cfg: SystemConfig
    h_c: np.ndarray
    x_r: np.ndarray
    h_r: np.ndarray
    x_c: np.ndarray
    noise: np.ndarray
    y: np.ndarray
    symbol_idx: Optional[np.ndarray] = None


def crandn(rng, shape, var=1.0):
    """Circularly-symmetric complex Gaussian samples with variance ``var``."""
    return np.sqrt(var / 2.0) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def gen_comm_channel(cfg: SystemConfig, corr: float, rng) -> np.ndarray:
    """CU channel ``H_c`` (``M_r x K``) with unit-variance entries.

    For ``corr > 0`` a receive-side exponential correlation
    ``R[i, j] = corr**|i - j|`` is applied as ``R^{1/2} H_iid``; the
    diagonal of ``R`` is one so ``E||H_c||_F^2 = K M_r`` is preserved.
    """
    if not 0.0 <= corr < 1.0:
        raise ValueError("corr must lie in [0, 1)")
    h = crandn(rng, (cfg.mr, cfg.k_users))
    if corr > 0:
        i = np.arange(cfg.mr)
        r = corr ** np.abs(i[:, None] - i[None, :])
        h = np.real_if_close(sqrtm(r)) @ h
    return h


def gen_radar_waveform(cfg: SystemConfig) -> np.ndarray:
    """Deterministic orthogonal waveform with ``X_r X_r^H = (P_r L / M_t) I``.

    Rows are the first ``M_t`` rows of the unitary ``L``-point DFT matrix.
    """
    mt, L = cfg.mt, cfg.snapshots
    if L <= mt:
        raise ValueError("radar waveform needs snapshots > mt")
    n = np.arange(L)
    rows = np.exp(-2j * np.pi * np.outer(np.arange(mt), n) / L) / np.sqrt(L)
    return np.sqrt(cfg.p_r * L / mt) * rows


def gen_target_response(cfg: SystemConfig, target_power: float, rng) -> np.ndarray:
    """Target response ``H_r`` (``M_r x M_t``) scaled so that
    ``E||H_r X_r||_F^2 / L = target_power`` under the orthogonal waveform."""
    if target_power < 0:
        raise ValueError("target_power must be non-negative")
    if target_power == 0:
        return np.zeros((cfg.mr, cfg.mt), dtype=complex)
    if cfg.p_r == 0:
        raise ValueError("target_power > 0 requires p_r > 0")
    var = target_power / (cfg.mr * cfg.p_r)
    return crandn(rng, (cfg.mr, cfg.mt), var)


def gen_symbol_indices(cfg: SystemConfig, cons: Constellation, rng) -> np.ndarray:
    return rng.integers(0, cons.size, size=(cfg.k_users, cfg.snapshots))


def gen_symbols(cfg: SystemConfig, cons: Constellation, rng) -> np.ndarray:
    """Uniform i.i.d. symbols ``K x L`` scaled by ``sqrt(P_c)``."""
    return np.sqrt(cfg.p_c) * cons.points[gen_symbol_indices(cfg, cons, rng)]


def synthesize_frame(cfg: SystemConfig, cons: Constellation, corr: float,
                     target_power: float, rng, x_r: Optional[np.ndarray] = None) -> Frame:
    """Draw one frame. ``x_r`` may be passed in to reuse a precomputed waveform."""
    h_c = gen_comm_channel(cfg, corr, rng)
    if x_r is None:
        x_r = gen_radar_waveform(cfg)
    h_r = gen_target_response(cfg, target_power, rng)
    return _frame_given_channels(cfg, cons, h_c, x_r, h_r, rng)


def _frame_given_channels(cfg, cons, h_c, x_r, h_r, rng) -> Frame:
    idx = gen_symbol_indices(cfg, cons, rng)
    x_c = np.sqrt(cfg.p_c) * cons.points[idx]
    noise = crandn(rng, (cfg.mr, cfg.snapshots), cfg.sigma2)
    y = h_c @ x_c + h_r @ x_r + noise
    return Frame(cfg, h_c, x_r, h_r, x_c, noise, y, idx)


def synthesize_subblocks(cfg: SystemConfig, cons: Constellation, corr: float,
                         target_power: float, rng, n: int) -> list:
    """``n`` consecutive sub-block frames within one coherent interval.

    ``h_c``, ``h_r`` and the waveform are shared; symbols and noise are fresh
    per sub-block. ``cfg.snapshots`` is the sub-block length.
    """
    h_c = gen_comm_channel(cfg, corr, rng)
    x_r = gen_radar_waveform(cfg)
    h_r = gen_target_response(cfg, target_power, rng)
    return [_frame_given_channels(cfg, cons, h_c, x_r, h_r, rng) for _ in range(n)]


# --- vectorization and real embedding -------------------------------------

def vec(m: np.ndarray) -> np.ndarray:
    return np.asarray(m).reshape(-1, order="F")


def unvec(v: np.ndarray, rows: int) -> np.ndarray:
    v = np.asarray(v)
    return v.reshape(rows, v.size // rows, order="F")


def complex_to_real(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v).ravel()
    return np.concatenate([v.real, v.imag])


def real_to_complex(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float).ravel()
    n = v.size // 2
    return v[:n] + 1j * v[n:]


def real_embedding(g: np.ndarray) -> np.ndarray:
    """Dense ``[[Re G, -Im G], [Im G, Re G]]``."""
    return np.block([[g.real, -g.imag], [g.imag, g.real]])


@dataclass
class RealProblem:
    """Real-valued least-squares view ``||y_bar - G_bar x_bar||^2``.

    ``g_bar_apply`` maps ``2LK`` to ``2LM_r`` reals; ``g_bar_adjoint`` is its
    transpose. ``structure`` optionally holds the Kronecker factors
    ``(h_c, p_fp)`` so detectors can take the matrix-form fast path.
    """

    y_bar: np.ndarray
    g_bar_apply: Callable[[np.ndarray], np.ndarray]
    g_bar_adjoint: Callable[[np.ndarray], np.ndarray]
    dims: tuple
    structure: Optional[tuple] = field(default=None, repr=False)

    def residual_sq(self, x_bar: np.ndarray) -> float:
        r = self.y_bar - self.g_bar_apply(x_bar)
        return float(r @ r)


def _dense_adjoint(g_apply, n_in, n_out):
    cols = [g_apply(e) for e in np.eye(n_in, dtype=complex)]
    g = np.stack(cols, axis=1) if cols else np.zeros((n_out, 0), complex)
    gh = g.conj().T
    return lambda v: gh @ v


def to_real_problem(y_fp: np.ndarray, g_fp_apply: Callable, dims: tuple,
                    g_fp_adjoint: Optional[Callable] = None,
                    structure: Optional[tuple] = None) -> RealProblem:
    """Real embedding of ``min ||y_fp - G x||`` where ``G`` is given as a
    complex linear map ``C^{LK} -> C^{LM_r}``.

    ``dims = (L, K, M_r)``. Without an explicit adjoint one is assembled
    densely from ``g_fp_apply``; that is only sensible for small problems.
    """
    L, K, Mr = dims
    y_fp = np.asarray(y_fp).ravel()
    if y_fp.size != L * Mr:
        raise ValueError(f"y_fp has length {y_fp.size}, expected {L * Mr}")
    if g_fp_adjoint is None:
        g_fp_adjoint = _dense_adjoint(g_fp_apply, L * K, L * Mr)

    def apply(x_bar):
        x_bar = np.asarray(x_bar, dtype=float)
        if x_bar.size != 2 * L * K:
            raise ValueError(f"x_bar has length {x_bar.size}, expected {2 * L * K}")
        return complex_to_real(g_fp_apply(real_to_complex(x_bar)))

    def adjoint(r_bar):
        return complex_to_real(g_fp_adjoint(real_to_complex(r_bar)))

    return RealProblem(complex_to_real(y_fp), apply, adjoint, dims, structure)


def nearest_indices(x: np.ndarray, cons: Constellation, scale: float = 1.0) -> np.ndarray:
    """Index of the nearest (scaled) constellation point; ties go to the lowest index."""
    x = np.asarray(x)
    d = np.abs(x[..., None] - scale * cons.points)
    return np.argmin(d, axis=-1)


def quantize_to_alphabet(x_soft: np.ndarray, cons: Constellation, k_users: int,
                         scale: float = 1.0) -> np.ndarray:
    """Hard decision on a real ``2LK`` soft vector, returned as ``K x L``."""
    xc = unvec(real_to_complex(x_soft), k_users)
    return scale * cons.points[nearest_indices(xc, cons, scale)]
