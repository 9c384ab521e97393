"""Closed-form performance calculators for the flexible-projection receiver.

The PEP expressions are the large-array approximations (labelled
``approx``); :func:`pep_exact_pair` is the exact binary-test error
probability for a fixed channel, used as the Monte Carlo reference.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .detectors import penalty_threshold  # noqa: F401  (re-exported)
from .projection import FlexProjector, apply_flex_channel, build_projectors
from .signal_model import (Constellation, SystemConfig, crandn, gen_comm_channel,
                           gen_radar_waveform, gen_symbols, gen_target_response, vec)


@dataclass(frozen=True)
class AnalysisPoint:
    """Operating point. ``dims = (L, M_t, M_r, K)``; ``d_min`` is measured on
    the power-scaled constellation (``sqrt(P_c) * d_min`` of the unit alphabet)."""

    rho: float
    p_c: float
    p_s: float
    sigma2: float
    dims: tuple
    d_min: float

    def __post_init__(self):
        L, mt, mr, k = self.dims
        if min(L, mr, k) < 1 or mt < 0:
            raise ValueError("dimensions must be positive")
        if L <= mt:
            raise ValueError("need L > M_t")
        if min(self.p_c, self.p_s, self.sigma2, self.d_min) < 0:
            raise ValueError("powers and d_min must be >= 0")
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError("rho must lie in [0, 1]")

    @classmethod
    def from_config(cls, cfg: SystemConfig, cons: Constellation, rho: float, p_s: float):
        return cls(rho, cfg.p_c, p_s, cfg.sigma2, (cfg.snapshots, cfg.mt, cfg.mr, cfg.k_users),
                   float(np.sqrt(cfg.p_c) * cons.d_min))

    def with_rho(self, rho):
        return AnalysisPoint(rho, self.p_c, self.p_s, self.sigma2, self.dims, self.d_min)


def _proj_energy(pt):
    """``||P_fp||_F^2 = L - (1 - rho^2) M_t``."""
    L, mt, _, _ = pt.dims
    return L - (1.0 - pt.rho ** 2) * mt


def q_function(x):
    """Gaussian tail ``Q(x) = erfc(x / sqrt(2)) / 2``."""
    return 0.5 * erfc(np.asarray(x, dtype=float) / np.sqrt(2.0))


def sigma_ml_sq(pt: AnalysisPoint) -> float:
    """Aggregate interference-plus-noise energy ``rho^2 L P_s + ||P_fp||_F^2 M_r sigma^2``."""
    L, _, mr, _ = pt.dims
    return pt.rho ** 2 * L * pt.p_s + _proj_energy(pt) * mr * pt.sigma2


def sinr_fp(pt: AnalysisPoint) -> float:
    """SINR of the flexible-projection observation."""
    _, _, mr, k = pt.dims
    return pt.p_c * _proj_energy(pt) * k * mr / sigma_ml_sq(pt)


def pep_ml_approx(pt: AnalysisPoint) -> float:
    """Approximate single-error PEP under the ML detector (non-decreasing in rho)."""
    L = pt.dims[0]
    s = sigma_ml_sq(pt)
    if s == 0:
        return 0.0
    return float(q_function(pt.d_min * np.sqrt(_proj_energy(pt)) / (L * np.sqrt(2.0 * s))))


def pep_zf_approx(pt: AnalysisPoint) -> float:
    """Approximate single-error PEP under ZF, ``q(rho)``; undefined at ``rho = 0``
    where the pseudoinverse amplifies noise without bound."""
    if pt.rho <= 0:
        raise ValueError("rho = 0 is not admissible for the ZF detector (infinite noise gain)")
    L, mt, _, _ = pt.dims
    gain = L - mt + mt / pt.rho ** 2
    s = sigma_ml_sq(pt)
    if s == 0:
        return 0.0
    return float(q_function(pt.d_min * L / np.sqrt(2.0 * s * gain)))


def optimal_rho_zf(pt: AnalysisPoint, grid=None):
    """Grid minimiser of ``q(rho)``; returns ``(rho*, q(rho*))``."""
    grid = np.linspace(0.01, 1.0, 100) if grid is None else np.asarray(grid, float)
    vals = np.array([pep_zf_approx(pt.with_rho(r)) for r in grid])
    i = int(np.argmin(vals))
    return float(grid[i]), float(vals[i])


# --- Monte Carlo counterparts ----------------------------------------------

def empirical_sinr(cfg: SystemConfig, cons: Constellation, rho: float, n_trials: int,
                   rng, target_power: float = 1.0, corr: float = 0.0) -> float:
    """Ratio of average projected signal energy to average projected
    interference-plus-noise energy over ``n_trials`` independent frames."""
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    x_r = gen_radar_waveform(cfg)
    fp = FlexProjector(build_projectors(x_r), rho)
    pt = fp.p_fp.T
    sig = intf = 0.0
    for _ in range(n_trials):
        h_c = gen_comm_channel(cfg, corr, rng)
        h_r = gen_target_response(cfg, target_power, rng)
        x_c = gen_symbols(cfg, cons, rng)
        n = crandn(rng, (cfg.mr, cfg.snapshots), cfg.sigma2)
        sig += np.linalg.norm(h_c @ x_c @ pt) ** 2
        intf += np.linalg.norm(h_r @ x_r @ pt) ** 2 + np.linalg.norm(n @ pt) ** 2
    return float(sig / intf)


def pep_exact_pair(fp: FlexProjector, h_c, x_r, delta, p_s: float, sigma2: float, p_r: float):
    """Exact probability that the ML statistic on the projected observation
    prefers ``x + delta`` over the transmitted ``x``.

    Interference ``Gamma_fp (A_r h_r + n)`` is circular Gaussian with
    ``h_r ~ CN(0, v I)``, ``v = p_s / (M_r p_r)``; the error event is
    ``Re(u^H w) > ||u||^2 / 2`` with ``u = G_fp delta``.
    """
    mr = h_c.shape[0]
    u = apply_flex_channel(fp, h_c, vec(delta))
    uu = float(np.vdot(u, u).real)
    if uu == 0:
        return 0.5
    U = u.reshape(mr, -1, order="F")
    v = p_s / (mr * p_r) if p_s > 0 else 0.0
    # Gamma_fp^H u = vec(U conj(P_fp)) and A_r^H Gamma_fp^H u = rho vec(U X_r^H)
    var = fp.rho ** 2 * v * np.linalg.norm(U @ x_r.conj().T) ** 2
    var += sigma2 * np.linalg.norm(U @ fp.p_fp.conj()) ** 2
    return float(q_function(uu / np.sqrt(2.0 * var)))
