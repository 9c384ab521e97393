"""Symbol detectors for the flexible-projection detection problem
``min ||y_fp - G_fp x||^2`` over the alphabet.

* ``zf_detect``: Kronecker pseudoinverse, used as the homotopy initializer.
* ``ml_detect_exhaustive``: brute force over the alphabet, tiny instances only.
* ``pg_inner_solve``: one inner loop of extrapolated projected gradient on the
  penalized box relaxation ``||y - G x||^2 - mu ||x||^2``.
* ``homotopy_detect`` / ``dfp_detect``: two-loop drivers with a growing
  penalty; the dynamic variant also shrinks ``rho_l = epsilon**l``.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import kernels
from .projection import (FlexProjector, ProjectorPair, apply_flex_channel,
                         apply_flex_channel_adjoint, apply_flex_to_received, pinv_flex)
from .signal_model import (Constellation, RealProblem, complex_to_real, nearest_indices,
                           real_to_complex, to_real_problem, unvec, vec)

log = logging.getLogger(__name__)

ML_GUARD = 2 ** 20
ML_TIE_RTOL = 1e-9
ZF_COND_LIMIT = 1e12


@dataclass(frozen=True)
class HomotopyConfig:
    """Schedules for the two-loop homotopy detector.

    ``mu_growth=None`` picks the growth factor per frame so the penalty
    crosses ``lambda_1(G^T G)`` at outer step ``mu_cross * l_max``
    (halfway by default).
    ``beta_rule`` is ``"lipschitz"`` (``1 / (2 ||G||_2^2)``) or ``"literal"``
    (``1 / ||G||_2``); ``alpha_rule`` is ``"nesterov"`` or ``"none"``.
    """

    mu0: float = 1e-3
    mu_growth: Optional[float] = None
    epsilon: float = 0.05
    l_max: int = 50
    k_max: int = 50
    alpha_rule: str = "nesterov"
    beta_rule: str = "lipschitz"
    mu_min: float = 1e-6
    tol: float = 1e-8
    mu_cross: float = 0.5

    def __post_init__(self):
        if self.mu0 < 0:
            raise ValueError("mu0 must be >= 0")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.l_max < 1 or self.k_max < 1:
            raise ValueError("l_max and k_max must be >= 1")
        if not 0.0 < self.mu_cross <= 1.0:
            raise ValueError("mu_cross must lie in (0, 1]")
        if self.mu_growth is not None and self.mu_growth <= 1.0:
            raise ValueError("mu_growth must exceed 1")
        if self.alpha_rule not in ("nesterov", "none"):
            raise ValueError(f"unknown alpha_rule {self.alpha_rule!r}")
        if self.beta_rule not in ("lipschitz", "literal"):
            raise ValueError(f"unknown beta_rule {self.beta_rule!r}")

    @classmethod
    def desk(cls, **kw):
        return cls(**kw)

    @classmethod
    def paper(cls, **kw):
        kw.setdefault("l_max", 200)
        kw.setdefault("k_max", 100)
        return cls(**kw)

    def replace(self, **kw) -> "HomotopyConfig":
        return replace(self, **kw)


@dataclass
class DetectorState:
    """Inner-loop state on the complex ``K x L`` iterate.

    ``x_cur``/``x_prev`` are the real views ``[Re vec X; Im vec X]``.
    """

    X: np.ndarray
    X_prev: np.ndarray
    k: int = 0
    l: int = 0
    history: Optional[list] = None

    @classmethod
    def start(cls, X0, l=0):
        X0 = np.ascontiguousarray(X0, dtype=complex)
        return cls(X0.copy(), X0.copy(), 0, l)

    @property
    def x_cur(self):
        return complex_to_real(vec(self.X))

    @property
    def x_prev(self):
        return complex_to_real(vec(self.X_prev))


def clamp_to_hull(X, lo, hi):
    """Per-dimension projection onto the box hull (clamp real and imaginary parts)."""
    return np.clip(X.real, lo, hi) + 1j * np.clip(X.imag, lo, hi)


def penalty_threshold(h_c) -> float:
    """``lambda_1(H_c^H H_c)``, equal to ``lambda_1(G_bar^T G_bar)`` for every rho in (0, 1]."""
    return float(np.linalg.norm(h_c, 2) ** 2)


def auto_mu_growth(threshold, mu0, l_max, mu_min=1e-6, cross=0.5):
    """Growth factor that lifts the penalty above ``threshold`` by outer step ``cross * l_max``."""
    steps = max(int(cross * l_max), 1)
    start = max(mu0, mu_min)
    return max((threshold / start) ** (1.0 / steps) * 1.05, 1.0 + 1e-6)


def penalty_schedule(cfg: HomotopyConfig, threshold: float) -> np.ndarray:
    growth = cfg.mu_growth or auto_mu_growth(threshold, cfg.mu0, cfg.l_max,
                                              cfg.mu_min, cfg.mu_cross)
    mus = np.empty(cfg.l_max)
    mu = cfg.mu0
    for l in range(cfg.l_max):
        mus[l] = mu
        mu = growth * max(mu, cfg.mu_min)
    if mus[-1] <= threshold:
        log.warning("final penalty %.3g does not exceed lambda_1 = %.3g", mus[-1], threshold)
    return mus


def step_size(cfg: HomotopyConfig, h_c) -> float:
    # ||G_l||_2 = max(1, rho_l) ||H_c||_2 = ||H_c||_2 for all rho in [0, 1]
    g_norm = float(np.linalg.norm(h_c, 2))
    if cfg.beta_rule == "literal":
        return 1.0 / g_norm
    return 1.0 / (2.0 * g_norm ** 2)


# --- linear detectors ------------------------------------------------------

def zf_detect(fp: FlexProjector, h_c, y_fp) -> np.ndarray:
    """Soft ZF estimate ``G_fp^+ y_fp`` as a real ``2LK`` vector.

    Computed as ``H_c^+ Y_fp (P_fp^+)^T`` so no ``LM_r x LK`` matrix is formed.
    """
    s = np.linalg.svd(h_c, compute_uv=False)
    if s[-1] == 0 or s[0] / s[-1] > ZF_COND_LIMIT:
        raise np.linalg.LinAlgError("H_c is ill-conditioned for zero forcing")
    y_m = unvec(y_fp, h_c.shape[0])
    X = np.linalg.pinv(h_c) @ y_m @ pinv_flex(fp).T
    return complex_to_real(vec(X))


def ml_objective(fp: FlexProjector, h_c, y_fp, X) -> np.ndarray:
    """``||y_fp - G_fp vec(X)||^2`` for one ``K x L`` matrix or a stack ``(N, K, L)``."""
    y_m = unvec(y_fp, h_c.shape[0])
    r = y_m - h_c @ X @ fp.p_fp.T
    return np.sum(np.abs(r) ** 2, axis=(-2, -1))


def ml_detect_exhaustive(fp: FlexProjector, h_c, y_fp, cons: Constellation,
                         scale: float = 1.0, chunk: int = 1 << 15) -> np.ndarray:
    """Global minimizer of the detection objective over ``(scale * alphabet)^{K x L}``.

    Candidates are enumerated lexicographically in ``vec`` order (first entry
    most significant). Objectives within ``ML_TIE_RTOL`` of the minimum count
    as ties and the first such candidate wins, so rounding noise cannot pick
    between exactly-tied hypotheses (the projected problem is rank deficient).
    """
    K, L = h_c.shape[1], fp.pair.snapshots
    n_sym = K * L
    total = cons.size ** n_sym
    if total > ML_GUARD:
        raise ValueError(f"{total} hypotheses exceed the exhaustive-search guard {ML_GUARD}")
    pts = scale * cons.points
    weights = cons.size ** np.arange(n_sym - 1, -1, -1)
    best_val, best_idx = np.inf, None
    for start in range(0, total, chunk):
        codes = np.arange(start, min(start + chunk, total))
        digits = (codes[:, None] // weights) % cons.size
        X = pts[digits].reshape(len(codes), L, K).transpose(0, 2, 1)
        obj = ml_objective(fp, h_c, y_fp, X)
        m = obj.min()
        if m < best_val - _tie_tol(best_val):
            i = int(np.flatnonzero(obj <= m + _tie_tol(m))[0])
            best_val, best_idx = obj[i], digits[i]
    return pts[best_idx].reshape(L, K).T


def _tie_tol(v):
    return ML_TIE_RTOL * v + 1e-300 if np.isfinite(v) else 0.0


# --- projected gradient ----------------------------------------------------

def flex_real_problem(fp: FlexProjector, h_c, y) -> RealProblem:
    """Real problem for received matrix ``y`` (``M_r x L``) under projector ``fp``."""
    Mr, K = h_c.shape
    L = fp.pair.snapshots
    return to_real_problem(
        apply_flex_to_received(fp, y),
        lambda x: apply_flex_channel(fp, h_c, x),
        (L, K, Mr),
        g_fp_adjoint=lambda r: apply_flex_channel_adjoint(fp, h_c, r),
        structure=(h_c, fp),
    )


def penalized_objective(problem: RealProblem, x_bar, mu) -> float:
    """``F_mu(x) = ||y_bar - G_bar x||^2 - mu ||x||^2``."""
    x_bar = np.asarray(x_bar, dtype=float)
    return problem.residual_sq(x_bar) - mu * float(x_bar @ x_bar)


def majorant_gradient(problem: RealProblem, x_bar, x_k, mu) -> np.ndarray:
    """Gradient of the linearized majorant at ``x_bar`` around the anchor ``x_k``."""
    r = problem.g_bar_apply(x_bar) - problem.y_bar
    return 2.0 * problem.g_bar_adjoint(r) - 2.0 * mu * np.asarray(x_k, dtype=float)


def _normal_parts(problem: RealProblem):
    h_c, fp = problem.structure
    L, K, Mr = problem.dims
    A = h_c.conj().T @ h_c
    Q = fp.gram
    y_fp = unvec(real_to_complex(problem.y_bar), Mr)
    B = h_c.conj().T @ y_fp @ fp.p_fp.conj()
    return A, Q, B


def pg_inner_solve(state: DetectorState, problem: RealProblem, mu: float,
                   cfg: HomotopyConfig, beta: float, hull=(-np.inf, np.inf),
                   record: bool = False, backend: Optional[str] = None) -> DetectorState:
    """Run one inner loop (up to ``cfg.k_max`` steps) starting from ``state``.

    Each step: extrapolate ``z = x + alpha_k (x - x_prev)``, take a gradient
    step on the majorant anchored at ``x``, clamp to the hull box. The
    extrapolation sequence restarts at every call. ``record=True`` stores
    every iterate in ``state.history``.
    """
    lo, hi = hull
    accel = cfg.alpha_rule == "nesterov"
    if problem.structure is not None:
        A, Q, B = _normal_parts(problem)
        hist = [] if record else None
        n = kernels.pg_inner(A, Q, B, state.X, state.X_prev, mu, beta, cfg.k_max,
                             lo, hi, accel, cfg.tol, history=hist, backend=backend)
        state.k += n
        if record:
            state.history = (state.history or []) + hist
        return state
    # generic operator path on real vectors
    K = problem.dims[1]
    x = state.x_cur
    xp = state.x_prev
    hist = [] if record else None
    tau = 1.0
    for k in range(cfg.k_max):
        if accel:
            tau_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * tau * tau))
            z = x + (tau - 1.0) / tau_next * (x - xp)
            tau = tau_next
        else:
            z = x
        t = z - beta * majorant_gradient(problem, z, x, mu)
        if not np.all(np.isfinite(t)):
            raise FloatingPointError(f"non-finite iterate at inner step {k}")
        xn = np.clip(t, lo, hi)
        step = np.max(np.abs(xn - x))
        xp, x = x, xn
        state.k += 1
        if record:
            hist.append(unvec(real_to_complex(x), K))
        if step < cfg.tol:
            break
    state.X = np.ascontiguousarray(unvec(real_to_complex(x), K))
    state.X_prev = np.ascontiguousarray(unvec(real_to_complex(xp), K))
    if record:
        state.history = (state.history or []) + hist
    return state


# --- homotopy drivers ------------------------------------------------------

@dataclass
class HomotopyTrace:
    """Per-outer-step record: rho, mu, and the start/end iterates."""

    rhos: list = field(default_factory=list)
    mus: list = field(default_factory=list)
    starts: list = field(default_factory=list)
    ends: list = field(default_factory=list)
    inner_steps: list = field(default_factory=list)


def _homotopy(h_c, pair: ProjectorPair, rhos, linear_term, X0, cons, scale, cfg,
              trace=None, backend=None):
    """Shared outer loop. ``linear_term(fp)`` returns ``B = H^H Y_fp P_fp^*`` for
    the projector of the current outer step."""
    lo, hi = (scale * b for b in cons.hull_bounds)
    threshold = penalty_threshold(h_c)
    mus = penalty_schedule(cfg, threshold)
    beta = step_size(cfg, h_c)
    A = h_c.conj().T @ h_c
    state = DetectorState.start(clamp_to_hull(X0, lo, hi))
    accel = cfg.alpha_rule == "nesterov"
    for l in range(cfg.l_max):
        fp = FlexProjector(pair, float(rhos[l]))
        B = linear_term(fp)
        if trace is not None:
            trace.rhos.append(fp.rho)
            trace.mus.append(float(mus[l]))
            trace.starts.append(state.X.copy())
        # warm start: the previous outer solution seeds this step, momentum reset
        state.X_prev[...] = state.X
        n = kernels.pg_inner(A, fp.gram, B, state.X, state.X_prev, mus[l], beta,
                             cfg.k_max, lo, hi, accel, cfg.tol, backend=backend)
        state.k += n
        state.l = l + 1
        if trace is not None:
            trace.ends.append(state.X.copy())
            trace.inner_steps.append(n)
    return state.X


def homotopy_detect(fp: FlexProjector, h_c, y_fp, cons: Constellation, cfg: HomotopyConfig,
                    scale: float = 1.0, x0=None, soft: bool = False, trace=None,
                    backend=None) -> np.ndarray:
    """Fixed-rho homotopy detector.

    Starts from the ZF estimate (clamped to the hull) unless ``x0`` is given,
    raises the penalty over ``cfg.l_max`` outer steps, and quantizes the final
    iterate. ``soft=True`` returns the final continuous ``K x L`` iterate.
    """
    Mr, K = h_c.shape
    if x0 is None:
        x0 = unvec(real_to_complex(zf_detect(fp, h_c, y_fp)), K)
    B = h_c.conj().T @ unvec(y_fp, Mr) @ fp.p_fp.conj()
    X = _homotopy(h_c, fp.pair, [fp.rho] * cfg.l_max, lambda _fp: B, x0, cons, scale,
                  cfg, trace, backend)
    if soft:
        return X
    return scale * cons.points[nearest_indices(X, cons, scale)]


def dfp_detect(pair: ProjectorPair, h_c, y, cons: Constellation, cfg: HomotopyConfig,
               scale: float = 1.0, soft: bool = False, trace=None, backend=None,
               x0=None) -> np.ndarray:
    """Dynamic flexible-projection detector: ``rho_l = epsilon**l`` per outer step.

    ``y`` is the raw received matrix ``M_r x L``. The start point is ZF at
    ``rho_0 = 1``.
    """
    Mr, K = h_c.shape
    y = np.asarray(y)
    if x0 is None:
        x0 = unvec(real_to_complex(zf_detect(FlexProjector(pair, 1.0), h_c, vec(y))), K)
    rhos = cfg.epsilon ** np.arange(cfg.l_max, dtype=float)
    hy = h_c.conj().T @ y
    X = _homotopy(h_c, pair, rhos, lambda fp: hy @ fp.gram, x0, cons, scale, cfg,
                  trace, backend)
    if soft:
        return X
    return scale * cons.points[nearest_indices(X, cons, scale)]
