"""Seeded Monte Carlo experiments.

Every frame draws its randomness from ``SeedSequence([seed, grid_index,
frame_index])``, so results do not depend on worker count or scheduling.
All receivers of one run see the same frames.
"""

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import binomtest

from .. import analysis
from ..detectors import dfp_detect, ml_detect_exhaustive, ml_objective, ML_TIE_RTOL
from ..projection import FlexProjector, apply_flex_to_received, build_projectors
from ..receivers import block_receive, oracle_receive, receive
from ..signal_model import (constellation, crandn, gen_comm_channel, gen_radar_waveform,
                            gen_symbol_indices, nearest_indices, synthesize_frame,
                            synthesize_subblocks)
from .config import ExperimentSpec

log = logging.getLogger(__name__)

DETECTION_ERRORS = (FloatingPointError, np.linalg.LinAlgError, RuntimeError, ValueError)


def frame_rng(seed: int, grid_index: int, frame_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(grid_index),
                                                         int(frame_index)]))


def wilson_interval(errors: int, n: int, level: float = 0.95):
    """Wilson score interval for a binomial proportion."""
    if n == 0:
        return 0.0, 1.0
    ci = binomtest(int(errors), int(n)).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


@dataclass
class MetricRecord:
    """Aggregated metrics of one receiver at one grid value.

    ``ber_ci95`` is the half-width of the Wilson interval ``[ber_lo, ber_hi]``;
    ``nmse_ci95`` is ``1.96 * sd / sqrt(n)``.
    """

    grid_value: float
    ber: float
    ber_ci95: float
    nmse: float
    nmse_ci95: float
    n_bits: int
    runtime_s: float
    receiver: str = ""
    bit_errors: int = 0
    ber_lo: float = 0.0
    ber_hi: float = 1.0
    n_failed: int = 0

    @classmethod
    def aggregate(cls, receiver, grid_value, bit_errors, n_bits, nmse_values, runtime_s,
                  n_failed=0):
        lo, hi = wilson_interval(bit_errors, n_bits)
        nm = np.asarray([v for v in nmse_values if np.isfinite(v)], dtype=float)
        if nm.size:
            nmse = float(nm.mean())
            nmse_ci = float(1.96 * nm.std(ddof=1) / np.sqrt(nm.size)) if nm.size > 1 else 0.0
        else:
            nmse, nmse_ci = float("nan"), float("nan")
        ber = bit_errors / n_bits if n_bits else float("nan")
        return cls(float(grid_value), ber, 0.5 * (hi - lo), nmse, nmse_ci, int(n_bits),
                   float(runtime_s), receiver, int(bit_errors), lo, hi, int(n_failed))

    @property
    def nmse_lo(self):
        return self.nmse - self.nmse_ci95

    @property
    def nmse_hi(self):
        return self.nmse + self.nmse_ci95


def _pmap(fn, tasks, workers):
    if workers is None or workers <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


def _nmse(h_hat, h_r):
    den = np.linalg.norm(h_r) ** 2
    return float(np.linalg.norm(h_hat - h_r) ** 2 / den) if den > 0 else float("nan")


def _bit_errors(cons, x_hat, symbol_idx, scale):
    idx = nearest_indices(x_hat, cons, scale)
    return int(np.sum(cons.bits(idx) != cons.bits(symbol_idx)))


# --- frame-level sweeps ------------------------------------------------------

def _frame_job(task):
    spec, gi, value, fi = task
    cfg, p_s, rho, _ = spec.point(value)
    cons = constellation(spec.constellation)
    frame = synthesize_frame(cfg, cons, spec.corr, p_s, frame_rng(spec.seed, gi, fi))
    pair = build_projectors(frame.x_r)
    scale = np.sqrt(cfg.p_c)
    out = []
    for kind in spec.receivers_at(rho):
        t0 = time.perf_counter()
        try:
            res = oracle_receive(frame) if spec.oracle_symbols else \
                receive(kind, frame, cons, spec.detector, pair)
        except DETECTION_ERRORS as exc:
            log.warning("frame %d at %s failed for %s: %s", fi, value, kind.label, exc)
            out.append((kind.label, 0, 0, float("nan"), time.perf_counter() - t0, 1))
            continue
        errs = _bit_errors(cons, res.x_hat, frame.symbol_idx, scale)
        nbits = frame.symbol_idx.size * cons.bits_per_symbol
        out.append((kind.label, errs, nbits, _nmse(res.h_hat, frame.h_r),
                    time.perf_counter() - t0, 0))
    return out


def run_sweep(spec: ExperimentSpec, workers: int = 1) -> list:
    """One :class:`MetricRecord` per (receiver, grid value), receiver-major order."""
    tasks = [(spec, gi, v, fi) for gi, v in enumerate(spec.grid) for fi in range(spec.n_frames)]
    results = _pmap(_frame_job, tasks, workers)
    labels = [k.label for k in spec.receivers_at(spec.point(spec.grid[0])[2])]
    records = []
    for r, _ in enumerate(labels):
        for gi, v in enumerate(spec.grid):
            rows = [results[gi * spec.n_frames + fi][r] for fi in range(spec.n_frames)]
            records.append(MetricRecord.aggregate(
                rows[0][0], v, sum(x[1] for x in rows), sum(x[2] for x in rows),
                [x[3] for x in rows], sum(x[4] for x in rows), sum(x[5] for x in rows)))
    return records


def run_ber_sweep(spec: ExperimentSpec, workers: int = 1) -> list:
    if spec.sweep_var not in ("sir_db", "snr_c_db", "rho"):
        raise ValueError("BER sweeps need sweep_var sir_db, snr_c_db or rho")
    return run_sweep(spec, workers)


def run_nmse_sweep(spec: ExperimentSpec, workers: int = 1) -> list:
    if spec.sweep_var != "snr_s_db":
        raise ValueError("NMSE sweeps need sweep_var snr_s_db")
    return run_sweep(spec, workers)


# --- block structure ---------------------------------------------------------

def _block_job(task):
    spec, gi, value, fi = task
    cfg, p_s, rho, J = spec.point(value)
    cfg = cfg.replace(snapshots=spec.sub_len)
    cons = constellation(spec.constellation)
    frames = synthesize_subblocks(cfg, cons, spec.corr, p_s, frame_rng(spec.seed, gi, fi),
                                  spec.n_blocks * J)
    t0 = time.perf_counter()
    try:
        out = block_receive(frames, cons, spec.detector, J, mode=spec.block_mode,
                            rho=rho, epsilons=spec.epsilons)
    except DETECTION_ERRORS as exc:
        log.warning("block frame %d at J=%d failed: %s", fi, J, exc)
        return 0, 0, float("nan"), time.perf_counter() - t0, 1
    # BER on the last block, the one detected with a prior estimate when n_blocks > 1
    last = slice((spec.n_blocks - 1) * J, spec.n_blocks * J)
    errs = sum(_bit_errors(cons, o.x_hat, f.symbol_idx, np.sqrt(cfg.p_c))
               for o, f in zip(out.sub_outputs[last], frames[last]))
    nbits = J * frames[0].symbol_idx.size * cons.bits_per_symbol
    return errs, nbits, _nmse(out.h_hat, frames[0].h_r), time.perf_counter() - t0, 0


def run_block_sweep(spec: ExperimentSpec, workers: int = 1) -> list:
    """BER and NMSE of the block receiver versus the number of sub-blocks ``J``."""
    if spec.sweep_var != "n_subblocks":
        raise ValueError("block sweeps need sweep_var n_subblocks")
    tasks = [(spec, gi, v, fi) for gi, v in enumerate(spec.grid) for fi in range(spec.n_frames)]
    results = _pmap(_block_job, tasks, workers)
    label = f"block-{spec.block_mode}"
    records = []
    for gi, v in enumerate(spec.grid):
        rows = results[gi * spec.n_frames:(gi + 1) * spec.n_frames]
        records.append(MetricRecord.aggregate(
            label, v, sum(r[0] for r in rows), sum(r[1] for r in rows), [r[2] for r in rows],
            sum(r[3] for r in rows), sum(r[4] for r in rows)))
    return records


# --- formula validation ------------------------------------------------------

@dataclass
class SinrRow:
    rho: float
    analytic: float
    empirical: float
    rel_err: float
    flagged: bool


def run_sinr_validation(spec: ExperimentSpec, n_trials: int = 10_000, tol: float = 0.03) -> list:
    """Closed-form SINR against its Monte Carlo definition at every grid rho.

    Rows are flagged when ``rel_err > tol``; runs below 100 trials are never flagged.
    """
    if spec.sweep_var != "rho":
        raise ValueError("SINR validation sweeps rho")
    cons = constellation(spec.constellation)
    rows = []
    for gi, rho in enumerate(spec.grid):
        cfg, p_s, _, _ = spec.point(rho)
        pt = analysis.AnalysisPoint.from_config(cfg, cons, float(rho), p_s)
        a = analysis.sinr_fp(pt)
        e = analysis.empirical_sinr(cfg, cons, float(rho), n_trials, frame_rng(spec.seed, gi, 0),
                                    target_power=p_s, corr=spec.corr)
        rel = abs(e - a) / a
        rows.append(SinrRow(float(rho), a, e, rel, n_trials >= 100 and rel > tol))
    return rows


@dataclass
class PepRow:
    rho: float
    p_s: float
    channel: int
    n_trials: int
    errors: int
    empirical: float
    exact: float
    se: float
    approx: float

    @property
    def z(self):
        return (self.empirical - self.exact) / self.se if self.se > 0 else 0.0


def hypothesis_pair(cons, x_idx, k, l, scale, distance_scale=1.0):
    """Transmitted matrix and an alternative differing only at ``(k, l)``,
    moved towards the nearest other constellation point and stretched to
    ``distance_scale * d_min``."""
    x = scale * cons.points[x_idx]
    p = cons.points[x_idx[k, l]]
    others = cons.points[cons.points != p]
    q = others[np.argmin(np.abs(others - p))]
    alt = x.copy()
    alt[k, l] = scale * (p + distance_scale * (q - p))
    return x, alt


def pairwise_error_rate(fp, h_c, x_r, x_true, x_alt, p_s, p_r, sigma2, n_trials, rng,
                        batch=10_000):
    """Monte Carlo binary test: count trials where the projected ML statistic
    prefers ``x_alt`` although ``x_true`` was sent."""
    diff = np.argwhere(np.abs(x_alt - x_true) > 0)
    if len(diff) != 1:
        raise ValueError("hypotheses must differ in exactly one entry")
    mr, mt = h_c.shape[0], x_r.shape[0]
    v = p_s / (mr * p_r) if p_s > 0 else 0.0
    pt = fp.p_fp.T
    s_true, s_alt = h_c @ x_true, h_c @ x_alt
    errors, done = 0, 0
    while done < n_trials:
        b = min(batch, n_trials - done)
        y = s_true + crandn(rng, (b, mr, x_r.shape[1]), sigma2)
        if v > 0:
            y = y + crandn(rng, (b, mr, mt), v) @ x_r
        d0 = np.sum(np.abs((y - s_true) @ pt) ** 2, axis=(1, 2))
        d1 = np.sum(np.abs((y - s_alt) @ pt) ** 2, axis=(1, 2))
        errors += int(np.sum(d1 < d0))
        done += b
    return errors


def run_pep_validation(spec: ExperimentSpec, rhos=(0.0, 1.0), p_s_list=(0.0,),
                       n_trials: int = 100_000, n_channels: int = 1, entry=(0, 0),
                       distance_scale: float = 1.0) -> list:
    """Empirical pairwise error versus the exact Q expression, per channel draw."""
    cfg = spec.base
    cons = constellation(spec.constellation)
    x_r = gen_radar_waveform(cfg)
    pair = build_projectors(x_r)
    rows = []
    for c in range(n_channels):
        rng = frame_rng(spec.seed, c, 0)
        h_c = gen_comm_channel(cfg, spec.corr, rng)
        x_idx = gen_symbol_indices(cfg, cons, rng)
        x_true, x_alt = hypothesis_pair(cons, x_idx, *entry, np.sqrt(cfg.p_c), distance_scale)
        for ri, rho in enumerate(rhos):
            fp = FlexProjector(pair, float(rho))
            for si, p_s in enumerate(p_s_list):
                n_err = pairwise_error_rate(fp, h_c, x_r, x_true, x_alt, p_s, cfg.p_r,
                                            cfg.sigma2, n_trials,
                                            frame_rng(spec.seed, c, 1 + ri * len(p_s_list) + si))
                exact = analysis.pep_exact_pair(fp, h_c, x_r, x_alt - x_true, p_s, cfg.sigma2,
                                                cfg.p_r)
                pt = analysis.AnalysisPoint.from_config(cfg, cons, float(rho), p_s)
                emp = n_err / n_trials
                se = np.sqrt(max(exact * (1 - exact), 1e-300) / n_trials)
                rows.append(PepRow(float(rho), float(p_s), c, n_trials, n_err, emp, exact,
                                   float(se), analysis.pep_ml_approx(pt)))
    return rows


# --- exhaustive-ML cross-check ------------------------------------------------

@dataclass
class OracleReport:
    n_frames: int
    agreement: float
    tie_aware_agreement: float
    mean_gap: float
    min_gap: float


def _oracle_job(task):
    spec, fi = task
    cfg = spec.base
    cons = constellation(spec.constellation)
    frame = synthesize_frame(cfg, cons, spec.corr, spec.target_power, frame_rng(spec.seed, 0, fi))
    pair = build_projectors(frame.x_r)
    scale = np.sqrt(cfg.p_c)
    fp0 = FlexProjector(pair, 0.0)
    y0 = apply_flex_to_received(fp0, frame.y)
    x_ml = ml_detect_exhaustive(fp0, frame.h_c, y0, cons, scale=scale)
    x_h = dfp_detect(pair, frame.h_c, frame.y, cons, spec.detector, scale=scale)
    f_ml = float(ml_objective(fp0, frame.h_c, y0, x_ml))
    f_h = float(ml_objective(fp0, frame.h_c, y0, x_h))
    # ties are judged relative to the optimum, with a roundoff floor set by ||y||^2
    tol = ML_TIE_RTOL * f_ml + 1e-12 * float(np.vdot(y0, y0).real)
    return bool(np.array_equal(x_ml, x_h)), f_h - f_ml, tol


def run_ml_oracle_check(spec: ExperimentSpec, workers: int = 1) -> OracleReport:
    """Compare DFP decisions with exhaustive ML on the waveform-complement problem.

    ``tie_aware_agreement`` also counts frames where DFP returns a different
    hypothesis with the same optimal objective (the projected problem has
    exact ties along the waveform null space).
    """
    res = _pmap(_oracle_job, [(spec, fi) for fi in range(spec.n_frames)], workers)
    same = np.array([r[0] for r in res])
    gaps = np.array([r[1] for r in res])
    tie = np.array([abs(g) <= tol for _, g, tol in res])
    rep = OracleReport(len(res), float(same.mean()), float((same | tie).mean()),
                       float(gaps.mean()), float(gaps.min()))
    rep.gaps = gaps  # per-frame objective gaps, kept off the emitted columns
    return rep
