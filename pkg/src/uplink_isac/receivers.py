"""End-to-end receivers: detect the communication symbols, subtract them, and
estimate the target response by least squares on the remainder.

All receivers return a :class:`ReceiverOutput`. The SIC receiver detects on
the raw signal, the projection receiver on its waveform-complement
component, and the flexible family in between.
"""

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .detectors import HomotopyConfig, dfp_detect, homotopy_detect, ml_detect_exhaustive
from .projection import FlexProjector, ProjectorPair, apply_flex_to_received, build_projectors, identity_pair
from .signal_model import Constellation, Frame


@dataclass(frozen=True)
class ReceiverKind:
    """Receiver selector.

    ``tag`` is one of ``sic``, ``projection``, ``fp``, ``dfp``, ``pdfp``,
    ``block``. ``fp`` needs ``rho``; ``pdfp`` needs two or more distinct
    ``epsilons``; ``block`` needs ``sub_len`` and ``n_sub``.
    """

    tag: str
    rho: Optional[float] = None
    epsilons: tuple = ()
    sub_len: Optional[int] = None
    n_sub: Optional[int] = None

    def __post_init__(self):
        if self.tag not in ("sic", "projection", "fp", "dfp", "pdfp", "block"):
            raise ValueError(f"unknown receiver {self.tag!r}")
        if self.tag == "fp" and (self.rho is None or not 0.0 <= self.rho <= 1.0):
            raise ValueError("fp receiver needs rho in [0, 1]")
        if self.tag == "pdfp":
            eps = set(self.epsilons)
            if len(eps) < 2 or not all(0.0 < e < 1.0 for e in eps):
                raise ValueError("pdfp needs >= 2 distinct epsilons in (0, 1)")
        if self.tag == "block" and (self.sub_len is None or self.n_sub is None):
            raise ValueError("block receiver needs sub_len and n_sub")

    @classmethod
    def parse(cls, text: str) -> "ReceiverKind":
        """Parse ``sic``, ``projection``, ``dfp``, ``fp:0.3``, ``pdfp:0.05,0.5`` or ``block:20,4``."""
        tag, _, arg = text.strip().partition(":")
        tag = tag.strip().lower()
        if tag == "fp":
            return cls(tag, rho=float(arg))
        if tag == "pdfp":
            eps = tuple(float(e) for e in arg.split(",")) if arg else (0.05, 0.5)
            return cls(tag, epsilons=eps)
        if tag == "block":
            sub_len, n_sub = (int(v) for v in arg.split(","))
            return cls(tag, sub_len=sub_len, n_sub=n_sub)
        return cls(tag)

    @property
    def label(self) -> str:
        if self.tag == "fp":
            return f"fp:{self.rho:g}"
        if self.tag == "pdfp":
            return "pdfp:" + ",".join(f"{e:g}" for e in self.epsilons)
        if self.tag == "block":
            return f"block:{self.sub_len},{self.n_sub}"
        return self.tag


@dataclass
class ReceiverOutput:
    x_hat: np.ndarray
    h_hat: np.ndarray
    residual: float
    branch: Optional[int] = None


def estimate_target_response(x_r, y, h_c, x_hat) -> np.ndarray:
    """LS target response ``(Y - H_c X_hat) X_r^H (X_r X_r^H)^{-1}``."""
    x_r = np.asarray(x_r)
    gram = x_r @ x_r.conj().T
    rhs = (y - h_c @ x_hat) @ x_r.conj().T
    # right division: solve H gram = rhs
    return np.linalg.solve(gram.T, rhs.T).T


def joint_residual(y, h_c, x_hat, x_r, h_hat) -> float:
    """``||Y - H_c X_hat - H_hat X_r||_F^2``."""
    r = y - h_c @ x_hat - h_hat @ x_r
    return float(np.vdot(r, r).real)


def _finish(frame: Frame, x_hat, branch=None) -> ReceiverOutput:
    h_hat = estimate_target_response(frame.x_r, frame.y, frame.h_c, x_hat)
    res = joint_residual(frame.y, frame.h_c, x_hat, frame.x_r, h_hat)
    return ReceiverOutput(x_hat, h_hat, res, branch)


def _scale(frame: Frame) -> float:
    return float(np.sqrt(frame.cfg.p_c))


def _pair(frame: Frame, pair: Optional[ProjectorPair]) -> ProjectorPair:
    return pair if pair is not None else build_projectors(frame.x_r)


def oracle_receive(frame: Frame) -> ReceiverOutput:
    """Test hook: skip detection and use the transmitted symbols."""
    return _finish(frame, frame.x_c)


def sic_receive(frame: Frame, cons: Constellation, cfg: HomotopyConfig,
                pair: Optional[ProjectorPair] = None, backend=None) -> ReceiverOutput:
    """Detect on the raw signal treating the echo as noise, then subtract and estimate."""
    fp = FlexProjector(identity_pair(frame.cfg.snapshots), 1.0)
    x_hat = homotopy_detect(fp, frame.h_c, frame.y.reshape(-1, order="F"), cons, cfg,
                            scale=_scale(frame), backend=backend)
    return _finish(frame, x_hat)


def fp_receive(frame: Frame, cons: Constellation, rho: float, cfg: HomotopyConfig,
               pair: Optional[ProjectorPair] = None, detector: str = "homotopy",
               backend=None) -> ReceiverOutput:
    """Fixed-rho flexible projection: detect on ``(y_fp, G_fp)``, then estimate.

    ``detector="ml"`` swaps in the exhaustive search (tiny instances only).
    """
    fp = FlexProjector(_pair(frame, pair), rho)
    y_fp = apply_flex_to_received(fp, frame.y)
    if detector == "ml":
        x_hat = ml_detect_exhaustive(fp, frame.h_c, y_fp, cons, scale=_scale(frame))
    elif detector == "homotopy":
        x_hat = homotopy_detect(fp, frame.h_c, y_fp, cons, cfg, scale=_scale(frame),
                                backend=backend)
    else:
        raise ValueError(f"unknown detector {detector!r}")
    return _finish(frame, x_hat)


def projection_receive(frame: Frame, cons: Constellation, cfg: HomotopyConfig,
                       pair: Optional[ProjectorPair] = None, detector: str = "homotopy",
                       backend=None) -> ReceiverOutput:
    """Detect on the waveform-complement component (echo fully removed), then estimate."""
    pair = _pair(frame, pair)
    fp = FlexProjector(pair, 0.0)
    y_fp = (frame.y @ pair.p_perp.T).reshape(-1, order="F")
    if detector == "ml":
        x_hat = ml_detect_exhaustive(fp, frame.h_c, y_fp, cons, scale=_scale(frame))
    else:
        x_hat = homotopy_detect(fp, frame.h_c, y_fp, cons, cfg, scale=_scale(frame),
                                backend=backend)
    return _finish(frame, x_hat)


def dfp_receive(frame: Frame, cons: Constellation, cfg: HomotopyConfig,
                pair: Optional[ProjectorPair] = None, backend=None) -> ReceiverOutput:
    x_hat = dfp_detect(_pair(frame, pair), frame.h_c, frame.y, cons, cfg,
                       scale=_scale(frame), backend=backend)
    return _finish(frame, x_hat)


def pdfp_receive(frame: Frame, cons: Constellation, cfgs: Sequence[HomotopyConfig],
                 pair: Optional[ProjectorPair] = None, backend=None) -> ReceiverOutput:
    """Run one DFP branch per config and keep the minimum joint residual
    (first branch wins ties)."""
    if len(cfgs) < 1:
        raise ValueError("pdfp needs at least one branch")
    pair = _pair(frame, pair)
    best = None
    errors = []
    for b, cfg in enumerate(cfgs):
        try:
            out = dfp_receive(frame, cons, cfg, pair, backend)
        except (FloatingPointError, np.linalg.LinAlgError) as exc:
            errors.append(exc)
            continue
        out.branch = b
        if best is None or out.residual < best.residual:
            best = out
    if best is None:
        raise RuntimeError(f"all {len(cfgs)} PDFP branches failed: {errors}")
    return best


def pdfp_configs(cfg: HomotopyConfig, epsilons) -> list:
    return [cfg.replace(epsilon=e) for e in epsilons]


def receive(kind: ReceiverKind, frame: Frame, cons: Constellation, cfg: HomotopyConfig,
            pair: Optional[ProjectorPair] = None, backend=None) -> ReceiverOutput:
    """Dispatch on ``kind`` (block receivers go through :func:`block_receive`)."""
    if kind.tag == "sic":
        return sic_receive(frame, cons, cfg, pair, backend)
    if kind.tag == "projection":
        return projection_receive(frame, cons, cfg, pair, backend=backend)
    if kind.tag == "fp":
        return fp_receive(frame, cons, kind.rho, cfg, pair, backend=backend)
    if kind.tag == "dfp":
        return dfp_receive(frame, cons, cfg, pair, backend)
    if kind.tag == "pdfp":
        return pdfp_receive(frame, cons, pdfp_configs(cfg, kind.epsilons), pair, backend)
    raise ValueError(f"receiver {kind.tag!r} is not frame-level")


# --- block structure -------------------------------------------------------

@dataclass
class BlockOutput:
    """Per-sub-block outputs plus the combined estimate of every block."""

    sub_outputs: list = field(default_factory=list)
    block_estimates: list = field(default_factory=list)

    @property
    def h_hat(self) -> np.ndarray:
        return self.block_estimates[-1]


def _combined_estimate(frames, x_hats):
    num = sum((f.y - f.h_c @ x) @ f.x_r.conj().T for f, x in zip(frames, x_hats))
    gram = sum(f.x_r @ f.x_r.conj().T for f in frames)
    return np.linalg.solve(gram.T, num.T).T


def block_receive(frames: Sequence[Frame], cons: Constellation, cfg: HomotopyConfig,
                  n_sub: int, mode: str = "dfp", rho: Optional[float] = None,
                  epsilons: Sequence[float] = (0.05, 0.5), prior=None,
                  per_subblock: bool = False, prior_hook=None, backend=None) -> BlockOutput:
    """Block-structured receiver over consecutive sub-block frames.

    ``frames`` share ``h_c`` and ``h_r`` and are grouped into blocks of
    ``n_sub`` sub-blocks. Every sub-block is detected on
    ``Y - H_prev X_r``, where ``H_prev`` is the previous block's combined
    estimate (``prior`` for the first block, zero by default). After a block
    the target response is re-estimated by LS over all its snapshots.
    ``per_subblock=True`` refreshes ``H_prev`` after each sub-block instead.
    ``mode`` picks the sub-block detector: ``dfp``, ``pdfp`` or ``fp`` (with ``rho``).
    ``prior_hook(i)`` may override the prior used for block ``i`` (test hook).
    """
    if n_sub < 1 or len(frames) % n_sub:
        raise ValueError("number of frames must be a positive multiple of n_sub")
    f0 = frames[0]
    if f0.cfg.snapshots <= f0.cfg.mt:
        raise ValueError("sub-block length must exceed mt")
    pair = build_projectors(f0.x_r)
    h_prev = np.zeros((f0.cfg.mr, f0.cfg.mt), complex) if prior is None else np.asarray(prior)
    out = BlockOutput()
    for bi, start in enumerate(range(0, len(frames), n_sub)):
        if prior_hook is not None:
            h_prev = prior_hook(bi)
        block = frames[start:start + n_sub]
        x_hats = []
        for j, fr in enumerate(block):
            cleaned = replace(fr, y=fr.y - h_prev @ fr.x_r)
            if mode == "dfp":
                det = dfp_receive(cleaned, cons, cfg, pair, backend)
            elif mode == "pdfp":
                det = pdfp_receive(cleaned, cons, pdfp_configs(cfg, epsilons), pair, backend)
            elif mode == "fp":
                det = fp_receive(cleaned, cons, rho, cfg, pair, backend=backend)
            else:
                raise ValueError(f"unknown block mode {mode!r}")
            x_hats.append(det.x_hat)
            out.sub_outputs.append(_finish(fr, det.x_hat, det.branch))
            if per_subblock:
                h_prev = _combined_estimate(block[:j + 1], x_hats)
        h_block = _combined_estimate(block, x_hats)
        out.block_estimates.append(h_block)
        h_prev = h_block
    return out
