"""Experiment specification and the flat ``key = value`` config format.

Recognised keys (all optional; defaults reproduce the reference scenario)::

    mt, mr, k_users, snapshots        dimensions
    p_c_w, p_r_w                      communication / sensing transmit power (W)
    target_power_w                    received sensing power P_s (W) when not swept
    sigma2_dbw                        noise power (dBW)
    constellation                     qam4 | psk4
    corr                              receive correlation of H_c
    receiver                          ';'-separated list, e.g. "sic; projection; dfp; pdfp:0.05,0.5"
    rho                               tradeoff factor for fp receivers / block mode fp
    epsilon_list                      comma list of DFP decay bases (first one drives dfp)
    mu0, mu_growth (number | auto), mu_cross, l_max, k_max, beta_rule, alpha_rule
    sweep_var                         sir_db | snr_c_db | snr_s_db | n_subblocks | rho
    sensing_ref                       received | transmit: what the SIR / SNR_s sweeps scale
    sweep_grid                        comma list
    n_frames, seed
    sub_len, n_subblocks, n_blocks, block_mode (dfp | pdfp | fp)

``#`` starts a comment. Unknown keys are rejected.
"""

from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np

from ..detectors import HomotopyConfig
from ..receivers import ReceiverKind
from ..signal_model import SystemConfig

SWEEP_VARS = ("sir_db", "snr_c_db", "snr_s_db", "n_subblocks", "rho")
SENSING_REFS = ("received", "transmit")
PROFILES = ("desk", "paper")

_KEYS = {
    "mt", "mr", "k_users", "snapshots", "p_c_w", "p_r_w", "target_power_w", "sigma2_dbw",
    "constellation", "corr", "receiver", "rho", "epsilon_list", "mu0", "mu_growth",
    "mu_cross", "l_max", "k_max", "beta_rule", "alpha_rule", "sweep_var", "sweep_grid",
    "n_frames", "seed", "sub_len", "n_subblocks", "n_blocks", "block_mode", "sensing_ref",
}


def db_to_lin(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


@dataclass(frozen=True)
class ExperimentSpec:
    base: SystemConfig = field(default_factory=SystemConfig)
    constellation: str = "qam4"
    corr: float = 0.0
    target_power: float = 1.0
    receivers: tuple = (ReceiverKind("dfp"),)
    sweep_var: str = "sir_db"
    grid: tuple = (-10.0, 0.0, 10.0, 20.0)
    n_frames: int = 100
    seed: int = 0
    detector: HomotopyConfig = field(default_factory=HomotopyConfig)
    epsilons: tuple = (0.05, 0.5)
    rho: Optional[float] = None
    sub_len: int = 20
    n_subblocks: int = 4
    n_blocks: int = 2
    block_mode: str = "pdfp"
    oracle_symbols: bool = False
    sensing_ref: str = "received"

    def __post_init__(self):
        if self.sweep_var not in SWEEP_VARS:
            raise ValueError(f"sweep_var must be one of {SWEEP_VARS}")
        if len(self.grid) == 0:
            raise ValueError("sweep grid is empty")
        if self.n_frames < 1:
            raise ValueError("n_frames must be >= 1")
        if not self.receivers:
            raise ValueError("at least one receiver is required")
        if self.n_blocks < 1:
            raise ValueError("n_blocks must be >= 1")
        if self.block_mode not in ("dfp", "pdfp", "fp"):
            raise ValueError(f"unknown block_mode {self.block_mode!r}")
        if self.sensing_ref not in SENSING_REFS:
            raise ValueError(f"sensing_ref must be one of {SENSING_REFS}")
        if self.target_power < 0 or not 0.0 <= self.corr < 1.0:
            raise ValueError("target_power must be >= 0 and corr in [0, 1)")

    def replace(self, **kw) -> "ExperimentSpec":
        return replace(self, **kw)

    def point(self, value):
        """Scenario at one grid value: ``(SystemConfig, target_power, rho, n_subblocks)``.

        SNR_c acts on the noise power. With ``sensing_ref="received"`` SIR and
        SNR_s set the received sensing power ``P_s``. With ``"transmit"`` they
        set the waveform power ``P_r`` and the target response has unit-variance
        entries, so ``P_s = M_r P_r``.
        """
        cfg, p_s, rho, j = self.base, self.target_power, self.rho, self.n_subblocks
        v = float(value)
        if self.sweep_var in ("sir_db", "snr_s_db"):
            ref = cfg.p_c if self.sweep_var == "sir_db" else 1.0 / cfg.sigma2
            lin = float(db_to_lin(v))
            power = ref / lin if self.sweep_var == "sir_db" else lin / ref
            if self.sensing_ref == "received":
                p_s = power
            else:
                cfg = cfg.replace(p_r=power)
                p_s = cfg.mr * power
        elif self.sweep_var == "snr_c_db":
            cfg = cfg.replace(sigma2=cfg.p_c / float(db_to_lin(v)))
        elif self.sweep_var == "rho":
            rho = v
        elif self.sweep_var == "n_subblocks":
            j = int(round(v))
        return cfg, p_s, rho, j

    def receivers_at(self, rho):
        """Receiver list with any ``fp`` receiver's rho replaced by the swept value."""
        if rho is None or self.sweep_var != "rho":
            return self.receivers
        return tuple(ReceiverKind("fp", rho=rho) if k.tag == "fp" else k for k in self.receivers)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["receivers"] = [k.label for k in self.receivers]
        d["grid"] = list(self.grid)
        d["epsilons"] = list(self.epsilons)
        return d


def _floats(text):
    return tuple(float(t) for t in text.replace(";", ",").split(",") if t.strip())


def parse_config(text: str, profile: str = "desk") -> ExperimentSpec:
    """Build an :class:`ExperimentSpec` from flat ``key = value`` text.

    ``profile`` fixes the default loop lengths (desk 50/50, paper 200/100);
    explicit ``l_max``/``k_max`` keys take precedence.
    """
    if profile not in PROFILES:
        raise ValueError(f"profile must be one of {PROFILES}")
    kv = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key = key.strip().lower()
        if not sep:
            raise ValueError(f"line {n}: expected 'key = value'")
        if key not in _KEYS:
            raise ValueError(f"line {n}: unknown key {key!r}")
        kv[key] = val.strip()

    sys_kw = {}
    for key, attr, conv in [("mt", "mt", int), ("mr", "mr", int), ("k_users", "k_users", int),
                            ("snapshots", "snapshots", int), ("p_c_w", "p_c", float),
                            ("p_r_w", "p_r", float)]:
        if key in kv:
            sys_kw[attr] = conv(kv[key])
    if "sigma2_dbw" in kv:
        sys_kw["sigma2"] = float(db_to_lin(float(kv["sigma2_dbw"])))
    base = SystemConfig(**sys_kw)

    det_kw = {"l_max": 50, "k_max": 50} if profile == "desk" else {"l_max": 200, "k_max": 100}
    for key, conv in [("mu0", float), ("mu_cross", float), ("l_max", int), ("k_max", int),
                      ("beta_rule", str), ("alpha_rule", str)]:
        if key in kv:
            det_kw[key] = conv(kv[key])
    if "mu_growth" in kv and kv["mu_growth"].lower() != "auto":
        det_kw["mu_growth"] = float(kv["mu_growth"])
    epsilons = _floats(kv["epsilon_list"]) if "epsilon_list" in kv else (0.05, 0.5)
    det_kw["epsilon"] = epsilons[0]
    detector = HomotopyConfig(**det_kw)

    rho = float(kv["rho"]) if "rho" in kv else None
    receivers = (ReceiverKind("dfp"),)
    if "receiver" in kv:
        receivers = tuple(_receiver(t.strip(), rho, epsilons)
                          for t in kv["receiver"].split(";") if t.strip())

    spec_kw = dict(base=base, detector=detector, receivers=receivers, epsilons=epsilons, rho=rho)
    for key, attr, conv in [("constellation", "constellation", str), ("corr", "corr", float),
                            ("target_power_w", "target_power", float),
                            ("sweep_var", "sweep_var", str), ("n_frames", "n_frames", int),
                            ("seed", "seed", int), ("sub_len", "sub_len", int),
                            ("n_subblocks", "n_subblocks", int), ("n_blocks", "n_blocks", int),
                            ("block_mode", "block_mode", str),
                            ("sensing_ref", "sensing_ref", str)]:
        if key in kv:
            spec_kw[attr] = conv(kv[key])
    if "sweep_grid" in kv:
        spec_kw["grid"] = _floats(kv["sweep_grid"])
    return ExperimentSpec(**spec_kw)


def _receiver(token, rho, epsilons):
    """``fp`` and ``pdfp`` without arguments pick up ``rho`` / ``epsilon_list``."""
    if token == "fp":
        return ReceiverKind("fp", rho=0.5 if rho is None else rho)
    if token == "pdfp":
        return ReceiverKind("pdfp", epsilons=tuple(epsilons))
    return ReceiverKind.parse(token)


def load_config(path, profile: str = "desk") -> ExperimentSpec:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), profile)
