"""Uplink ISAC receivers: SIC, projection and flexible-projection detection
with target-response estimation, closed-form analysis and a Monte Carlo harness."""

from .analysis import (AnalysisPoint, empirical_sinr, optimal_rho_zf, pep_exact_pair,
                       pep_ml_approx, pep_zf_approx, q_function, sigma_ml_sq, sinr_fp)
from .detectors import (HomotopyConfig, HomotopyTrace, dfp_detect, homotopy_detect,
                        ml_detect_exhaustive, penalty_threshold, zf_detect)
from .kernels import BACKEND
from .projection import (FlexProjector, ProjectorPair, RankDeficientWaveform,
                         apply_flex_channel, apply_flex_to_received, build_projectors,
                         condition_number, effective_rank, pinv_flex)
from .receivers import (BlockOutput, ReceiverKind, ReceiverOutput, block_receive,
                        dfp_receive, estimate_target_response, fp_receive, pdfp_receive,
                        projection_receive, receive, sic_receive)
from .signal_model import (Constellation, Frame, SystemConfig, constellation,
                           synthesize_frame, synthesize_subblocks)

__version__ = "0.1.0"
