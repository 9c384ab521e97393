"""Seeded Monte Carlo experiments, result emission and the command-line front end."""

from .config import ExperimentSpec, load_config, parse_config
from .experiments import (MetricRecord, run_ber_sweep, run_block_sweep, run_ml_oracle_check,
                          run_nmse_sweep, run_pep_validation, run_sinr_validation)
from .output import emit_results, load_records
