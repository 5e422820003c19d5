"""Experiment orchestration, figure data and the command-line interface."""
from .config import ExperimentConfig, dumps_config, load_config, parse_config
from .experiment import (ExperimentReport, RunRecord, SummaryRow, dbm_to_power, loglog_slope,
                         power_to_dbm, run_experiment, run_realization, validate_counts)
from .figures import emit_figures

__all__ = ["ExperimentConfig", "ExperimentReport", "RunRecord", "SummaryRow", "dbm_to_power",
           "dumps_config", "emit_figures", "load_config", "loglog_slope", "parse_config",
           "power_to_dbm", "run_experiment", "run_realization", "validate_counts"]
