"""Experiment orchestration: configs, tracked runs, sweeps and report files."""

from .config import AssumptionWarning, ExperimentConfig, load_config
from .output import emit_outputs, emit_sweep, read_run_csv, run_csv_header
from .runner import RunRecord, SweepReport, build_initial_data, fit_slope, run_compare, run_sweep

__all__ = [
    "AssumptionWarning",
    "ExperimentConfig",
    "load_config",
    "emit_outputs",
    "emit_sweep",
    "read_run_csv",
    "run_csv_header",
    "RunRecord",
    "SweepReport",
    "build_initial_data",
    "fit_slope",
    "run_compare",
    "run_sweep",
]
