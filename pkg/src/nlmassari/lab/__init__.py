"""Experiment harness: configs, drivers, reports and the command line."""
from .config import ConfigError, ExperimentConfig, load_config
from .experiments import run_experiment
from .report import SweepReport, Verdict, emit

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "run_experiment", "SweepReport", "Verdict", "emit"]
