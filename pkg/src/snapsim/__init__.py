"""Discrete-event simulator for global snapshot algorithms."""

from .harness import (ExperimentConfig, ExperimentResult, SweepSpec,
                      emit_csv, run_experiment, run_sweep)
from .kernels import BACKEND

__all__ = ["BACKEND", "ExperimentConfig", "ExperimentResult", "SweepSpec",
           "emit_csv", "run_experiment", "run_sweep"]
__version__ = "0.1.0"
