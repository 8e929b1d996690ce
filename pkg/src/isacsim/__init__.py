"""Simulation toolkit for beam-tracked integrated sensing and communication."""

from .config import ConfigError, SystemConfig, load_config
from .ellipse import Ellipse, axis_aligned_mee, mec, mee
from .harness import RunSummary, run_experiment, summarize, table3
from .schemes import SCHEMES, Trace, run_ibe, run_scheme

__version__ = "0.1.0"

__all__ = ["ConfigError", "SystemConfig", "load_config", "Ellipse", "axis_aligned_mee", "mec",
           "mee", "RunSummary", "run_experiment", "summarize", "table3", "SCHEMES", "Trace",
           "run_ibe", "run_scheme"]
