"""Experiment configuration, multi-seed execution, diagnostics and the command-line entry point."""

from .config import ExperimentConfig, load_config
from .diagnostics import DiagReport, diag_lemma3, diag_lemma4, run_diagnostics
from .runner import emit_plot_data, run_experiment, run_seed
from .streams import stream

__all__ = [
    "DiagReport",
    "ExperimentConfig",
    "diag_lemma3",
    "diag_lemma4",
    "emit_plot_data",
    "load_config",
    "run_diagnostics",
    "run_experiment",
    "run_seed",
    "stream",
]
