"""Declarative experiment runner, presets, plots and the acceptance suite."""

from .config import ExperimentConfig, config_from_dict, load_config
from .plotting import Series, emit_plot
from .presets import PRESETS, load_preset, preset_names
from .runner import RunArtifacts, run_experiment

__all__ = [
    "ExperimentConfig",
    "PRESETS",
    "RunArtifacts",
    "Series",
    "config_from_dict",
    "emit_plot",
    "load_config",
    "load_preset",
    "preset_names",
    "run_experiment",
]
