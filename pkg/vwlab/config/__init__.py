"""Configuration (Pydantic Settings and experiment parameters)."""

from vwlab.config.experiment_config import ExperimentConfig, build_config, load_experiment_file
from vwlab.config.settings import Settings

__all__ = ["ExperimentConfig", "Settings", "build_config", "load_experiment_file"]
