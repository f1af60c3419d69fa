"""Belief-trap analysis for interactive inference agents on enumerable tasks."""
from .belief import (ObservationModel, StateSpace, agent_progress, bayes_update, informativeness,
                     potential, update_error)
from .config import ConfigError, ExperimentConfig, config_from_dict, load_config
from .experiment import run_experiment, sweep, verify_theorems
from .rollout import rollout

__version__ = "0.1.0"

__all__ = ["ConfigError", "ExperimentConfig", "ObservationModel", "StateSpace", "agent_progress",
           "bayes_update", "config_from_dict", "informativeness", "load_config", "potential",
           "rollout", "run_experiment", "sweep", "update_error", "verify_theorems"]
