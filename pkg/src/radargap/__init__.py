"""Radar sensor-model fidelity evaluation.

Simulates radar point clouds from three model types (ideal, data-driven,
ray casting), compares them with a noisy reference sensor on explicit
point-cloud metrics and on the output of a tracking pipeline, and folds the
eleven metrics into four fidelity-level scores and one gap value.
"""

from ._accel import backend_name
from .gap import GapConfig, GapReport, evaluate_scenario
from .metrics import METRIC_IDS, MetricConfig
from .models import SensorModelConfig, reference_config, simulate, standard_models, train_ddm
from .perception import PerceptionConfig, run_perception
from .scenario import SCENARIO_NAMES, build_scenario

__version__ = "0.1.0"

__all__ = [
    "GapConfig",
    "GapReport",
    "METRIC_IDS",
    "MetricConfig",
    "PerceptionConfig",
    "SCENARIO_NAMES",
    "SensorModelConfig",
    "backend_name",
    "build_scenario",
    "evaluate_scenario",
    "reference_config",
    "run_perception",
    "simulate",
    "standard_models",
    "train_ddm",
]
