"""Belief-space driver warning planner with a closed-loop traffic simulator."""

from .core import DriverAction, LaneCmd, RngStream, ScenarioState, VehicleState, WarningLevel
from .policies import DriverModel, PolicyKind, PolicyState
from .transition import TransitionModel
from .estimator import Belief, BehaviorEstimator
from .planner import PlannerConfig, search, select_warning_mdp, select_warning_pomdp
from .config import ExperimentConfig, load_config

__version__ = "0.1.0"

__all__ = [
    "Belief", "BehaviorEstimator", "DriverAction", "DriverModel", "ExperimentConfig", "LaneCmd",
    "PlannerConfig", "PolicyKind", "PolicyState", "RngStream", "ScenarioState", "TransitionModel",
    "VehicleState", "WarningLevel", "load_config", "search", "select_warning_mdp",
    "select_warning_pomdp",
]
