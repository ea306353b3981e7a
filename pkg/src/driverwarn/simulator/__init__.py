"""Closed-loop traffic simulation.

Scenario scripts and the world step live in :mod:`.scenarios`; the episode
loop (which depends on the planner) lives in :mod:`.episode`.
"""

from .scenarios import (
    HAZARD_ID,
    BackgroundVehicle,
    ScenarioConfig,
    ScenarioKind,
    build_scenario,
    initial_state,
    step_world,
    surrounding_step,
)

__all__ = [
    "HAZARD_ID", "BackgroundVehicle", "ScenarioConfig", "ScenarioKind", "build_scenario",
    "initial_state", "step_world", "surrounding_step",
]
