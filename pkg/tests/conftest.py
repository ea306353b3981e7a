from __future__ import annotations

from typing import Sequence, Tuple

import pytest

from driverwarn.config import ExperimentConfig
from driverwarn.core import RoadMap, ScenarioState, StateHistory, VehicleState

DT = 0.5


def make_state(ego: VehicleState, agents: Sequence[Tuple[str, VehicleState]] = (),
               road: RoadMap = RoadMap(), t: float = 0.0, dt: float = DT) -> ScenarioState:
    return ScenarioState(
        StateHistory.start(ego, dt),
        tuple(StateHistory.start(a, dt) for _, a in agents),
        tuple(i for i, _ in agents),
        road,
        t,
    )


def car(s: float, v: float, lane: int = 0, lat: float = 0.0, a: float = 0.0) -> VehicleState:
    return VehicleState(s, lane, lat, v, a)


@pytest.fixture(scope="session")
def config() -> ExperimentConfig:
    return ExperimentConfig()


# acceptance criteria report one line each at the end of the run
CRITERIA: dict = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    CRITERIA[number] = (passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        passed, detail = CRITERIA[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
