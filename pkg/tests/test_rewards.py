import math

import pytest

from driverwarn.core import CAR_LENGTH, DriverAction, RoadMap, WarningLevel as W
from driverwarn.rewards import (
    COLLISION,
    PAPER_WARNING_COSTS,
    RewardWeights,
    footprints_overlap,
    in_collision,
    traj_reward,
    warning_cost,
)

from conftest import car, make_state

WEIGHTS = RewardWeights()
ROAD = RoadMap()


def test_reward_examples():
    s = make_state(car(0.0, 8.0))
    assert traj_reward(s, DriverAction(-2.0), WEIGHTS) == pytest.approx(-0.5 * 9 - 0.1 * 4)
    assert traj_reward(make_state(car(0.0, 11.0)), DriverAction(0.0), WEIGHTS) == 0.0


def test_reward_uses_realised_acceleration():
    s = make_state(car(0.0, 8.0))
    nxt = make_state(car(4.0, 8.0, a=-1.0), t=0.5)
    assert traj_reward(s, DriverAction(-2.0), WEIGHTS, nxt) == pytest.approx(-4.5 - 0.1)


def test_collision_is_minus_infinity():
    s = make_state(car(0.0, 10.0), [("lead", car(CAR_LENGTH - 0.1, 10.0))])
    assert in_collision(s)
    assert traj_reward(s, DriverAction(0.0), WEIGHTS) == COLLISION == -math.inf


def test_swept_overlap_catches_pass_through():
    # ego jumps past a stopped car inside one step: no overlap at either end
    a0, a1 = car(0.0, 30.0), car(15.0, 30.0)
    b0 = b1 = car(7.5, 0.0)
    assert not footprints_overlap(a0, b0, ROAD)
    assert not footprints_overlap(a1, b1, ROAD)
    assert footprints_overlap(a0, b0, ROAD, a1, b1)
    # adjacent lane never overlaps
    c = car(7.5, 0.0, lane=1)
    assert not footprints_overlap(a0, c, ROAD, a1, c)


def test_overlap_needs_simultaneous_lateral_and_longitudinal():
    # lateral overlap happens only after the longitudinal window closed
    a0, a1 = car(0.0, 0.0), car(0.0, 0.0)
    b0 = car(4.0, 0.0, lane=1)
    b1 = car(10.0, 0.0, lane=0)
    assert not footprints_overlap(a0, b0, ROAD, a1, b1)


def test_warning_costs():
    assert [warning_cost(w, WEIGHTS) for w in W] == [0.0, -1.0, -20.0, -50.0, -1e8]
    assert PAPER_WARNING_COSTS[W.TAKE_OVER] == -1e8


@pytest.mark.parametrize("kw", [
    dict(w_v=-1.0),
    dict(gamma=0.0),
    dict(gamma=1.5),
    dict(warning_costs={w: 0.0 for w in W if w != W.TEXT}),
    dict(warning_costs={**PAPER_WARNING_COSTS, W.NO_WARNING: -1.0}),
    dict(warning_costs={**PAPER_WARNING_COSTS, W.VOICE: 5.0}),
])
def test_weight_validation(kw):
    with pytest.raises(ValueError):
        RewardWeights(**kw)
