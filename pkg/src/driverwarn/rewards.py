"""Trajectory reward and warning costs.

A collision is scored as ``-inf``. Rewards are never ``+inf``, so sums stay
well defined; callers skip zero-probability outcomes to avoid ``0 * -inf``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional

from .core import DriverAction, RoadMap, ScenarioState, VehicleState, WarningLevel

COLLISION = float("-inf")

PAPER_WARNING_COSTS = {
    WarningLevel.NO_WARNING: 0.0,
    WarningLevel.TEXT: -1.0,
    WarningLevel.VOICE: -20.0,
    WarningLevel.ALARM: -50.0,
    WarningLevel.TAKE_OVER: -1e8,
}


@dataclass(frozen=True)
class RewardWeights:
    w_v: float = 0.5
    w_acc: float = 0.1
    v_desire: float = 11.0
    gamma: float = 0.95
    warning_costs: Mapping[WarningLevel, float] = field(
        default_factory=lambda: dict(PAPER_WARNING_COSTS))

    def __post_init__(self):
        if self.w_v < 0 or self.w_acc < 0:
            raise ValueError("reward weights must be non-negative")
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must lie in (0, 1]")
        costs = self.warning_costs
        if set(costs) != set(WarningLevel):
            raise ValueError("warning_costs needs an entry for every warning")
        if costs[WarningLevel.NO_WARNING] != 0:
            raise ValueError("NoWarning must be free")
        order = [costs[w] for w in WarningLevel]
        if any(b > a for a, b in zip(order, order[1:])):
            raise ValueError("warning costs must not increase with severity")


def _overlap_window(d0: float, d1: float, half: float):
    """Sub-interval of [0, 1] where |d0 + (d1 - d0) tau| < half, or None."""
    k = d1 - d0
    if k == 0.0:
        return (0.0, 1.0) if abs(d0) < half else None
    lo, hi = (-half - d0) / k, (half - d0) / k
    if lo > hi:
        lo, hi = hi, lo
    lo, hi = max(lo, 0.0), min(hi, 1.0)
    return (lo, hi) if lo < hi else None


def footprints_overlap(a: VehicleState, b: VehicleState, road: RoadMap,
                       a_next: Optional[VehicleState] = None,
                       b_next: Optional[VehicleState] = None) -> bool:
    """Rectangle overlap at the current frame, or anywhere along the straight
    segment to the next frames when those are given."""
    w = road.lane_width
    ds0 = b.s - a.s
    dy0 = b.lateral(w) - a.lateral(w)
    if a_next is None or b_next is None:
        return abs(ds0) < road.car_length and abs(dy0) < road.car_width
    ds1 = b_next.s - a_next.s
    dy1 = b_next.lateral(w) - a_next.lateral(w)
    lon = _overlap_window(ds0, ds1, road.car_length)
    if lon is None:
        return False
    lat = _overlap_window(dy0, dy1, road.car_width)
    if lat is None:
        return False
    return max(lon[0], lat[0]) < min(lon[1], lat[1])


def in_collision(state: ScenarioState, next_state: Optional[ScenarioState] = None) -> bool:
    ego = state.ego.current
    road = state.road
    if next_state is None:
        return any(footprints_overlap(ego, h.current, road) for h in state.agents)
    ego1 = next_state.ego.current
    for h, h1 in zip(state.agents, next_state.agents):
        if footprints_overlap(ego, h.current, road, ego1, h1.current):
            return True
    return False


def traj_reward(state: ScenarioState, a: DriverAction, weights: RewardWeights,
                next_state: Optional[ScenarioState] = None) -> float:
    """Speed-tracking and comfort penalty for one step, ``-inf`` on collision.

    With ``next_state`` the acceleration is the realised one stored on the
    next ego frame and collisions are swept over the step.
    """
    if in_collision(state, next_state):
        return COLLISION
    v = state.ego.current.v
    acc = a.accel if next_state is None else next_state.ego.current.a
    dv = v - weights.v_desire
    return -weights.w_v * dv * dv - weights.w_acc * acc * acc


def warning_cost(w: WarningLevel, weights: RewardWeights) -> float:
    return weights.warning_costs[w]
