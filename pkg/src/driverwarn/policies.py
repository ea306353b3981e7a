"""Ego driving behaviours built on the intelligent driver model.

Every behaviour yields a Gaussian distribution over longitudinal acceleration
plus a deterministic lane command. The mean action doubles as the
max-probability action used by the planner.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence, Tuple

from .core import (
    DriverAction,
    LaneCmd,
    RoadMap,
    ScenarioState,
    StateHistory,
    VehicleState,
    occupies_lane,
)

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class IdmParams:
    v_desired: float = 11.0
    T_headway: float = 1.0
    s_min: float = 2.0
    a_max: float = 2.0
    b_comfort: float = 2.5
    delta: float = 4.0

    def __post_init__(self):
        for name in ("v_desired", "T_headway", "s_min", "a_max", "b_comfort", "delta"):
            if not getattr(self, name) > 0:
                raise ValueError(f"IdmParams.{name} must be positive")


@dataclass(frozen=True)
class DriverParams:
    """Behaviour constants shared by the simulator, estimator and planner."""

    acc_min: float = -6.0
    acc_max: float = 2.0
    a_decelerate: float = -3.0
    T_R: float = 1.0
    T_D: float = 1.0
    accel_sigma: float = 0.4
    lane_mismatch_prob: float = 0.01
    # seconds of lateral look-ahead the hazard-aware driver uses for cut-ins
    anticipation: float = 2.0
    lane_change: bool = True

    def __post_init__(self):
        if not self.acc_min < 0 < self.acc_max:
            raise ValueError("need acc_min < 0 < acc_max")
        if not self.acc_min <= self.a_decelerate < 0:
            raise ValueError("a_decelerate must lie in [acc_min, 0)")
        if self.accel_sigma <= 0:
            raise ValueError("accel_sigma must be positive")
        if self.T_R <= 0 or self.T_D <= 0:
            raise ValueError("T_R and T_D must be positive")
        if not 0 < self.lane_mismatch_prob < 1:
            raise ValueError("lane_mismatch_prob must lie in (0, 1)")


@dataclass(frozen=True)
class DriverModel:
    idm: IdmParams = field(default_factory=IdmParams)
    params: DriverParams = field(default_factory=DriverParams)

    def __post_init__(self):
        if self.idm.b_comfort > abs(self.params.acc_min):
            raise ValueError("b_comfort must not exceed |acc_min|")


class PolicyKind(enum.IntEnum):
    SAFE = 0
    BLIND = 1
    BRAKE = 2
    DELAY_SAFE = 3
    DELAY_BRAKE = 4

    @property
    def label(self) -> str:
        return _KIND_LABELS[self]

    @classmethod
    def from_label(cls, label: str) -> "PolicyKind":
        for k, v in _KIND_LABELS.items():
            if v == label:
                return k
        raise ValueError(f"unknown policy kind {label!r}")


_KIND_LABELS = {
    PolicyKind.SAFE: "Safe",
    PolicyKind.BLIND: "Blind",
    PolicyKind.BRAKE: "Brake",
    PolicyKind.DELAY_SAFE: "DelayBlindToSafe",
    PolicyKind.DELAY_BRAKE: "DelayBlindToBrake",
}

DELAY_KINDS = (PolicyKind.DELAY_SAFE, PolicyKind.DELAY_BRAKE)
TIMED_KINDS = (PolicyKind.BRAKE, PolicyKind.DELAY_SAFE, PolicyKind.DELAY_BRAKE)


class PolicyState(NamedTuple):
    """A behaviour plus the number of steps spent in it (timed kinds only)."""

    kind: PolicyKind
    timer: int = 0

    def __str__(self) -> str:
        if self.kind in TIMED_KINDS:
            return f"{self.kind.label}({self.timer})"
        return self.kind.label


SAFE = PolicyState(PolicyKind.SAFE)
BLIND = PolicyState(PolicyKind.BLIND)
BRAKE = PolicyState(PolicyKind.BRAKE)


def steps_for(duration: float, dt: float) -> int:
    """Whole steps needed for ``duration`` to elapse (timer * dt >= duration)."""
    return max(1, math.ceil(duration / dt - 1e-9))


def resolve(pi: PolicyState, params: DriverParams, dt: float) -> PolicyState:
    """The behaviour that actually produces actions for ``pi`` right now."""
    kind = pi.kind
    if kind == PolicyKind.BRAKE:
        return SAFE if pi.timer >= steps_for(params.T_R, dt) else pi
    if kind in DELAY_KINDS:
        n_d = steps_for(params.T_D, dt)
        if pi.timer < n_d:
            return BLIND
        if kind == PolicyKind.DELAY_SAFE:
            return SAFE
        return resolve(PolicyState(PolicyKind.BRAKE, pi.timer - n_d), params, dt)
    return pi


def advance_policy(pi: PolicyState, params: DriverParams, dt: float) -> PolicyState:
    """One step of internal behaviour evolution: timers tick, expired states relabel."""
    if pi.kind not in TIMED_KINDS:
        return pi
    nxt = PolicyState(pi.kind, pi.timer + 1)
    if nxt.kind == PolicyKind.BRAKE:
        return SAFE if nxt.timer >= steps_for(params.T_R, dt) else nxt
    if nxt.timer >= steps_for(params.T_D, dt):
        if nxt.kind == PolicyKind.DELAY_SAFE:
            return SAFE
        return BRAKE
    return nxt


def is_blind_like(pi: PolicyState, params: DriverParams, dt: float) -> bool:
    """Blind, or a delay state whose reaction has not started yet."""
    return resolve(pi, params, dt).kind == PolicyKind.BLIND


@dataclass(frozen=True)
class ActionDistribution:
    mean: DriverAction
    accel_sigma: float

    def density(self, accel: float) -> float:
        z = (accel - self.mean.accel) / self.accel_sigma
        return math.exp(-0.5 * z * z) / (_SQRT_2PI * self.accel_sigma)


def idm_accel(v: float, gap: Optional[float], v_lead: float, p: IdmParams,
              acc_min: float = -6.0, acc_max: float = 2.0) -> float:
    """IDM acceleration, clamped to ``[acc_min, acc_max]``.

    ``gap`` is bumper to bumper; ``None`` means free road.
    """
    acc = p.a_max * (1.0 - (v / p.v_desired) ** p.delta)
    if gap is not None:
        if gap <= 1e-6:
            return acc_min
        dyn = v * p.T_headway + v * (v - v_lead) / (2.0 * math.sqrt(p.a_max * p.b_comfort))
        s_star = p.s_min + max(0.0, dyn)
        acc -= p.a_max * (s_star / gap) ** 2
    return min(acc_max, max(acc_min, acc))


def _moving_into(h: StateHistory, lane: int, road: RoadMap, horizon: float) -> bool:
    cur = h.current
    if occupies_lane(cur, lane, road):
        return True
    if horizon <= 0 or len(h.frames) < 2:
        return False
    w = road.lane_width
    y = cur.lane * w + cur.lat_offset
    vy = (y - h.previous.lateral(w)) / h.dt
    dist = y - lane * w
    if vy == 0.0 or dist * vy > 0:
        return False
    edge = abs(dist) - 0.5 * (w + road.car_width)
    return edge / abs(vy) <= horizon


def _lane_neighbours(ego: VehicleState, agents: Sequence[StateHistory], lane: int,
                     road: RoadMap, horizon: float):
    """(gap, v) of the nearest leader and follower relevant to ``lane``."""
    lead = follow = None
    length = road.car_length
    for h in agents:
        ag = h.current
        if not _moving_into(h, lane, road, horizon):
            continue
        if ag.s > ego.s:
            gap = ag.s - ego.s - length
            if lead is None or gap < lead[0]:
                lead = (gap, ag.v)
        else:
            gap = ego.s - ag.s - length
            if follow is None or gap < follow[0]:
                follow = (gap, ag.v)
    return lead, follow


def _hazard_aware_action(ego_hist: StateHistory, agents: Sequence[StateHistory],
                         road: RoadMap, model: DriverModel) -> DriverAction:
    p, idm = model.params, model.idm
    ego = ego_hist.current
    lead, _ = _lane_neighbours(ego, agents, ego.lane, road, p.anticipation)
    if lead is None:
        acc = idm_accel(ego.v, None, 0.0, idm, p.acc_min, p.acc_max)
    else:
        acc = idm_accel(ego.v, lead[0], lead[1], idm, p.acc_min, p.acc_max)
    if not (p.lane_change and agents and acc < -idm.b_comfort and ego.lat_offset == 0.0):
        return DriverAction(acc, LaneCmd.KEEP)

    cur_gap = lead[0] if lead is not None else math.inf
    best = None
    for cmd in (LaneCmd.SHIFT_LEFT, LaneCmd.SHIFT_RIGHT):
        lane = ego.lane + int(cmd)
        if not 0 <= lane < road.lane_count:
            continue
        t_lead, t_follow = _lane_neighbours(ego, agents, lane, road, p.anticipation)
        t_gap = t_lead[0] if t_lead is not None else math.inf
        if t_gap <= cur_gap or t_gap < idm.s_min:
            continue
        if t_follow is not None:
            need = idm.s_min + t_follow[1] * idm.T_headway
            if t_follow[0] < need:
                continue
        if t_lead is None:
            t_acc = idm_accel(ego.v, None, 0.0, idm, p.acc_min, p.acc_max)
        else:
            t_acc = idm_accel(ego.v, t_lead[0], t_lead[1], idm, p.acc_min, p.acc_max)
        if t_acc > acc and (best is None or t_acc > best.accel):
            best = DriverAction(t_acc, cmd)
    return best if best is not None else DriverAction(acc, LaneCmd.KEEP)


def mean_action(pi: PolicyState, state: ScenarioState, model: DriverModel) -> DriverAction:
    """Max-probability action of ``pi`` in ``state``."""
    eff = resolve(pi, model.params, state.dt)
    if eff.kind == PolicyKind.BRAKE:
        return DriverAction(model.params.a_decelerate, LaneCmd.KEEP)
    if eff.kind == PolicyKind.BLIND:
        return _hazard_aware_action(state.ego, (), state.road, model)
    return _hazard_aware_action(state.ego, state.agents, state.road, model)


def policy_action(pi: PolicyState, state: ScenarioState, model: DriverModel) -> ActionDistribution:
    return ActionDistribution(mean_action(pi, state, model), model.params.accel_sigma)


def action_likelihood(pi: PolicyState, a: DriverAction, state: ScenarioState,
                      model: DriverModel) -> float:
    dist = policy_action(pi, state, model)
    dens = dist.density(a.accel)
    if a.lane_cmd != dist.mean.lane_cmd:
        dens *= model.params.lane_mismatch_prob
    return dens


def all_policy_states(params: DriverParams, dt: float) -> Tuple[PolicyState, ...]:
    """The finite timer-indexed behaviour set."""
    n_d = steps_for(params.T_D, dt)
    n_r = steps_for(params.T_R, dt)
    states = [SAFE, BLIND]
    states += [PolicyState(PolicyKind.BRAKE, k) for k in range(n_r)]
    states += [PolicyState(PolicyKind.DELAY_SAFE, k) for k in range(n_d)]
    states += [PolicyState(PolicyKind.DELAY_BRAKE, k) for k in range(n_d)]
    return tuple(states)
