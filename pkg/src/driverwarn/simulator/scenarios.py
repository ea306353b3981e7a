"""Hazard scenarios and the surrounding-agent model.

Two scripted hazards are supported: a leader that brakes hard to a lower
speed, and an adjacent-lane vehicle cutting in ahead of the ego at a lower
speed. Every other agent follows IDM in its lane. The same world step is used
by the simulator and, noise-free, by the planner.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Tuple

from ..core import (
    DriverAction,
    RngStream,
    RoadMap,
    ScenarioState,
    StateHistory,
    VehicleState,
    ego_dynamics,
    occupies_lane,
)
from ..policies import IdmParams, idm_accel

HAZARD_ID = "hazard"


class ScenarioKind(str, enum.Enum):
    FRONT_HARD_BRAKE = "FrontHardBrake"
    LANE_CHANGE = "LaneChange"


@dataclass(frozen=True)
class BackgroundVehicle:
    agent_id: str
    lane: int
    offset: float  # centre position at t=0 relative to the anchor vehicle (m)
    v0: float
    relative_to: str = "ego"  # "ego" or "hazard"
    v_desired: Optional[float] = None  # IDM desired speed, defaults to v0

    def __post_init__(self):
        if self.relative_to not in ("ego", HAZARD_ID):
            raise ValueError(f"relative_to must be 'ego' or 'hazard', not {self.relative_to!r}")


@dataclass(frozen=True)
class ScenarioConfig:
    kind: ScenarioKind
    d_gap0: float
    ego_v0: float = 11.0
    ego_lane: int = 0
    hazard_lane: int = 0
    hazard_v0: float = 12.0
    hazard_target_v: float = 8.0
    hazard_decel: float = 6.0
    trigger_time: float = 1.0
    cut_in_duration: float = 3.0
    hazard_enabled: bool = True
    background: Tuple[BackgroundVehicle, ...] = (
        BackgroundVehicle("trail", 0, -30.0, 11.0),
    )
    episode_length: float = 8.0
    dt: float = 0.5
    road: RoadMap = field(default_factory=RoadMap)
    agent_idm: IdmParams = field(default_factory=IdmParams)
    agent_acc_min: float = -6.0
    agent_acc_max: float = 2.0
    agent_accel_sigma: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ScenarioKind(self.kind))
        if not self.d_gap0 > 0:
            raise ValueError("d_gap0 must be positive")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        n = self.episode_length / self.dt
        if abs(n - round(n)) > 1e-9:
            raise ValueError("episode_length must be a multiple of dt")
        for lane in [self.ego_lane, self.hazard_lane] + [b.lane for b in self.background]:
            if not 0 <= lane < self.road.lane_count:
                raise ValueError(f"lane {lane} outside the road")
        ids = [b.agent_id for b in self.background]
        if HAZARD_ID in ids or len(set(ids)) != len(ids):
            raise ValueError("background agent ids must be unique and not 'hazard'")
        desired: Dict[str, IdmParams] = {
            b.agent_id: replace(self.agent_idm, v_desired=b.v0 if b.v_desired is None else b.v_desired)
            for b in self.background}
        desired[HAZARD_ID] = replace(self.agent_idm, v_desired=self.hazard_v0)
        object.__setattr__(self, "_idm_by_agent", desired)
        object.__setattr__(self, "_hazard_after",
                           replace(self.agent_idm, v_desired=self.hazard_target_v))

    @property
    def n_steps(self) -> int:
        return int(round(self.episode_length / self.dt))

    def agent_idm_params(self, agent_id: str) -> IdmParams:
        return self._idm_by_agent[agent_id]


def build_scenario(kind: ScenarioKind | str, d_gap0: float, **overrides) -> ScenarioConfig:
    """Default hazard scenario: ego at 11 m/s, hazard ``d_gap0`` ahead."""
    kind = ScenarioKind(kind)
    if kind == ScenarioKind.FRONT_HARD_BRAKE:
        base = dict(hazard_lane=0, hazard_v0=12.0, hazard_target_v=8.0)
    elif kind == ScenarioKind.LANE_CHANGE:
        base = dict(hazard_lane=1, hazard_v0=8.0, hazard_target_v=8.0)
    else:  # pragma: no cover - ScenarioKind() already rejects unknown kinds
        raise ValueError(f"invalid scenario kind {kind!r}")
    base.update(overrides)
    return ScenarioConfig(kind=kind, d_gap0=d_gap0, **base)


def initial_state(cfg: ScenarioConfig) -> ScenarioState:
    road = cfg.road
    dt = cfg.dt
    ego = VehicleState(0.0, cfg.ego_lane, 0.0, cfg.ego_v0, 0.0)
    hazard = VehicleState(cfg.d_gap0 + road.car_length, cfg.hazard_lane, 0.0, cfg.hazard_v0, 0.0)
    agents = [StateHistory.start(hazard, dt)]
    ids = [HAZARD_ID]
    for b in cfg.background:
        anchor = hazard.s if b.relative_to == HAZARD_ID else ego.s
        agents.append(StateHistory.start(VehicleState(anchor + b.offset, b.lane, 0.0, b.v0, 0.0), dt))
        ids.append(b.agent_id)
    return ScenarioState(StateHistory.start(ego, dt), tuple(agents), tuple(ids), road, 0.0)


def _leader(me: VehicleState, others, road: RoadMap):
    lead = None
    for o in others:
        if o is me or o.s <= me.s or not occupies_lane(o, me.lane, road):
            continue
        gap = o.s - me.s - road.car_length
        if lead is None or gap < lead[0]:
            lead = (gap, o.v)
    return lead


def _idm_frame(me: VehicleState, others, road: RoadMap, p: IdmParams,
               cfg: ScenarioConfig, noise: float) -> Tuple[float, float, float]:
    lead = _leader(me, others, road)
    if lead is None:
        acc = idm_accel(me.v, None, 0.0, p, cfg.agent_acc_min, cfg.agent_acc_max)
    else:
        acc = idm_accel(me.v, lead[0], lead[1], p, cfg.agent_acc_min, cfg.agent_acc_max)
    acc = min(cfg.agent_acc_max, max(cfg.agent_acc_min, acc + noise))
    nxt = ego_dynamics(me, DriverAction(acc), cfg.dt)
    return nxt.s, nxt.v, nxt.a


def _hard_brake_longitudinal(me: VehicleState, cfg: ScenarioConfig) -> Tuple[float, float, float]:
    dt, decel, target = cfg.dt, cfg.hazard_decel, cfg.hazard_target_v
    v1 = me.v - decel * dt
    if v1 >= target:
        return me.s + me.v * dt - 0.5 * decel * dt * dt, v1, -decel
    tau = (me.v - target) / decel
    s1 = me.s + me.v * tau - 0.5 * decel * tau * tau + target * (dt - tau)
    return s1, target, (target - me.v) / dt


def _cut_in_lateral(t_next: float, cfg: ScenarioConfig) -> Tuple[int, float]:
    w = cfg.road.lane_width
    frac = min(1.0, max(0.0, (t_next - cfg.trigger_time) / cfg.cut_in_duration))
    y = (cfg.hazard_lane + frac * (cfg.ego_lane - cfg.hazard_lane)) * w
    lane = int(math.floor(y / w + 0.5))
    return lane, y - lane * w


def surrounding_step(state: ScenarioState, script: ScenarioConfig,
                     rng: Optional[RngStream] = None) -> Tuple[VehicleState, ...]:
    """Agent frames at ``t + dt``, all computed from the frames at ``t``."""
    road = state.road
    t = state.t
    eps = 1e-9
    frames = [h.current for h in state.agents]
    everyone = frames + [state.ego.current]
    out = []
    for agent_id, me in zip(state.agent_ids, frames):
        noise = 0.0
        if rng is not None and script.agent_accel_sigma > 0:
            noise = rng.normal(0.0, script.agent_accel_sigma)
        lane, lat = me.lane, me.lat_offset
        if agent_id == HAZARD_ID and script.hazard_enabled:
            active = t >= script.trigger_time - eps
            if script.kind == ScenarioKind.FRONT_HARD_BRAKE and active and me.v > script.hazard_target_v:
                s1, v1, a1 = _hard_brake_longitudinal(me, script)
            else:
                p = script._hazard_after if active else script.agent_idm_params(HAZARD_ID)
                s1, v1, a1 = _idm_frame(me, everyone, road, p, script, noise)
            if script.kind == ScenarioKind.LANE_CHANGE and t + script.dt > script.trigger_time + eps:
                lane, lat = _cut_in_lateral(t + script.dt, script)
        else:
            s1, v1, a1 = _idm_frame(me, everyone, road, script.agent_idm_params(agent_id), script, noise)
        out.append(VehicleState(s1, lane, lat, v1, a1))
    return tuple(out)


def step_world(state: ScenarioState, action: DriverAction, script: ScenarioConfig,
               rng: Optional[RngStream] = None) -> ScenarioState:
    """Advance ego (kinematics) and agents (script / IDM) by one step."""
    ego1 = ego_dynamics(state.ego.current, action, state.dt, state.road.lane_count)
    agents1 = surrounding_step(state, script, rng)
    return ScenarioState(
        state.ego.push(ego1),
        tuple(h.push(f) for h, f in zip(state.agents, agents1)),
        state.agent_ids,
        state.road,
        state.t + state.dt,
    )
