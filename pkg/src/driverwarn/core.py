"""Shared domain types, ego kinematics and seeded random streams."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple

import numpy as np

CAR_LENGTH = 4.5
CAR_WIDTH = 1.8
HISTORY_LENGTH = 10


class WarningLevel(enum.IntEnum):
    """Warning actions available to the system, ordered by severity."""

    NO_WARNING = 0
    TEXT = 1
    VOICE = 2
    ALARM = 3
    TAKE_OVER = 4

    @property
    def label(self) -> str:
        return _WARNING_LABELS[self]

    @classmethod
    def from_label(cls, label: str) -> "WarningLevel":
        try:
            return _LABEL_WARNINGS[label]
        except KeyError:
            raise ValueError(f"unknown warning {label!r}") from None


_WARNING_LABELS = {
    WarningLevel.NO_WARNING: "NoWarning",
    WarningLevel.TEXT: "Text",
    WarningLevel.VOICE: "Voice",
    WarningLevel.ALARM: "Alarm",
    WarningLevel.TAKE_OVER: "TakeOver",
}
_LABEL_WARNINGS = {v: k for k, v in _WARNING_LABELS.items()}

WARNINGS = tuple(WarningLevel)


class LaneCmd(enum.IntEnum):
    KEEP = 0
    SHIFT_LEFT = 1
    SHIFT_RIGHT = -1


class VehicleState(NamedTuple):
    """One kinematic frame. ``lane`` counts up to the left; ``lat_offset`` is
    measured from that lane's centre line."""

    s: float
    lane: int
    lat_offset: float
    v: float
    a: float = 0.0

    def lateral(self, lane_width: float) -> float:
        return self.lane * lane_width + self.lat_offset


class DriverAction(NamedTuple):
    accel: float
    lane_cmd: LaneCmd = LaneCmd.KEEP


@dataclass(frozen=True)
class StateHistory:
    """Bounded frame history, oldest first."""

    frames: Tuple[VehicleState, ...]
    dt: float
    max_len: int = HISTORY_LENGTH

    def __post_init__(self):
        if not self.frames:
            raise ValueError("history needs at least one frame")
        if len(self.frames) > self.max_len:
            raise ValueError("history longer than max_len")

    @classmethod
    def start(cls, frame: VehicleState, dt: float, max_len: int = HISTORY_LENGTH) -> "StateHistory":
        return cls((frame,), dt, max_len)

    @property
    def current(self) -> VehicleState:
        return self.frames[-1]

    @property
    def previous(self) -> VehicleState:
        return self.frames[-2] if len(self.frames) > 1 else self.frames[-1]

    def push(self, frame: VehicleState) -> "StateHistory":
        frames = self.frames + (frame,)
        if len(frames) > self.max_len:
            frames = frames[1:]
        return StateHistory(frames, self.dt, self.max_len)


@dataclass(frozen=True)
class RoadMap:
    lane_count: int = 2
    lane_width: float = 3.5
    speed_limit: float = 16.7
    car_length: float = CAR_LENGTH
    car_width: float = CAR_WIDTH


@dataclass(frozen=True)
class ScenarioState:
    """Ego and agent histories on a straight multi-lane road at time ``t``."""

    ego: StateHistory
    agents: Tuple[StateHistory, ...]
    agent_ids: Tuple[str, ...]
    road: RoadMap
    t: float = 0.0

    def __post_init__(self):
        if len(self.agents) != len(self.agent_ids):
            raise ValueError("agents and agent_ids differ in length")
        n = len(self.ego.frames)
        for h in self.agents:
            if h.dt != self.ego.dt or len(h.frames) != n:
                raise ValueError("all histories must share dt and frame count")

    @property
    def dt(self) -> float:
        return self.ego.dt

    def agent(self, agent_id: str) -> StateHistory:
        return self.agents[self.agent_ids.index(agent_id)]

    def without_agents(self) -> "ScenarioState":
        return ScenarioState(self.ego, (), (), self.road, self.t)


class RngStream:
    """Independent, platform-stable random stream keyed by (seed, stream id).

    Uses PCG64 seeded through ``SeedSequence`` with the stream id as spawn key,
    so streams never overlap and replay bit-identically.
    """

    def __init__(self, seed: int, stream: int = 0):
        self.seed = int(seed)
        self.stream = int(stream)
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream,))
        self._gen = np.random.Generator(np.random.PCG64(ss))

    def uniform(self) -> float:
        return float(self._gen.random())

    def normal(self, mean: float = 0.0, sigma: float = 1.0) -> float:
        return float(self._gen.normal(mean, sigma))


def _check_finite(*values: float) -> None:
    for x in values:
        if not math.isfinite(x):
            raise ValueError(f"non-finite input {x!r}")


def ego_dynamics(x: VehicleState, a: DriverAction, dt: float,
                 lane_count: Optional[int] = None) -> VehicleState:
    """Advance one vehicle by ``dt`` under a constant acceleration command.

    Speed clamps at zero: when the vehicle would stop mid-step it is held at
    the stopping point. The stored acceleration is the realised mean over the
    step, which differs from the command only at the clamp. Lane commands
    complete within the step.
    """
    _check_finite(x.s, x.v, x.lat_offset, a.accel, dt)
    if dt <= 0:
        raise ValueError("dt must be positive")
    v_next = x.v + a.accel * dt
    if v_next >= 0.0:
        s_next = x.s + x.v * dt + 0.5 * a.accel * dt * dt
        realised = a.accel
    else:
        # stops at tau = v / |accel| < dt
        s_next = x.s + x.v * x.v / (2.0 * -a.accel)
        v_next = 0.0
        realised = -x.v / dt
    lane = x.lane + int(a.lane_cmd)
    if lane_count is not None and not 0 <= lane < lane_count:
        raise ValueError(f"lane command leaves the road (lane {lane})")
    lat = x.lat_offset if a.lane_cmd == LaneCmd.KEEP else 0.0
    return VehicleState(s_next, lane, lat, v_next, realised)


def occupies_lane(agent: VehicleState, lane: int, road: RoadMap) -> bool:
    """True when the agent's footprint overlaps the lane band laterally."""
    w = road.lane_width
    y = agent.lane * w + agent.lat_offset
    centre = lane * w
    return abs(y - centre) < 0.5 * (w + road.car_width)


def gap_to_lead(state: ScenarioState) -> Optional[Tuple[float, float]]:
    """Bumper-to-bumper gap and speed of the nearest agent ahead in the ego lane."""
    ego = state.ego.current
    road = state.road
    best = None
    for h in state.agents:
        ag = h.current
        if ag.s <= ego.s or not occupies_lane(ag, ego.lane, road):
            continue
        gap = ag.s - ego.s - road.car_length
        if best is None or gap < best[0]:
            best = (gap, ag.v)
    return best
