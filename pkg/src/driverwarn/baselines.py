"""Rule-based warning generators used as baselines: a TTC threshold ladder
and the adaptive minimum-gap rule."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional

from .core import ScenarioState, WarningLevel, gap_to_lead

_GRADED = (WarningLevel.TEXT, WarningLevel.VOICE, WarningLevel.ALARM, WarningLevel.TAKE_OVER)


@dataclass(frozen=True)
class RuleParams:
    acc_min: float = -6.0
    T_D: float = 1.0
    alpha_table: Mapping[WarningLevel, float] = field(default_factory=lambda: {
        WarningLevel.TEXT: 0.15,
        WarningLevel.VOICE: 0.4,
        WarningLevel.ALARM: 0.7,
        WarningLevel.TAKE_OVER: 1.0,
    })
    ttc_thresholds: Mapping[WarningLevel, float] = field(default_factory=lambda: {
        WarningLevel.TEXT: 5.0,
        WarningLevel.VOICE: 3.5,
        WarningLevel.ALARM: 2.5,
        WarningLevel.TAKE_OVER: 1.5,
    })

    def __post_init__(self):
        if self.acc_min >= 0:
            raise ValueError("acc_min must be negative")
        if self.T_D <= 0:
            raise ValueError("T_D must be positive")
        if set(self.alpha_table) != set(_GRADED) or set(self.ttc_thresholds) != set(_GRADED):
            raise ValueError("alpha_table and ttc_thresholds need Text..TakeOver")
        alphas = [self.alpha_table[w] for w in _GRADED]
        if self.alpha_table[WarningLevel.TAKE_OVER] != 1.0:
            raise ValueError("take-over alpha must be 1")
        if not all(0 < a for a in alphas) or any(b <= a for a, b in zip(alphas, alphas[1:])):
            raise ValueError("alphas must lie in (0, 1] and increase with severity")
        ttcs = [self.ttc_thresholds[w] for w in _GRADED]
        if any(b >= a for a, b in zip(ttcs, ttcs[1:])):
            raise ValueError("TTC thresholds must decrease with severity")


def time_to_collision(state: ScenarioState) -> Optional[float]:
    """Gap over closing speed to the in-lane leader; ``None`` when not closing."""
    lead = gap_to_lead(state)
    if lead is None:
        return None
    gap, v_front = lead
    v_ego = state.ego.current.v
    if v_ego <= v_front:
        return None
    return max(gap, 0.0) / (v_ego - v_front)


def ttc_warning(ttc: Optional[float], params: RuleParams) -> WarningLevel:
    if ttc is None:
        return WarningLevel.NO_WARNING
    for w in reversed(_GRADED):
        if ttc < params.ttc_thresholds[w]:
            return w
    return WarningLevel.NO_WARNING


def min_gap_terms(d_gap: float, v_ego: float, v_front: float, params: RuleParams):
    """(d_front, d_ego, d_min): braking distances and the worst-case residual gap."""
    brake = 2.0 * abs(params.acc_min)
    d_front = v_front * v_front / brake
    d_ego = v_ego * params.T_D + v_ego * v_ego / brake
    return d_front, d_ego, d_gap + d_front - d_ego


def take_over_condition(d_gap: float, v_ego: float, v_front: float, params: RuleParams) -> bool:
    """Even an immediate hard brake leaves no gap."""
    brake = 2.0 * abs(params.acc_min)
    return d_gap + v_front * v_front / brake - v_ego * v_ego / brake <= 0.0


def rule_warning_from_gap(d_gap: float, v_ego: float, v_front: float,
                          params: RuleParams) -> WarningLevel:
    if take_over_condition(d_gap, v_ego, v_front, params):
        return WarningLevel.TAKE_OVER
    _, _, d_min = min_gap_terms(d_gap, v_ego, v_front, params)
    for w in (WarningLevel.ALARM, WarningLevel.VOICE, WarningLevel.TEXT):
        if d_min <= -params.alpha_table[w] * v_ego * params.T_D:
            return w
    return WarningLevel.NO_WARNING


def rule_based_warning(state: ScenarioState, params: RuleParams) -> WarningLevel:
    lead = gap_to_lead(state)
    if lead is None:
        return WarningLevel.NO_WARNING
    gap, v_front = lead
    return rule_warning_from_gap(gap, state.ego.current.v, v_front, params)
