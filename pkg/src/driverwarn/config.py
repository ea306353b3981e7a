"""Experiment configuration and its JSON file format."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Mapping, Tuple

from .baselines import RuleParams
from .core import RoadMap, WarningLevel
from .estimator import Belief
from .planner import PlannerConfig
from .policies import DriverModel, DriverParams, IdmParams, PolicyKind, PolicyState
from .rewards import RewardWeights
from .simulator.scenarios import HAZARD_ID, BackgroundVehicle, ScenarioConfig, ScenarioKind, build_scenario
from .transition import TransitionModel

DEFAULT_CONFIG_PATH = Path(__file__).with_name("default_config.json")


@dataclass(frozen=True)
class ScenarioDefaults:
    """Scenario settings shared by every (kind, d_gap0) cell."""

    ego_v0: float = 11.0
    trigger_time: float = 0.0
    cut_in_duration: float = 2.0
    hazard_decel: float = 6.0
    episode_length: float = 8.0
    dt: float = 0.5
    front_brake_road: RoadMap = field(default_factory=lambda: RoadMap(lane_count=1))
    front_brake_background: Tuple[BackgroundVehicle, ...] = (
        BackgroundVehicle("trail", 0, -30.0, 11.0),)
    lane_change_road: RoadMap = field(default_factory=lambda: RoadMap(lane_count=2))
    # slow platoon the cut-in vehicle leaves behind; keeps the adjacent lane occupied
    lane_change_background: Tuple[BackgroundVehicle, ...] = (
        BackgroundVehicle("trail", 0, -30.0, 11.0),
        BackgroundVehicle("platoon1", 1, -20.0, 8.0, HAZARD_ID, 9.0),
        BackgroundVehicle("platoon2", 1, -40.0, 8.0, HAZARD_ID, 9.0),
    )

    def build(self, kind: ScenarioKind | str, d_gap0: float, **overrides) -> ScenarioConfig:
        kind = ScenarioKind(kind)
        brake = kind == ScenarioKind.FRONT_HARD_BRAKE
        opts = dict(
            ego_v0=self.ego_v0,
            trigger_time=self.trigger_time,
            cut_in_duration=self.cut_in_duration, hazard_decel=self.hazard_decel,
            episode_length=self.episode_length, dt=self.dt,
            background=self.front_brake_background if brake else self.lane_change_background,
            road=self.front_brake_road if brake else self.lane_change_road,
        )
        opts.update(overrides)
        return build_scenario(kind, d_gap0, **opts)


@dataclass(frozen=True)
class ExperimentConfig:
    driver: DriverModel = field(default_factory=DriverModel)
    transition: TransitionModel = field(default_factory=TransitionModel.default)
    weights: RewardWeights = field(default_factory=RewardWeights)
    rules: RuleParams = field(default_factory=RuleParams)
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    scenario: ScenarioDefaults = field(default_factory=ScenarioDefaults)
    th_safety: float = 0.2
    initial_belief: Tuple[Tuple[PolicyState, float], ...] = (
        (PolicyState(PolicyKind.BLIND), 0.5), (PolicyState(PolicyKind.SAFE), 0.5))

    def __post_init__(self):
        if not 0 < self.th_safety < 1:
            raise ValueError("th_safety must lie in (0, 1)")
        if self.planner.dt != self.scenario.dt:
            raise ValueError("planner and simulator must share dt")
        if self.planner.gamma != self.weights.gamma:
            raise ValueError("planner gamma must equal reward gamma")
        Belief(dict(self.initial_belief))

    def prior(self) -> Belief:
        return Belief(dict(self.initial_belief))

    # JSON -----------------------------------------------------------------

    def to_dict(self) -> Dict[str, Any]:
        return {
            "idm": asdict(self.driver.idm),
            "driver": asdict(self.driver.params),
            "transition": self.transition.to_json(),
            "rewards": {
                "w_v": self.weights.w_v, "w_acc": self.weights.w_acc,
                "v_desire": self.weights.v_desire, "gamma": self.weights.gamma,
                "warning_costs": {w.label: c for w, c in self.weights.warning_costs.items()},
            },
            "rules": {
                "acc_min": self.rules.acc_min, "T_D": self.rules.T_D,
                "alpha": {w.label: a for w, a in self.rules.alpha_table.items()},
                "ttc_thresholds": {w.label: a for w, a in self.rules.ttc_thresholds.items()},
            },
            "planner": asdict(self.planner),
            "scenario": {
                f.name: _scenario_field_to_json(getattr(self.scenario, f.name))
                for f in fields(self.scenario)
            },
            "estimator": {
                "th_safety": self.th_safety,
                "initial_belief": {str(pi): p for pi, p in self.initial_belief},
            },
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ExperimentConfig":
        base = cls()
        driver = DriverModel(IdmParams(**data["idm"]) if "idm" in data else base.driver.idm,
                             DriverParams(**data["driver"]) if "driver" in data else base.driver.params)
        transition = (TransitionModel.from_json(data["transition"])
                      if "transition" in data else base.transition)
        weights = base.weights
        if "rewards" in data:
            r = dict(data["rewards"])
            costs = r.pop("warning_costs", None)
            if costs is not None:
                r["warning_costs"] = {WarningLevel.from_label(k): float(v) for k, v in costs.items()}
            weights = replace(weights, **r)
        rules = base.rules
        if "rules" in data:
            r = dict(data["rules"])
            kw = {k: r[k] for k in ("acc_min", "T_D") if k in r}
            if "alpha" in r:
                kw["alpha_table"] = {WarningLevel.from_label(k): float(v) for k, v in r["alpha"].items()}
            if "ttc_thresholds" in r:
                kw["ttc_thresholds"] = {WarningLevel.from_label(k): float(v)
                                        for k, v in r["ttc_thresholds"].items()}
            rules = replace(rules, **kw)
        planner = replace(base.planner, **data.get("planner", {}))
        scenario = base.scenario
        if "scenario" in data:
            s = dict(data["scenario"])
            for key in ("front_brake_background", "lane_change_background"):
                if key in s:
                    s[key] = tuple(BackgroundVehicle(**b) for b in s[key])
            for key in ("front_brake_road", "lane_change_road"):
                if key in s:
                    s[key] = RoadMap(**s[key])
            scenario = replace(scenario, **s)
        est = data.get("estimator", {})
        prior = base.initial_belief
        if "initial_belief" in est:
            prior = tuple((parse_policy_state(k), float(v)) for k, v in est["initial_belief"].items())
        return cls(driver=driver, transition=transition, weights=weights, rules=rules,
                   planner=planner, scenario=scenario,
                   th_safety=est.get("th_safety", base.th_safety), initial_belief=prior)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _scenario_field_to_json(value):
    if isinstance(value, tuple):
        return [asdict(v) for v in value]
    if isinstance(value, RoadMap):
        return asdict(value)
    return value


def parse_policy_state(text: str) -> PolicyState:
    """Inverse of ``str(PolicyState)``: ``Blind`` or ``Brake(1)``."""
    if text.endswith(")") and "(" in text:
        name, timer = text[:-1].split("(", 1)
        return PolicyState(PolicyKind.from_label(name), int(timer))
    return PolicyState(PolicyKind.from_label(text))


def load_config(path: str | Path | None = None) -> ExperimentConfig:
    """Load a JSON config; ``None`` loads the shipped defaults."""
    p = Path(path) if path is not None else DEFAULT_CONFIG_PATH
    with open(p) as fh:
        return ExperimentConfig.from_dict(json.load(fh))
