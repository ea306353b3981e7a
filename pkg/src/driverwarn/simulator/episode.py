"""Closed-loop episodes: warning selection, driver reaction, world update and
belief tracking, one 0.5 s step at a time."""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Dict, List, Optional, Tuple

from ..baselines import rule_based_warning, time_to_collision, ttc_warning
from ..core import DriverAction, RngStream, ScenarioState, WarningLevel, gap_to_lead
from ..estimator import Belief, BehaviorEstimator
from ..planner import PlanningEnv, select_warning_mdp, select_warning_pomdp
from ..policies import BLIND, PolicyKind, PolicyState, advance_policy, policy_action
from ..rewards import COLLISION, traj_reward
from .scenarios import ScenarioConfig, initial_state, step_world

if TYPE_CHECKING:
    from ..config import ExperimentConfig

# independent random streams per episode seed
STREAM_TRANSITION = 0
STREAM_ACTION = 1
STREAM_AGENTS = 2


class Method(str, enum.Enum):
    EST_STATE_MDP = "EstStateMdp"
    APPROX_POMDP = "ApproxPomdp"
    TTC_BASELINE = "TtcBaseline"
    RULE_BASELINE = "RuleBaseline"
    NO_WARNING = "NoWarningControl"


WARNING_METHODS = (Method.EST_STATE_MDP, Method.APPROX_POMDP,
                   Method.TTC_BASELINE, Method.RULE_BASELINE)


@dataclass(frozen=True)
class StepRecord:
    state: ScenarioState
    action: DriverAction
    warning: WarningLevel
    true_policy: PolicyState  # post-warning behaviour that produced the action
    belief: Belief  # belief after this step's update
    r_traj: float


@dataclass
class EpisodeResult:
    trajectory: List[StepRecord] = field(default_factory=list)
    total_reward: float = 0.0
    warning_counts: Dict[WarningLevel, int] = field(
        default_factory=lambda: {w: 0 for w in WarningLevel})
    collision: bool = False
    degenerate_steps: int = 0

    def count(self, w: WarningLevel) -> int:
        return self.warning_counts[w]


def sample_transition(outcomes, u: float) -> PolicyState:
    acc = 0.0
    for pi, p in outcomes:
        acc += p
        if u < acc:
            return pi
    return outcomes[-1][0]


class WarningSelector:
    """Produces the warning for one step according to a method."""

    def __init__(self, method: Method, config: "ExperimentConfig", script: ScenarioConfig):
        self.method = Method(method)
        self.config = config
        self.env = PlanningEnv(config.driver, config.weights, script)

    def __call__(self, state: ScenarioState, belief: Belief) -> WarningLevel:
        cfg = self.config
        m = self.method
        if m == Method.NO_WARNING:
            return WarningLevel.NO_WARNING
        if m == Method.TTC_BASELINE:
            return ttc_warning(time_to_collision(state), cfg.rules)
        if m == Method.RULE_BASELINE:
            return rule_based_warning(state, cfg.rules)
        self.env.clear()
        if m == Method.EST_STATE_MDP:
            return select_warning_mdp(belief, state, cfg.th_safety, cfg.transition, cfg.planner, self.env)
        return select_warning_pomdp(belief, state, cfg.transition, cfg.planner, self.env)


def episode(script: ScenarioConfig, method: Method | str, seed: int,
            config: "ExperimentConfig", initial_policy: PolicyState = BLIND,
            forced_warnings: Optional[Dict[int, WarningLevel]] = None,
            forced_policies: Optional[Dict[int, PolicyState]] = None) -> EpisodeResult:
    """Run one closed-loop episode.

    ``forced_warnings`` maps step index to a warning that replaces the
    method's choice, and ``forced_policies`` maps step index to a post-warning
    behaviour that replaces the sampled one (both used for scripted demos).
    The estimator never sees either override directly.
    """
    method = Method(method)
    rng_trans = RngStream(seed, STREAM_TRANSITION)
    rng_act = RngStream(seed, STREAM_ACTION)
    rng_agents = RngStream(seed, STREAM_AGENTS)
    driver = config.driver
    params = driver.params
    select = WarningSelector(method, config, script)
    estimator = BehaviorEstimator(config.prior(), config.transition, driver)

    state = initial_state(script)
    true_bw = initial_policy
    result = EpisodeResult()
    total = 0.0
    for k in range(script.n_steps):
        if forced_warnings is not None and k in forced_warnings:
            w = forced_warnings[k]
        else:
            w = select(state, estimator.belief)
        # draws happen every step so streams stay aligned across methods
        u = rng_trans.uniform()
        noise = rng_act.normal()
        true_aw = sample_transition(config.transition.query(true_bw, w), u)
        if forced_policies is not None and k in forced_policies:
            true_aw = forced_policies[k]
        dist = policy_action(true_aw, state, driver)
        accel = min(params.acc_max, max(params.acc_min, dist.mean.accel + dist.accel_sigma * noise))
        action = DriverAction(accel, dist.mean.lane_cmd)

        nxt = step_world(state, action, script, rng_agents)
        r = traj_reward(state, action, config.weights, nxt)
        belief = estimator.update(w, action, state)
        result.warning_counts[w] += 1
        result.trajectory.append(StepRecord(state, action, w, true_aw, belief, r))
        if r == COLLISION:
            result.collision = True
            total = COLLISION
            break
        total += r
        true_bw = advance_policy(true_aw, params, state.dt)
        state = nxt
    result.total_reward = total
    result.degenerate_steps = estimator.degenerate_steps
    return result


TRACE_COLUMNS = ("t", "ego_s", "ego_v", "ego_a", "lane", "gap", "warning", "true_policy",
                 "belief_blind", "belief_safe", "belief_brake", "r_traj")


def trace_rows(result: EpisodeResult) -> List[Tuple]:
    rows = []
    for rec in result.trajectory:
        ego = rec.state.ego.current
        lead = gap_to_lead(rec.state)
        b = rec.belief
        rows.append((
            f"{rec.state.t:.2f}", f"{ego.s:.4f}", f"{ego.v:.4f}", f"{rec.action.accel:.4f}",
            ego.lane, "" if lead is None else f"{lead[0]:.4f}", rec.warning.label,
            str(rec.true_policy),
            f"{b.kind_mass(PolicyKind.BLIND) + b.kind_mass(PolicyKind.DELAY_SAFE) + b.kind_mass(PolicyKind.DELAY_BRAKE):.6f}",
            f"{b.kind_mass(PolicyKind.SAFE):.6f}", f"{b.kind_mass(PolicyKind.BRAKE):.6f}",
            "-inf" if rec.r_traj == COLLISION else f"{rec.r_traj:.6f}",
        ))
    return rows


def write_trace(result: EpisodeResult, path: Path | str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        writer.writerows(trace_rows(result))
