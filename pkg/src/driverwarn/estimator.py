"""Discrete Bayesian filter over driver behaviours."""

from __future__ import annotations

import logging
import math
from typing import Dict, Iterable, Iterator, Mapping, Tuple

from .core import DriverAction, ScenarioState, WarningLevel
from .policies import (
    BLIND,
    DriverModel,
    DriverParams,
    PolicyKind,
    PolicyState,
    action_likelihood,
    advance_policy,
    is_blind_like,
)
from .transition import TransitionModel

log = logging.getLogger(__name__)

NORM_TOL = 1e-9
MIN_EVIDENCE = 1e-300

# argmax ties go to the earliest kind in this order
TIE_ORDER = (PolicyKind.SAFE, PolicyKind.BRAKE, PolicyKind.DELAY_BRAKE,
             PolicyKind.DELAY_SAFE, PolicyKind.BLIND)
_TIE_RANK = {k: i for i, k in enumerate(TIE_ORDER)}


class DegenerateObservation(ValueError):
    """Every behaviour in the support gives the observed action ~zero density."""


class Belief(Mapping[PolicyState, float]):
    """Normalised probability vector over behaviour states (read-only)."""

    __slots__ = ("_probs",)

    def __init__(self, probs: Mapping[PolicyState, float] | Iterable[Tuple[PolicyState, float]]):
        items = probs.items() if isinstance(probs, Mapping) else probs
        clean: Dict[PolicyState, float] = {}
        for pi, p in items:
            if p < 0 or not math.isfinite(p):
                raise ValueError(f"invalid probability {p!r} for {pi}")
            if p > 0:
                clean[pi] = clean.get(pi, 0.0) + p
        total = math.fsum(clean.values())
        if abs(total - 1.0) > NORM_TOL:
            raise ValueError(f"belief sums to {total!r}")
        self._probs = clean

    @classmethod
    def normalised(cls, weights: Mapping[PolicyState, float]) -> "Belief":
        total = math.fsum(weights.values())
        return cls({k: v / total for k, v in weights.items()})

    @classmethod
    def one_hot(cls, pi: PolicyState) -> "Belief":
        return cls({pi: 1.0})

    def __getitem__(self, pi: PolicyState) -> float:
        return self._probs.get(pi, 0.0)

    def __iter__(self) -> Iterator[PolicyState]:
        return iter(self._probs)

    def __len__(self) -> int:
        return len(self._probs)

    def __repr__(self) -> str:
        body = ", ".join(f"{pi}: {p:.4g}" for pi, p in self._probs.items())
        return f"Belief({{{body}}})"

    def total(self) -> float:
        return math.fsum(self._probs.values())

    def kind_mass(self, kind: PolicyKind) -> float:
        return math.fsum(p for pi, p in self._probs.items() if pi.kind == kind)

    def blind_mass(self, params: DriverParams, dt: float) -> float:
        """Probability the driver is not yet reacting to hazards."""
        return math.fsum(p for pi, p in self._probs.items() if is_blind_like(pi, params, dt))


def predict(b: Belief, w: WarningLevel, model: TransitionModel) -> Belief:
    out: Dict[PolicyState, float] = {}
    for pi, p in b.items():
        for nxt, q in model.query(pi, w):
            out[nxt] = out.get(nxt, 0.0) + q * p
    return Belief.normalised(out)


def correct(b_minus: Belief, a: DriverAction, state: ScenarioState,
            driver: DriverModel) -> Belief:
    """Bayes update with the observed action. Raises DegenerateObservation."""
    post = {pi: action_likelihood(pi, a, state, driver) * p for pi, p in b_minus.items()}
    z = math.fsum(post.values())
    if not z >= MIN_EVIDENCE:
        raise DegenerateObservation(f"total likelihood {z!r} for action {a}")
    return Belief({pi: v / z for pi, v in post.items()})


def advance(b_plus: Belief, params: DriverParams, dt: float) -> Belief:
    """Tick behaviour timers; expired states hand their mass to the target kind."""
    out: Dict[PolicyState, float] = {}
    for pi, p in b_plus.items():
        nxt = advance_policy(pi, params, dt)
        out[nxt] = out.get(nxt, 0.0) + p
    return Belief.normalised(out)


def extract_estimate(b: Belief, th_safety: float, params: DriverParams, dt: float) -> PolicyState:
    """Point estimate: Blind when the not-yet-reacting mass exceeds the
    threshold, otherwise the most probable state."""
    if not 0.0 < th_safety < 1.0:
        raise ValueError("th_safety must lie in (0, 1)")
    if b.blind_mass(params, dt) > th_safety:
        return BLIND
    return max(b.items(), key=lambda kv: (kv[1], -_TIE_RANK[kv[0].kind], -kv[0].timer))[0]


class BehaviorEstimator:
    """Stateful wrapper running predict -> correct -> advance each step."""

    def __init__(self, prior: Belief, transition: TransitionModel, driver: DriverModel):
        self.belief = prior
        self.transition = transition
        self.driver = driver
        self.degenerate_steps = 0

    def update(self, w: WarningLevel, a: DriverAction, state: ScenarioState) -> Belief:
        b_minus = predict(self.belief, w, self.transition)
        try:
            b_plus = correct(b_minus, a, state, self.driver)
        except DegenerateObservation as exc:
            log.warning("keeping predicted belief at t=%.2f: %s", state.t, exc)
            self.degenerate_steps += 1
            b_plus = b_minus
        self.belief = advance(b_plus, self.driver.params, state.dt)
        return self.belief
