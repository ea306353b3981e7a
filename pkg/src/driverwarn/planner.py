"""Optimal warning search over a simplified MDP state tree.

Only the branch on which the driver stays Blind (the spine) keeps choosing
warnings. Every branch that leaves Blind is rolled out to the horizon with
warnings fixed to NoWarning, so the tree grows quadratically in the horizon
instead of exponentially. Values are backed up with the Bellman equation,
taking exact expectations over the discrete behaviour-switch outcomes and
using each behaviour's max-probability action.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Tuple

from .core import DriverAction, ScenarioState, WarningLevel
from .estimator import Belief, extract_estimate
from .policies import (
    DriverModel,
    PolicyKind,
    PolicyState,
    advance_policy,
    mean_action,
)
from .rewards import COLLISION, RewardWeights, traj_reward, warning_cost
from .simulator.scenarios import ScenarioConfig, step_world
from .transition import TransitionModel

NEG_INF = float("-inf")
WARNINGS = tuple(WarningLevel)


@dataclass(frozen=True)
class PlannerConfig:
    H: int = 10
    dt: float = 0.5
    gamma: float = 0.95
    # force a take-over at the first spine node where every delayed reaction
    # already ends in a collision
    earliest_take_over: bool = True
    support_cutoff: float = 1e-3

    def __post_init__(self):
        if self.H < 1:
            raise ValueError("H must be at least 1")
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must lie in (0, 1]")


@dataclass
class SearchNode:
    state: ScenarioState
    policy_bw: PolicyState
    depth: int
    parent: Optional["SearchNode"] = None
    # post-warning behaviour -> (child, edge reward)
    children: Dict[PolicyState, Tuple["SearchNode", float]] = field(default_factory=dict)
    q: Dict[WarningLevel, float] = field(default_factory=dict)
    value: float = 0.0
    best_warning: WarningLevel = WarningLevel.NO_WARNING
    rollout: bool = False
    forced: bool = False
    terminal: bool = False

    def edges(self, model: TransitionModel) -> Iterator[Tuple[WarningLevel, PolicyState, float, float, "SearchNode"]]:
        """(warning, post-warning behaviour, probability, reward, child) per edge."""
        if not self.children:
            return
        warnings = (WarningLevel.NO_WARNING,) if self.rollout else WARNINGS
        for w in warnings:
            for aw, p in model.query(self.policy_bw, w):
                child, r = self.children[aw]
                yield w, aw, p, r, child

    def iter_nodes(self) -> Iterator["SearchNode"]:
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(child for child, _ in node.children.values())


class PlanningEnv:
    """Deterministic one-step model shared by every tree built for a decision.

    Steps are cached per (state object, action), so behaviours that act alike
    (Blind and unreacted delay states) share their simulation.
    """

    def __init__(self, driver: DriverModel, weights: RewardWeights, script: ScenarioConfig):
        self.driver = driver
        self.weights = weights
        self.script = script
        self._cache: Dict[Tuple[int, DriverAction], Tuple[ScenarioState, ScenarioState, float]] = {}
        self.sim_steps = 0

    def clear(self) -> None:
        self._cache.clear()

    def step(self, state: ScenarioState, aw: PolicyState) -> Tuple[ScenarioState, float]:
        a = mean_action(aw, state, self.driver)
        key = (id(state), a)
        hit = self._cache.get(key)
        if hit is not None:
            return hit[1], hit[2]
        nxt = step_world(state, a, self.script)
        r = traj_reward(state, a, self.weights, nxt)
        self.sim_steps += 1
        # keep ``state`` alive so its id cannot be reused while cached
        self._cache[key] = (state, nxt, r)
        return nxt, r


def _expect(terms) -> float:
    total = 0.0
    for p, x in terms:
        if p <= 0.0:
            continue
        if x == NEG_INF:
            return NEG_INF
        total += p * x
    return total


def _argmax_warning(q: Dict[WarningLevel, float]) -> WarningLevel:
    """Ties go to the less severe warning; if nothing is finite, take over."""
    if all(v == NEG_INF for v in q.values()):
        return WarningLevel.TAKE_OVER if WarningLevel.TAKE_OVER in q else max(q)
    best = None
    for w in WARNINGS:
        if w in q and (best is None or q[w] > q[best]):
            best = w
    return best


def _continuation(r: float, child: SearchNode, gamma: float) -> float:
    if r == COLLISION:
        return NEG_INF
    return r + gamma * child.value


def bellman_update(node: SearchNode, model: TransitionModel, weights: RewardWeights,
                   gamma: float) -> None:
    """Fill ``node.q``, ``node.value`` and ``node.best_warning`` from its children."""
    if node.terminal or not node.children:
        node.q = {WarningLevel.NO_WARNING: 0.0}
        node.value = 0.0
        node.best_warning = WarningLevel.NO_WARNING
        return
    warnings = (WarningLevel.NO_WARNING,) if node.rollout else WARNINGS
    q = {}
    for w in warnings:
        if node.forced and w != WarningLevel.TAKE_OVER:
            q[w] = NEG_INF
            continue
        terms = []
        for aw, p in model.query(node.policy_bw, w):
            child, r = node.children[aw]
            terms.append((p, _continuation(r, child, gamma)))
        ev = _expect(terms)
        q[w] = NEG_INF if ev == NEG_INF else warning_cost(w, weights) + ev
    node.q = q
    node.best_warning = _argmax_warning(q)
    node.value = q[node.best_warning]


class WarningSearch:
    """Builds and evaluates one tree per call to :meth:`search`."""

    def __init__(self, model: TransitionModel, cfg: PlannerConfig, env: PlanningEnv):
        self.model = model
        self.cfg = cfg
        self.env = env

    # forward simulation -------------------------------------------------

    def _child(self, node: SearchNode, aw: PolicyState) -> Tuple[SearchNode, float]:
        nxt, r = self.env.step(node.state, aw)
        params = self.env.driver.params
        child = SearchNode(nxt, advance_policy(aw, params, node.state.dt), node.depth + 1, parent=node)
        # leaves and terminal nodes keep this zero value unless backed up later
        child.q = {WarningLevel.NO_WARNING: 0.0}
        if r == COLLISION:
            child.terminal = True
        return child, r

    def _rollout(self, start: SearchNode) -> None:
        """Extend ``start`` to the horizon under NoWarning and value the chain."""
        chain = [start]
        node = start
        node.rollout = True
        while node.depth < self.cfg.H and not node.terminal:
            aw = node.policy_bw
            child, r = self._child(node, aw)
            child.rollout = True
            node.children[aw] = (child, r)
            chain.append(child)
            node = child
        gamma = self.cfg.gamma
        for n in reversed(chain):
            if n.terminal or not n.children:
                n.q = {WarningLevel.NO_WARNING: 0.0}
                n.value = 0.0
            else:
                (child, r), = n.children.values()
                n.value = _continuation(r, child, gamma)
                n.q = {WarningLevel.NO_WARNING: n.value}
            n.best_warning = WarningLevel.NO_WARNING

    def _expand(self, node: SearchNode) -> Optional[SearchNode]:
        """Create all children of ``node``; return the spine child if any."""
        outcomes: List[PolicyState] = []
        for w in WARNINGS:
            for aw, _ in self.model.query(node.policy_bw, w):
                if aw not in outcomes:
                    outcomes.append(aw)
        spine = None
        for aw in outcomes:
            child, r = self._child(node, aw)
            node.children[aw] = (child, r)
            if node.policy_bw.kind == PolicyKind.BLIND and aw.kind == PolicyKind.BLIND:
                spine = child
            else:
                self._rollout(child)
        return spine

    def _delays_all_fail(self, node: SearchNode) -> bool:
        """True when every reaction a non-take-over warning can trigger collides."""
        reactions = set()
        for w in WARNINGS:
            if w == WarningLevel.TAKE_OVER:
                continue
            for aw, p in self.model.query(node.policy_bw, w):
                if p > 0 and aw.kind != PolicyKind.BLIND:
                    reactions.add(aw)
        if not reactions:
            return False
        gamma = self.cfg.gamma
        return all(_continuation(*self._edge(node, aw), gamma) == NEG_INF for aw in reactions)

    @staticmethod
    def _edge(node: SearchNode, aw: PolicyState):
        child, r = node.children[aw]
        return r, child

    def forward_simulation(self, root: SearchNode) -> SearchNode:
        """Grow the spine from ``root``; return its deepest node."""
        node = root
        while node.depth < self.cfg.H:
            spine = self._expand(node)
            if self.cfg.earliest_take_over and node.policy_bw.kind == PolicyKind.BLIND \
                    and self._delays_all_fail(node):
                node.forced = True
                if spine is not None:
                    # the spine past a forced take-over is never followed
                    spine.terminal = True
                return node
            if spine is None or spine.terminal:
                return node
            node = spine
        return node

    # back propagation ---------------------------------------------------

    def back_propagation(self, leaf: SearchNode) -> List[WarningLevel]:
        gamma = self.cfg.gamma
        node = leaf
        while node is not None:
            if node.depth >= self.cfg.H and not node.children:
                node.q = {WarningLevel.NO_WARNING: 0.0}
                node.value = 0.0
                node.best_warning = WarningLevel.NO_WARNING
            else:
                bellman_update(node, self.model, self.env.weights, gamma)
            node = node.parent
        return self.spine_warnings(leaf)

    def spine_warnings(self, leaf: SearchNode) -> List[WarningLevel]:
        spine = []
        node = leaf
        while node is not None:
            spine.append(node)
            node = node.parent
        spine.reverse()
        warnings = [n.best_warning for n in spine if n.depth < self.cfg.H]
        warnings += [WarningLevel.NO_WARNING] * (self.cfg.H - len(warnings))
        return warnings

    def search(self, state0: ScenarioState, pi_hat: PolicyState) -> Tuple[SearchNode, List[WarningLevel]]:
        root = SearchNode(state0, pi_hat, 0)
        leaf = self.forward_simulation(root)
        warnings = self.back_propagation(leaf)
        return root, warnings


def search(state0: ScenarioState, pi_hat: PolicyState, model: TransitionModel,
           cfg: PlannerConfig, env: PlanningEnv) -> Tuple[SearchNode, List[WarningLevel]]:
    """Build the tree for ``(state0, pi_hat)``; return root and spine warnings."""
    return WarningSearch(model, cfg, env).search(state0, pi_hat)


def select_warning_mdp(b: Belief, state: ScenarioState, th_safety: float,
                       model: TransitionModel, cfg: PlannerConfig, env: PlanningEnv) -> WarningLevel:
    """Plan for the point estimate extracted from the belief."""
    pi_hat = extract_estimate(b, th_safety, env.driver.params, state.dt)
    root, _ = search(state, pi_hat, model, cfg, env)
    return root.best_warning


def expected_q(b: Belief, state: ScenarioState, model: TransitionModel, cfg: PlannerConfig,
               env: PlanningEnv) -> Dict[WarningLevel, float]:
    """Belief-weighted root Q-values over the support above the cutoff."""
    support = {pi: p for pi, p in b.items() if p >= cfg.support_cutoff}
    z = math.fsum(support.values())
    searcher = WarningSearch(model, cfg, env)
    tables = []
    for pi, p in sorted(support.items()):
        root, _ = searcher.search(state, pi)
        tables.append((p / z, root.q))
    return {w: _expect((p, q[w]) for p, q in tables) for w in WARNINGS}


def select_warning_pomdp(b: Belief, state: ScenarioState, model: TransitionModel,
                         cfg: PlannerConfig, env: PlanningEnv) -> WarningLevel:
    return _argmax_warning(expected_q(b, state, model, cfg, env))


def dump_tree(root: SearchNode) -> str:
    """One node per line: depth, policy, value, best warning, rollout flag."""
    lines = []
    stack = [root]
    while stack:
        n = stack.pop()
        lines.append(f"{n.depth}\t{n.policy_bw}\t{n.value!r}\t{n.best_warning.label}\t{int(n.rollout)}")
        stack.extend(reversed([c for c, _ in n.children.values()]))
    return "\n".join(lines) + "\n"
