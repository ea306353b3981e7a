"""Batch experiments: seeded sweeps over (scenario, gap, method) cells,
Table-style summaries, the ordering report and the belief-trace demo."""

from __future__ import annotations

import csv
import math
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .config import ExperimentConfig
from .core import WarningLevel
from .estimator import NORM_TOL
from .policies import PolicyKind, PolicyState, steps_for
from .simulator.episode import WARNING_METHODS, EpisodeResult, Method, episode, write_trace
from .simulator.scenarios import ScenarioKind

DEFAULT_GAPS = (8.5, 13.5, 18.5)
DEFAULT_CELLS = tuple((k, g) for k in ScenarioKind for g in DEFAULT_GAPS)
SUMMARY_COLUMNS = ("scenario", "d_gap0", "method", "runs", "mean_reward", "std_reward",
                   "text_ct", "voice_ct", "alarm_ct", "takeover_ct", "collision_rate")
_COUNTED = (WarningLevel.TEXT, WarningLevel.VOICE, WarningLevel.ALARM, WarningLevel.TAKE_OVER)
# expected ranking, best first; planners share the top rank
EXPECTED_RANK = {
    Method.EST_STATE_MDP: 0,
    Method.APPROX_POMDP: 0,
    Method.RULE_BASELINE: 1,
    Method.TTC_BASELINE: 2,
}


class SweepError(RuntimeError):
    """An episode failed; names the cell and seed so it can be rerun alone."""

    def __init__(self, cell: "CellKey", seed: int, cause: BaseException):
        super().__init__(f"episode failed in cell {cell} at seed {seed}: {cause!r}")
        self.cell = cell
        self.seed = seed


@dataclass(frozen=True, order=True)
class CellKey:
    scenario: str
    d_gap0: float
    method: str

    def __str__(self) -> str:
        return f"{self.scenario}/{self.d_gap0:g}/{self.method}"

    @property
    def slug(self) -> str:
        return f"{self.scenario}_{self.d_gap0:g}_{self.method}"


@dataclass(frozen=True)
class SweepSpec:
    cells: Tuple[Tuple[ScenarioKind, float], ...] = DEFAULT_CELLS
    methods: Tuple[Method, ...] = WARNING_METHODS
    runs: int = 200
    base_seed: int = 0
    out_dir: Optional[Path] = None
    write_traces: bool = True
    workers: Optional[int] = None  # None: one per CPU

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be at least 1")
        if not self.cells or not self.methods:
            raise ValueError("a sweep needs at least one cell and one method")
        object.__setattr__(self, "cells", tuple((ScenarioKind(k), float(g)) for k, g in self.cells))
        object.__setattr__(self, "methods", tuple(Method(m) for m in self.methods))

    def keys(self) -> List[CellKey]:
        return sorted(CellKey(k.value, g, m.value) for k, g in self.cells for m in self.methods)

    @property
    def episodes(self) -> int:
        return len(self.cells) * len(self.methods) * self.runs


@dataclass(frozen=True)
class EpisodeMetrics:
    seed: int
    total_reward: float
    counts: Tuple[int, ...]  # Text, Voice, Alarm, TakeOver
    collision: bool
    # worst |sum(belief) - 1| over the episode
    norm_error: float

    @classmethod
    def from_result(cls, seed: int, r: EpisodeResult) -> "EpisodeMetrics":
        err = max((abs(rec.belief.total() - 1.0) for rec in r.trajectory), default=0.0)
        return cls(seed, r.total_reward, tuple(r.count(w) for w in _COUNTED), r.collision, err)


@dataclass(frozen=True)
class CellSummary:
    key: CellKey
    runs: int
    mean_reward: float
    std_reward: float
    text_ct: float
    voice_ct: float
    alarm_ct: float
    takeover_ct: float
    collision_rate: float
    max_norm_error: float = 0.0

    @classmethod
    def from_metrics(cls, key: CellKey, metrics: Sequence[EpisodeMetrics]) -> "CellSummary":
        n = len(metrics)
        rewards = [m.total_reward for m in metrics]
        if any(r == -math.inf for r in rewards):
            mean, std = -math.inf, math.nan
        else:
            mean = math.fsum(rewards) / n
            std = statistics.stdev(rewards) if n > 1 else 0.0
        counts = [math.fsum(m.counts[i] for m in metrics) / n for i in range(len(_COUNTED))]
        return cls(key, n, mean, std, *counts,
                   collision_rate=sum(m.collision for m in metrics) / n,
                   max_norm_error=max(m.norm_error for m in metrics))

    @property
    def std_error(self) -> float:
        return self.std_reward / math.sqrt(self.runs)

    def count(self, w: WarningLevel) -> float:
        return (self.text_ct, self.voice_ct, self.alarm_ct, self.takeover_ct)[_COUNTED.index(w)]

    def row(self) -> Tuple[str, ...]:
        k = self.key
        return (k.scenario, f"{k.d_gap0:g}", k.method, str(self.runs),
                _fmt(self.mean_reward), _fmt(self.std_reward), _fmt(self.text_ct),
                _fmt(self.voice_ct), _fmt(self.alarm_ct), _fmt(self.takeover_ct),
                _fmt(self.collision_rate))


def _fmt(x: float) -> str:
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "-inf" if x < 0 else "inf"
    return f"{x:.2f}"


# sweep -----------------------------------------------------------------------

def _run_chunk(config: ExperimentConfig, key: CellKey, seeds: Sequence[int],
               trace_dir: Optional[str]) -> List[EpisodeMetrics]:
    script = config.scenario.build(key.scenario, key.d_gap0)
    out = []
    for seed in seeds:
        try:
            r = episode(script, key.method, seed, config)
        except Exception as exc:
            raise SweepError(key, seed, exc) from exc
        if trace_dir is not None:
            write_trace(r, Path(trace_dir) / f"seed_{seed:06d}.csv")
        out.append(EpisodeMetrics.from_result(seed, r))
    return out


def _chunks(seq: Sequence[int], size: int) -> Iterable[Sequence[int]]:
    for i in range(0, len(seq), size):
        yield seq[i:i + size]


def run_sweep(spec: SweepSpec, config: Optional[ExperimentConfig] = None,
              chunk_size: int = 25) -> List[CellSummary]:
    """Run every cell of ``spec``; write ``summary.csv`` (and traces) if an
    output directory is set. Summaries come back sorted by cell key."""
    config = config if config is not None else ExperimentConfig()
    seeds = [spec.base_seed + i for i in range(spec.runs)]
    out_dir = Path(spec.out_dir) if spec.out_dir is not None else None
    jobs = []
    for key in spec.keys():
        trace_dir = None
        if out_dir is not None and spec.write_traces:
            d = out_dir / "traces" / key.slug
            d.mkdir(parents=True, exist_ok=True)
            trace_dir = str(d)
        for part in _chunks(seeds, chunk_size):
            jobs.append((key, part, trace_dir))

    workers = spec.workers if spec.workers is not None else (os.cpu_count() or 1)
    per_cell: Dict[CellKey, List[EpisodeMetrics]] = {k: [] for k in spec.keys()}
    if workers <= 1:
        for key, part, trace_dir in jobs:
            per_cell[key].extend(_run_chunk(config, key, part, trace_dir))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [(key, pool.submit(_run_chunk, config, key, part, trace_dir))
                       for key, part, trace_dir in jobs]
            for key, fut in futures:
                per_cell[key].extend(fut.result())

    summaries = [CellSummary.from_metrics(k, sorted(per_cell[k], key=lambda m: m.seed))
                 for k in sorted(per_cell)]
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        write_summary(summaries, out_dir / "summary.csv")
    return summaries


def write_summary(summaries: Iterable[CellSummary], path: Path | str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS)
        for s in sorted(summaries, key=lambda s: s.key):
            writer.writerow(s.row())


def read_summary(path: Path | str) -> List[CellSummary]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            key = CellKey(row["scenario"], float(row["d_gap0"]), row["method"])
            out.append(CellSummary(
                key, int(row["runs"]), float(row["mean_reward"]), float(row["std_reward"]),
                float(row["text_ct"]), float(row["voice_ct"]), float(row["alarm_ct"]),
                float(row["takeover_ct"]), float(row["collision_rate"])))
    return out


def metrics_from_trace(path: Path | str, seed: int = 0) -> EpisodeMetrics:
    """Rebuild an episode's metrics from its trace CSV."""
    total = 0.0
    counts = dict.fromkeys(_COUNTED, 0)
    collision = False
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            w = WarningLevel.from_label(row["warning"])
            if w in counts:
                counts[w] += 1
            r = float(row["r_traj"])
            if r == -math.inf:
                collision = True
            total += r
    return EpisodeMetrics(seed, total, tuple(counts[w] for w in _COUNTED), collision, 0.0)


# ordering report -------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    cell: Tuple[str, float]
    better: str  # method expected to score at least as high
    worse: str
    gap: float  # mean(worse) - mean(better)
    tolerance: float

    def __str__(self) -> str:
        return (f"{self.cell[0]} d_gap={self.cell[1]:g}: {self.worse} beats {self.better} "
                f"by {self.gap:.2f} (tolerance {self.tolerance:.2f})")


@dataclass
class OrderingReport:
    rankings: Dict[Tuple[str, float], List[Tuple[str, float]]] = field(default_factory=dict)
    violations: List[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def exit_code(self) -> int:
        return 0 if self.ok else 1

    def text(self) -> str:
        lines = []
        for cell in sorted(self.rankings):
            order = "  >  ".join(f"{m} {_fmt(v)}" for m, v in self.rankings[cell])
            lines.append(f"{cell[0]} d_gap={cell[1]:g}: {order}")
        if self.violations:
            lines.append(f"{len(self.violations)} ordering violation(s):")
            lines += [f"  {v}" for v in self.violations]
        else:
            lines.append("ordering ok: planners >= rule-based >= TTC in every cell")
        return "\n".join(lines) + "\n"


def pooled_se(a: CellSummary, b: CellSummary) -> float:
    return math.hypot(a.std_error, b.std_error)


def compare_report(summaries: Iterable[CellSummary], tolerance_se: float = 0.0) -> OrderingReport:
    """Rank methods per cell and flag pairs that break planners >= rule >= TTC.

    A pair counts as a violation when the method expected to be worse has a
    higher mean by more than ``tolerance_se`` pooled standard errors.
    """
    cells: Dict[Tuple[str, float], Dict[str, CellSummary]] = {}
    for s in summaries:
        cells.setdefault((s.key.scenario, s.key.d_gap0), {})[s.key.method] = s
    report = OrderingReport()
    for cell, by_method in sorted(cells.items()):
        if len(by_method) < 2:
            raise ValueError(f"cell {cell} needs at least two methods")
        report.rankings[cell] = sorted(((m, s.mean_reward) for m, s in by_method.items()),
                                       key=lambda x: -x[1])
        ranked = [(EXPECTED_RANK[Method(m)], m, s) for m, s in by_method.items()
                  if Method(m) in EXPECTED_RANK]
        for rb, mb, sb in ranked:
            for rw, mw, sw in ranked:
                if rw <= rb:
                    continue
                diff = sw.mean_reward - sb.mean_reward
                if sb.mean_reward == -math.inf:
                    if sw.mean_reward > -math.inf:
                        report.violations.append(Violation(cell, mb, mw, math.inf, 0.0))
                    continue
                tol = tolerance_se * pooled_se(sb, sw) if sw.mean_reward > -math.inf else 0.0
                if diff > tol:
                    report.violations.append(Violation(cell, mb, mw, diff, tol))
    return report


# belief-trace demo -----------------------------------------------------------

DEMO_WARNING_TIMES = (0.5, 1.0)


@dataclass(frozen=True)
class DemoRun:
    seed: int
    switch_time: float  # when the true behaviour starts acting Safe
    times: Tuple[float, ...]
    safe_mass: Tuple[float, ...]  # belief on Safe after each step's update
    rows: Tuple[Tuple[str, ...], ...]

    def converged_within(self, window: float, threshold: float = 0.9) -> bool:
        """Safe mass exceeds ``threshold`` at some step ending within ``window`` of the switch."""
        eps = 1e-9
        for t, m in zip(self.times, self.safe_mass):
            t_end = t + self.dt
            if self.switch_time - eps <= t and t_end <= self.switch_time + window + eps and m > threshold:
                return True
        return False

    @property
    def dt(self) -> float:
        return self.times[1] - self.times[0] if len(self.times) > 1 else 0.0


DEMO_COLUMNS = ("t", "warning", "true_policy", "Safe", "Blind", "Brake",
                "DelayBlindToSafe", "DelayBlindToBrake")


def estimate_demo(seed: int, config: Optional[ExperimentConfig] = None,
                  scenario: ScenarioKind | str = ScenarioKind.FRONT_HARD_BRAKE,
                  d_gap0: float = 13.5, T_D: float = 1.5) -> DemoRun:
    """Belief trace for a driver who reacts to the first of two Voice warnings.

    The true behaviour is scripted Blind -> DelayBlindToSafe at the first
    warning and left on that track by the second, so it acts Safe once
    ``T_D`` has elapsed.
    """
    config = config if config is not None else ExperimentConfig()
    driver = replace(config.driver, params=replace(config.driver.params, T_D=T_D))
    config = replace(config, driver=driver)
    script = config.scenario.build(scenario, d_gap0)
    dt = script.dt
    warn_steps = [int(round(t / dt)) for t in DEMO_WARNING_TIMES]
    forced_w = {k: WarningLevel.NO_WARNING for k in range(script.n_steps)}
    forced_pi = {}
    for i, k in enumerate(warn_steps):
        forced_w[k] = WarningLevel.VOICE
        forced_pi[k] = PolicyState(PolicyKind.DELAY_SAFE, i)
    r = episode(script, Method.NO_WARNING, seed, config, forced_warnings=forced_w,
                forced_policies=forced_pi)
    switch = (warn_steps[0] + steps_for(T_D, dt)) * dt
    rows = []
    for rec in r.trajectory:
        b = rec.belief
        rows.append((f"{rec.state.t:.2f}", rec.warning.label, str(rec.true_policy),
                     *(f"{b.kind_mass(k):.6f}" for k in PolicyKind)))
    return DemoRun(seed, switch, tuple(rec.state.t for rec in r.trajectory),
                   tuple(rec.belief.kind_mass(PolicyKind.SAFE) for rec in r.trajectory),
                   tuple(rows))


def write_demo(run: DemoRun, path: Path | str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(DEMO_COLUMNS)
        writer.writerows(run.rows)


def demo_convergence_rate(runs: int, base_seed: int = 0,
                          config: Optional[ExperimentConfig] = None,
                          window: float = 1.5, threshold: float = 0.9) -> float:
    hits = sum(estimate_demo(base_seed + i, config).converged_within(window, threshold)
               for i in range(runs))
    return hits / runs


def check_normalisation(summaries: Iterable[CellSummary]) -> bool:
    return all(s.max_norm_error <= NORM_TOL for s in summaries)


def summaries_by_key(summaries: Iterable[CellSummary]) -> Mapping[CellKey, CellSummary]:
    return {s.key: s for s in summaries}
