"""Command line entry point: ``driverwarn {simulate,sweep,estimate-demo,report}``."""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path
from typing import List, Optional

from .config import load_config
from .core import WarningLevel
from .harness import (
    DEFAULT_CELLS,
    SweepSpec,
    compare_report,
    demo_convergence_rate,
    estimate_demo,
    read_summary,
    run_sweep,
    write_demo,
)
from .simulator.episode import WARNING_METHODS, Method, episode, write_trace
from .simulator.scenarios import ScenarioKind

_SCENARIOS = [k.value for k in ScenarioKind]
_METHODS = [m.value for m in Method]


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, default=None,
                   help="JSON experiment config (default: the shipped defaults)")
    p.add_argument("--seed", type=int, default=0, help="seed (base seed for batches)")
    p.add_argument("--out", type=Path, default=None, help="output file or directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="driverwarn",
                                     description="Driver-warning planning experiments")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one episode and write its trace")
    _add_common(p)
    p.add_argument("--scenario", choices=_SCENARIOS, default=ScenarioKind.FRONT_HARD_BRAKE.value)
    p.add_argument("--d-gap", type=float, default=13.5)
    p.add_argument("--method", choices=_METHODS, default=Method.EST_STATE_MDP.value)

    p = sub.add_parser("sweep", help="batch of seeded episodes per cell")
    _add_common(p)
    p.add_argument("--scenario", choices=_SCENARIOS, nargs="+", default=None)
    p.add_argument("--d-gap", type=float, nargs="+", default=None)
    p.add_argument("--method", choices=_METHODS, nargs="+", default=None)
    p.add_argument("--runs", type=int, default=200)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--no-traces", action="store_true", help="skip per-episode trace CSVs")

    p = sub.add_parser("estimate-demo", help="belief trace with two scripted Voice warnings")
    _add_common(p)
    p.add_argument("--runs", type=int, default=1,
                   help="seeds to check for convergence (the trace is written for the first)")

    p = sub.add_parser("report", help="check method ordering in a summary.csv")
    p.add_argument("--out", type=Path, required=True,
                   help="summary.csv or the sweep directory holding it")
    p.add_argument("--tolerance-se", type=float, default=1.0,
                   help="allowed shortfall in pooled standard errors")
    return parser


def _simulate(args) -> int:
    config = load_config(args.config)
    script = config.scenario.build(args.scenario, args.d_gap)
    r = episode(script, args.method, args.seed, config)
    counts = " ".join(f"{w.label}={r.count(w)}" for w in WarningLevel if w != WarningLevel.NO_WARNING)
    print(f"{args.scenario} d_gap={args.d_gap:g} {args.method} seed={args.seed}: "
          f"R_traj={r.total_reward:.2f} collision={r.collision} {counts}")
    if args.out is not None:
        write_trace(r, args.out)
        print(f"trace written to {args.out}")
    return 0


def _sweep(args) -> int:
    config = load_config(args.config)
    kinds = [ScenarioKind(k) for k in args.scenario] if args.scenario else list(ScenarioKind)
    gaps = args.d_gap or sorted({g for _, g in DEFAULT_CELLS})
    methods = [Method(m) for m in args.method] if args.method else list(WARNING_METHODS)
    spec = SweepSpec(cells=tuple((k, g) for k in kinds for g in gaps), methods=tuple(methods),
                     runs=args.runs, base_seed=args.seed, out_dir=args.out,
                     write_traces=not args.no_traces, workers=args.workers)
    t0 = time.perf_counter()
    summaries = run_sweep(spec, config)
    elapsed = time.perf_counter() - t0
    print("scenario,d_gap0,method,mean_reward,std_reward,text_ct,voice_ct,alarm_ct,takeover_ct,collision_rate")
    for s in summaries:
        row = s.row()
        print(",".join(row[:3] + row[4:]))
    print(f"{spec.episodes} episodes in {elapsed:.1f} s")
    return 0


def _estimate_demo(args) -> int:
    config = load_config(args.config)
    run = estimate_demo(args.seed, config)
    for row in run.rows:
        print(" ".join(row))
    if args.out is not None:
        write_demo(run, args.out)
        print(f"belief trace written to {args.out}")
    if args.runs > 1:
        rate = demo_convergence_rate(args.runs, args.seed, config)
        print(f"Safe mass > 0.9 within 1.5 s of the switch in {rate:.0%} of {args.runs} seeds")
    return 0


def _report(args) -> int:
    path = args.out / "summary.csv" if args.out.is_dir() else args.out
    report = compare_report(read_summary(path), tolerance_se=args.tolerance_se)
    sys.stdout.write(report.text())
    return report.exit_code


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"simulate": _simulate, "sweep": _sweep,
               "estimate-demo": _estimate_demo, "report": _report}[args.command]
    return handler(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
