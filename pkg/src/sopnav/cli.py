"""Command-line interface.

Subcommands: `bench` (seeded benchmark batch from a JSON config), `episode`
(single episode with trajectory dump), `solve` (run a solver on an instance
file), `pareto` (emit a front CSV). Exit code 0 on success, 2 on
configuration or contract errors.
"""

from __future__ import annotations

import argparse
import sys

from . import harness, moo, navgraph, sop
from .errors import SopnavError
from .planners import PLANNERS, run_episode, trajectory_to_csv, PlannerConfig
from .sensing import SensorConfig
from .world import WorldParams, generate_workspace, place_entities


def _add_bench(sub):
    p = sub.add_parser("bench", help="run a benchmark batch and emit reports")
    p.add_argument("--config", help="benchmark config JSON")
    p.add_argument("--out", default="reports", help="output directory")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int, dest="base_seed")
    p.add_argument("--L", type=float, dest="L_m")
    p.add_argument("--R", type=float, dest="R_m")
    p.add_argument("--M", type=int)
    p.add_argument("--planner", action="append", choices=PLANNERS)
    p.add_argument("--jobs", type=int)


def _add_episode(sub):
    p = sub.add_parser("episode", help="run one seeded episode")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--planner", default="sop", choices=PLANNERS)
    p.add_argument("--config", help="world params JSON")
    p.add_argument("--out", help="trajectory CSV path")
    p.add_argument("--L", type=float, default=100.0)
    p.add_argument("--R", type=float, default=3.0)
    p.add_argument("--M", type=int, default=10)
    p.add_argument("--no-occlusion", action="store_true")


def _add_solve(sub):
    p = sub.add_parser("solve", help="solve an instance file")
    p.add_argument("--instance", required=True)
    p.add_argument("--solver", default="exact", choices=("exact", "vns"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--iters", type=int, default=60)
    p.add_argument("--out", help="write the solution line here instead of stdout")


def _add_pareto(sub):
    p = sub.add_parser("pareto", help="enumerate a reward/cost front")
    p.add_argument("--instance", required=True)
    p.add_argument("--out", help="front CSV path (default stdout)")
    p.add_argument("--grid", type=int, default=10, help="number of even cost bounds")
    p.add_argument("--adaptive", action="store_true", help="sweep the full front instead")


def _cmd_bench(args) -> int:
    if args.config:
        cfg = harness.BenchmarkConfig.from_file(args.config)
    else:
        cfg = harness.BenchmarkConfig()
    for name in ("trials", "base_seed", "L_m", "R_m", "M", "jobs"):
        val = getattr(args, name, None)
        if val is not None:
            setattr(cfg, name, val)
    if args.planner:
        cfg.planners = tuple(args.planner)
    report = harness.run_benchmark(cfg)
    paths = harness.emit_report(report, args.out)
    for s in report.summary:
        print(f"{s.config} {s.planner}: spl={s.spl:.4f} successes={s.successes}/{s.trials}")
    print("wrote " + " ".join(paths))
    return 0


def _cmd_episode(args) -> int:
    params = WorldParams.from_file(args.config) if args.config else WorldParams()
    ws = generate_workspace(args.seed, params)
    placement = place_entities(args.seed, ws, args.M)
    sensors = SensorConfig(args.L, args.R, occlusion=not args.no_occlusion)
    cfg = PlannerConfig(short_range_m=args.R)
    outcome = run_episode(ws, placement, sensors, args.planner, cfg)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(trajectory_to_csv(outcome.trajectory))
    print(
        f"planner={args.planner} seed={args.seed} success={outcome.success} "
        f"traveled_m={outcome.traveled_m:.2f} steps={outcome.steps} reason={outcome.reason}"
    )
    return 0


def _cmd_solve(args) -> int:
    with open(args.instance) as fh:
        inst = navgraph.instance_from_text(fh.read())
    if args.solver == "exact":
        sol = sop.solve_exact(inst)
    else:
        sol = sop.solve_vns(inst, seed=args.seed, iters=args.iters)
    line = sol.to_line()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(line)
    else:
        sys.stdout.write(line)
    return 0


def _cmd_pareto(args) -> int:
    with open(args.instance) as fh:
        inst = navgraph.instance_from_text(fh.read())
    grid = moo.EpsilonGrid(adaptive=True) if args.adaptive else moo.EpsilonGrid(count=args.grid)
    front = moo.pareto_enumerate(inst, grid=grid)
    text = moo.front_to_csv(front)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="sopnav", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    _add_bench(sub)
    _add_episode(sub)
    _add_solve(sub)
    _add_pareto(sub)
    args = parser.parse_args(argv)
    handlers = {
        "bench": _cmd_bench,
        "episode": _cmd_episode,
        "solve": _cmd_solve,
        "pareto": _cmd_pareto,
    }
    try:
        return handlers[args.command](args)
    except SopnavError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
