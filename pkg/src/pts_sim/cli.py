"""Command line interface.

Exit codes: 0 success, 2 scenario/validation problems, 3 planning failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import engine, planner, scenario
from .core import InvalidInputError

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_PLANNING = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pts-sim",
        description="Deterministic traffic simulator for leader-follower formations")
    sub = parser.add_subparsers(dest="command", required=True)

    simulate = sub.add_parser("simulate", help="run a scenario and export results")
    simulate.add_argument("--scenario", required=True, help="scenario YAML file")
    simulate.add_argument("--seed", type=int, default=None,
                          help="override the scenario seed")
    simulate.add_argument("--out", required=True,
                          help="output directory for trajectories.csv and metrics.json")
    simulate.add_argument("--max-steps", type=int, default=None,
                          help="override the step budget")

    plan = sub.add_parser("plan", help="print the planned waypoints of one formation")
    plan.add_argument("--scenario", required=True, help="scenario YAML file")
    plan.add_argument("--formation", required=True, help="formation id")
    plan.add_argument("--seed", type=int, default=None,
                      help="override the scenario seed")

    validate = sub.add_parser("validate", help="check a scenario file")
    validate.add_argument("--scenario", required=True, help="scenario YAML file")
    return parser


def _cmd_simulate(args) -> int:
    config = scenario.load_scenario(args.scenario)
    report = engine.run(config, seed=args.seed, max_steps=args.max_steps)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    scenario.write_trajectories(report, out_dir / "trajectories.csv")
    scenario.write_metrics(report, out_dir / "metrics.json")
    status = "completed" if report.completed else "step budget exhausted"
    print(f"{config.name}: {status} after {report.steps} steps "
          f"({report.steps * report.dt:.1f} s simulated)")
    print(f"collisions: {report.collision_count}")
    for spec in config.formations:
        arrival = report.time_to_goal.get(spec.id)
        label = f"{arrival:.1f} s" if arrival is not None else "did not arrive"
        print(f"  {spec.id}: {label}")
    return EXIT_OK


def _cmd_plan(args) -> int:
    config = scenario.load_scenario(args.scenario)
    formations = scenario.build_formations(config)
    world = engine.WorldState(formations=formations, obstacles=config.obstacles,
                              rng_seed=config.seed if args.seed is None else args.seed)
    engine.plan_paths(world, config)
    for formation in formations:
        if formation.id == args.formation:
            for x, y in formation.path:
                print(f"{x!r} {y!r}")
            return EXIT_OK
    raise scenario.ScenarioError(f"no formation with id {args.formation!r}")


def _cmd_validate(args) -> int:
    config = scenario.load_scenario(args.scenario)
    robots = sum(1 + len(f.followers) for f in config.formations)
    print(f"{config.name}: ok ({len(config.formations)} formations, {robots} robots, "
          f"{len(config.obstacles)} obstacles)")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {"simulate": _cmd_simulate, "plan": _cmd_plan, "validate": _cmd_validate}
    try:
        return handlers[args.command](args)
    except (scenario.ScenarioError, InvalidInputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except planner.PlanningError as exc:
        print(f"planning failed: {exc}", file=sys.stderr)
        return EXIT_PLANNING


if __name__ == "__main__":
    sys.exit(main())
