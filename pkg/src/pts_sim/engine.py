"""Simulation engine: plans every formation, then advances the world with
a fixed timestep until all formations arrive.

Each step has two phases.  Phase A computes every leader's avoidance
decision against a consistent snapshot (no state is written), so the
per-formation computations are order independent and may run on a thread
pool (PTS_SIM_THREADS).  Phase B applies decisions, integrates robots and
checks arrivals sequentially, in formation order.  Results are therefore
byte-identical for any thread count.
"""

from __future__ import annotations

import math
import os
from array import array
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kinematics, orca, planner
from .core import (Formation, GainSet, InvalidInputError, Obstacle,
                   PlanarVelocity, ZERO_VELOCITY, STOP_CMD)
from .formation_control import follower_cmd, tracking_errors
from .scenario import ScenarioConfig, SimParams, build_formations

THREADS_ENV = "PTS_SIM_THREADS"


@dataclass
class WorldState:
    """Mutable world: formations, static obstacles and the clock."""

    formations: list[Formation]
    obstacles: tuple[Obstacle, ...]
    timestep_index: int = 0
    sim_time: float = 0.0
    rng_seed: int = 0


@dataclass
class SimReport:
    """Everything a run produced: summary metrics plus raw series.

    trajectories maps formation id to a list over robots of (role,
    samples); samples is a flat array of (x, y, theta, v, omega) per
    recorded step, sampled at the start of each step (time = step * dt).
    """

    config: ScenarioConfig
    seed: int
    dt: float
    steps: int = 0
    completed: bool = False
    collision_count: int = 0
    min_separation: float = math.inf
    min_obstacle_clearance: float = math.inf
    time_to_goal: dict[str, float | None] = field(default_factory=dict)
    trajectories: dict[str, list[tuple[str, array]]] = field(default_factory=dict)
    min_distance_series: dict[str, array] = field(default_factory=dict)
    min_separation_series: dict[str, array] = field(default_factory=dict)
    follower_distance_series: dict[str, list[array]] = field(default_factory=dict)
    world: WorldState | None = None


def thread_count() -> int:
    """Worker threads for phase A; 0 (the default) means in-process
    sequential computation, which is the reference behaviour."""
    raw = os.environ.get(THREADS_ENV, "0")
    try:
        value = int(raw)
    except ValueError:
        raise InvalidInputError(f"{THREADS_ENV} must be an integer, got {raw!r}")
    if value < 0:
        raise InvalidInputError(f"{THREADS_ENV} must be >= 0, got {value}")
    return value


def plan_paths(world: WorldState, config: ScenarioConfig) -> None:
    """Plan and interpolate a path for every formation (deterministic
    per-formation seeds derived from the scenario seed)."""
    params = config.params
    seeds = np.random.SeedSequence(world.rng_seed).spawn(len(world.formations))
    for formation, seq in zip(world.formations, seeds):
        clearance = formation.radius + params.clearance_margin
        try:
            path = planner.plan(formation.src, formation.dest,
                                list(world.obstacles), config.arena, clearance,
                                params.rrt, seed=np.random.default_rng(seq))
        except planner.PlanningError as exc:
            raise planner.PlanningError(
                f"formation {formation.id!r}: {exc}", exc.iterations) from exc
        except InvalidInputError as exc:
            raise InvalidInputError(f"formation {formation.id!r}: {exc}") from exc
        formation.path = list(planner.interpolate(path, params.waypoint_spacing).points)
        formation.next_dest_index = 1 if len(formation.path) > 1 else 0
        formation.v_pref = orca.preferred_velocity(
            formation.position, formation.next_dest,
            formation.next_dest_index >= len(formation.path) - 1,
            formation.v_max, params.tau_slow)


def _phase_a(world: WorldState, params: SimParams, index: int) -> orca.OrcaResult | None:
    formation = world.formations[index]
    if formation.arrived:
        return None
    neighbours = orca.formation_neighbours(world.formations, index)
    return orca.leader_velocity(formation, neighbours, world.obstacles, params)


def _apply(world: WorldState, params: SimParams, gains: GainSet,
           decisions: list[orca.OrcaResult | None]) -> None:
    dt = params.dt
    for formation, decision in zip(world.formations, decisions):
        if decision is None:
            continue
        formation.v_pref = decision.v_pref
        formation.next_dest_index = decision.next_dest_index
        leader = formation.leader
        before = leader.pose
        leader.cmd = decision.cmd
        leader.pose = kinematics.integrate(before, decision.cmd, leader.d, dt)
        formation.velocity = PlanarVelocity((leader.pose.x - before.x) / dt,
                                            (leader.pose.y - before.y) / dt)
        follower_v_max = formation.v_max * params.follower_speed_factor
        for robot, spec in formation.followers:
            errors = tracking_errors(before, robot.pose, spec)
            cmd = follower_cmd(decision.cmd, errors, gains, spec, robot.d,
                               follower_v_max, params.omega_max)
            robot.cmd = cmd
            robot.pose = kinematics.integrate(robot.pose, cmd, robot.d, dt)
        if (formation.next_dest_index >= len(formation.path) - 1
                and math.hypot(formation.dest[0] - leader.pose.x,
                               formation.dest[1] - leader.pose.y) <= params.arrival_tol):
            formation.arrived = True
            formation.next_dest_index = len(formation.path)
            formation.velocity = ZERO_VELOCITY
            formation.v_pref = ZERO_VELOCITY
            leader.cmd = STOP_CMD
            for robot, _ in formation.followers:
                robot.cmd = STOP_CMD
    world.timestep_index += 1
    world.sim_time = world.timestep_index * dt


def step(world: WorldState, params: SimParams,
         gains: GainSet | None = None,
         pool: ThreadPoolExecutor | None = None) -> WorldState:
    """Advance the world by one timestep (in place; the world is returned
    for convenience).  Raises if every formation has already arrived."""
    if all(f.arrived for f in world.formations):
        raise InvalidInputError("all formations have arrived; nothing to step")
    if gains is None:
        gains = params.gains()
    indices = range(len(world.formations))
    if pool is None:
        decisions = [_phase_a(world, params, i) for i in indices]
    else:
        decisions = list(pool.map(lambda i: _phase_a(world, params, i), indices))
    _apply(world, params, gains, decisions)
    return world


class _Recorder:
    """Per-step sampling of trajectories and safety metrics."""

    def __init__(self, world: WorldState):
        self.trajectories = {
            f.id: [("leader", array("d"))] + [("follower", array("d"))
                                              for _ in f.followers]
            for f in world.formations}
        self.min_distance = {f.id: array("d") for f in world.formations}
        self.min_separation_by_formation = {f.id: array("d") for f in world.formations}
        self.follower_distance = {f.id: [array("d") for _ in f.followers]
                                  for f in world.formations}
        self.collision_count = 0
        self.min_separation = math.inf
        self.min_obstacle_clearance = math.inf

    def sample(self, world: WorldState) -> None:
        formations = world.formations
        collided = False
        for formation in formations:
            rows = self.trajectories[formation.id]
            lx, ly = formation.leader.pose.x, formation.leader.pose.y
            rows[0][1].extend((lx, ly, formation.leader.pose.theta,
                               formation.leader.cmd.v, formation.leader.cmd.omega))
            distances = self.follower_distance[formation.id]
            for k, (robot, _) in enumerate(formation.followers):
                pose = robot.pose
                rows[k + 1][1].extend((pose.x, pose.y, pose.theta,
                                       robot.cmd.v, robot.cmd.omega))
                distances[k].append(math.hypot(pose.x - lx, pose.y - ly))
        count = len(formations)
        if count > 1:
            closest = [math.inf] * count
            closest_sep = [math.inf] * count
            for i in range(count):
                xi, yi = formations[i].position
                ri = formations[i].radius
                for j in range(i + 1, count):
                    xj, yj = formations[j].position
                    dist = math.hypot(xj - xi, yj - yi)
                    if dist < closest[i]:
                        closest[i] = dist
                    if dist < closest[j]:
                        closest[j] = dist
                    separation = dist - ri - formations[j].radius
                    if separation < closest_sep[i]:
                        closest_sep[i] = separation
                    if separation < closest_sep[j]:
                        closest_sep[j] = separation
                    if separation < self.min_separation:
                        self.min_separation = separation
                    if separation < 0.0:
                        collided = True
            for i in range(count):
                self.min_distance[formations[i].id].append(closest[i])
                self.min_separation_by_formation[formations[i].id].append(closest_sep[i])
        for formation in formations:
            xi, yi = formation.position
            for obstacle in world.obstacles:
                clearance = (math.hypot(obstacle.center[0] - xi, obstacle.center[1] - yi)
                             - formation.radius - obstacle.radius)
                if clearance < self.min_obstacle_clearance:
                    self.min_obstacle_clearance = clearance
                if clearance < 0.0:
                    collided = True
        if collided:
            self.collision_count += 1


def run(config: ScenarioConfig,
        seed: int | None = None,
        max_steps: int | None = None) -> SimReport:
    """Plan and simulate a scenario to completion (or the step budget).

    seed overrides the scenario seed; max_steps overrides params.max_steps.
    The run is deterministic for a given config/seed and independent of
    PTS_SIM_THREADS.
    """
    params = config.params
    run_seed = config.seed if seed is None else seed
    budget = params.max_steps if max_steps is None else max_steps
    if budget <= 0:
        raise InvalidInputError(f"max_steps must be > 0, got {budget}")

    world = WorldState(formations=build_formations(config),
                       obstacles=config.obstacles, rng_seed=run_seed)
    plan_paths(world, config)
    report = SimReport(config=config, seed=run_seed, dt=params.dt)

    arrival: dict[str, float | None] = {f.id: None for f in world.formations}
    for formation in world.formations:
        if math.hypot(formation.dest[0] - formation.position[0],
                      formation.dest[1] - formation.position[1]) <= params.arrival_tol:
            formation.arrived = True
            formation.next_dest_index = len(formation.path)
            arrival[formation.id] = 0.0

    recorder = _Recorder(world)
    gains = params.gains()
    workers = thread_count()
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 0 else None
    try:
        while world.timestep_index < budget:
            if all(f.arrived for f in world.formations):
                break
            recorder.sample(world)
            step(world, params, gains, pool)
            for formation in world.formations:
                if formation.arrived and arrival[formation.id] is None:
                    arrival[formation.id] = world.sim_time
    finally:
        if pool is not None:
            pool.shutdown()

    report.steps = world.timestep_index
    report.completed = all(f.arrived for f in world.formations)
    report.collision_count = recorder.collision_count
    report.min_separation = recorder.min_separation
    report.min_obstacle_clearance = recorder.min_obstacle_clearance
    report.time_to_goal = arrival
    report.trajectories = recorder.trajectories
    report.min_distance_series = recorder.min_distance
    report.min_separation_series = recorder.min_separation_by_formation
    report.follower_distance_series = recorder.follower_distance
    report.world = world
    return report
