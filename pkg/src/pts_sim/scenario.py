"""Scenario configuration, YAML round-trip, and result writers.

A scenario file declares the arena, static obstacles, formations and the
parameter set.  Unknown keys are rejected so typos fail loudly.  Every
numeric default matches the published tuning of the transport system
(speeds in m/s, distances in metres, angles in radians).
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field, fields
from importlib import resources
from typing import IO, TYPE_CHECKING, Any

import yaml

from .core import (FollowerSpec, Formation, GainSet, InvalidInputError,
                   Obstacle, Pose, RobotState, Vec2)
from .planner import Bounds, RrtParams

if TYPE_CHECKING:
    from .engine import SimReport


class ScenarioError(ValueError):
    """Configuration file is malformed or violates an invariant."""


@dataclass(frozen=True)
class SimParams:
    """Run-wide parameters.

    k1..k3 drive the follower law; k4..k6 belong to the same published gain
    set and are carried for completeness.  maxspeed bounds the formation
    (leader) speed; followers may exceed it by follower_speed_factor so
    they can close tracking errors while the leader moves at full speed.
    """

    k1: float = 1.5
    k2: float = 1.0
    k3: float = 0.025
    k4: float = 15.0
    k5: float = 1.0
    k6: float = 1.0
    delta: float = 1.3
    tau: float = 11.0
    tau_obstacle: float = 5.0
    dt: float = 0.0167
    maxspeed: float = 0.03
    neighbour_dist: float = 4.0
    omega_max: float = 1.0
    leader_omega_max: float = 0.15
    follower_speed_factor: float = 5.0
    safety_margin: float = 0.03
    tau_slow: float = 1.0
    arrival_tol: float = 0.005
    waypoint_spacing: float = 1.0
    clearance_margin: float = 0.2
    max_steps: int = 120000
    rrt: RrtParams = field(default_factory=RrtParams)

    def __post_init__(self) -> None:
        positive = ("k1", "k2", "k3", "k4", "k5", "k6", "delta", "tau",
                    "tau_obstacle", "dt", "maxspeed", "neighbour_dist",
                    "omega_max", "leader_omega_max", "tau_slow",
                    "arrival_tol", "waypoint_spacing")
        for name in positive:
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ScenarioError(f"params.{name} must be a positive number, got {value!r}")
        if not (math.isfinite(self.clearance_margin) and self.clearance_margin >= 0):
            raise ScenarioError(f"params.clearance_margin must be >= 0, got {self.clearance_margin!r}")
        if not (math.isfinite(self.safety_margin) and self.safety_margin >= 0):
            raise ScenarioError(f"params.safety_margin must be >= 0, got {self.safety_margin!r}")
        if not (math.isfinite(self.follower_speed_factor) and self.follower_speed_factor >= 1):
            raise ScenarioError(
                f"params.follower_speed_factor must be >= 1, got {self.follower_speed_factor!r}")
        if not (isinstance(self.max_steps, int) and self.max_steps > 0):
            raise ScenarioError(f"params.max_steps must be a positive integer, got {self.max_steps!r}")

    def gains(self) -> GainSet:
        return GainSet(self.k1, self.k2, self.k3, self.k4, self.k5, self.k6)


@dataclass(frozen=True)
class FormationSpec:
    """Declarative description of one formation."""

    id: str
    start: Pose
    dest: Vec2
    radius: float
    followers: tuple[FollowerSpec, ...]
    body_radius: float = 0.1
    d: float = 0.1
    v_max: float | None = None
    neighbour_dist: float | None = None


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    seed: int
    arena: Bounds
    params: SimParams
    obstacles: tuple[Obstacle, ...]
    formations: tuple[FormationSpec, ...]


def _check_keys(mapping: dict, allowed: set[str], context: str) -> None:
    unknown = set(mapping) - allowed
    if unknown:
        raise ScenarioError(f"unknown key(s) in {context}: {sorted(unknown)}")


def _number(mapping: dict, key: str, context: str, default=None) -> float:
    if key not in mapping:
        if default is None:
            raise ScenarioError(f"missing {context}.{key}")
        return default
    value = mapping[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{context}.{key} must be a number, got {value!r}")
    return float(value)


def _parse_arena(raw: Any) -> Bounds:
    if not isinstance(raw, dict):
        raise ScenarioError("arena must be a mapping with xmin/ymin/xmax/ymax")
    _check_keys(raw, {"xmin", "ymin", "xmax", "ymax"}, "arena")
    xmin = _number(raw, "xmin", "arena")
    ymin = _number(raw, "ymin", "arena")
    xmax = _number(raw, "xmax", "arena")
    ymax = _number(raw, "ymax", "arena")
    if not (xmin < xmax and ymin < ymax):
        raise ScenarioError(f"arena is empty: ({xmin}, {ymin}, {xmax}, {ymax})")
    return (xmin, ymin, xmax, ymax)


def _parse_params(raw: Any) -> SimParams:
    if raw is None:
        return SimParams()
    if not isinstance(raw, dict):
        raise ScenarioError("params must be a mapping")
    scalar_names = {f.name for f in fields(SimParams)} - {"rrt"}
    _check_keys(raw, scalar_names | {"rrt"}, "params")
    kwargs: dict[str, Any] = {}
    for name in scalar_names:
        if name in raw:
            value = raw[name]
            if name == "max_steps":
                if isinstance(value, bool) or not isinstance(value, int):
                    raise ScenarioError(f"params.max_steps must be an integer, got {value!r}")
                kwargs[name] = value
            else:
                kwargs[name] = _number(raw, name, "params")
    if "rrt" in raw:
        rrt_raw = raw["rrt"]
        if not isinstance(rrt_raw, dict):
            raise ScenarioError("params.rrt must be a mapping")
        rrt_names = {"max_iters", "step_eta", "goal_bias", "rewire_gamma"}
        _check_keys(rrt_raw, rrt_names, "params.rrt")
        rrt_kwargs: dict[str, Any] = {}
        if "max_iters" in rrt_raw:
            value = rrt_raw["max_iters"]
            if isinstance(value, bool) or not isinstance(value, int):
                raise ScenarioError(f"params.rrt.max_iters must be an integer, got {value!r}")
            rrt_kwargs["max_iters"] = value
        for name in ("step_eta", "goal_bias", "rewire_gamma"):
            if name in rrt_raw:
                rrt_kwargs[name] = _number(rrt_raw, name, "params.rrt")
        try:
            kwargs["rrt"] = RrtParams(**rrt_kwargs)
        except InvalidInputError as exc:
            raise ScenarioError(f"params.rrt: {exc}") from exc
    return SimParams(**kwargs)


def _parse_obstacles(raw: Any) -> tuple[Obstacle, ...]:
    if raw is None:
        return ()
    if not isinstance(raw, list):
        raise ScenarioError("obstacles must be a list")
    out = []
    for i, entry in enumerate(raw):
        context = f"obstacles[{i}]"
        if not isinstance(entry, dict):
            raise ScenarioError(f"{context} must be a mapping")
        _check_keys(entry, {"x", "y", "radius"}, context)
        try:
            out.append(Obstacle((_number(entry, "x", context), _number(entry, "y", context)),
                                _number(entry, "radius", context)))
        except InvalidInputError as exc:
            raise ScenarioError(f"{context}: {exc}") from exc
    return tuple(out)


def ring_followers(count: int, rho: float) -> tuple[FollowerSpec, ...]:
    """Evenly spaced slots around the leader, leaving the dead-ahead slot
    empty: psi_k = 2*pi*(k+1)/(count+1)."""
    if count < 1:
        raise ScenarioError(f"ring count must be >= 1, got {count}")
    return tuple(FollowerSpec(rho, math.tau * (k + 1) / (count + 1))
                 for k in range(count))


def _parse_followers(entry: dict, context: str) -> tuple[FollowerSpec, ...]:
    has_list = "followers" in entry
    has_ring = "ring" in entry
    if has_list == has_ring:
        raise ScenarioError(f"{context} needs exactly one of 'followers' or 'ring'")
    try:
        if has_ring:
            ring = entry["ring"]
            if not isinstance(ring, dict):
                raise ScenarioError(f"{context}.ring must be a mapping")
            _check_keys(ring, {"count", "rho"}, f"{context}.ring")
            count = ring.get("count")
            if isinstance(count, bool) or not isinstance(count, int):
                raise ScenarioError(f"{context}.ring.count must be an integer, got {count!r}")
            return ring_followers(count, _number(ring, "rho", f"{context}.ring"))
        raw = entry["followers"]
        if not isinstance(raw, list) or not raw:
            raise ScenarioError(f"{context}.followers must be a non-empty list")
        out = []
        for i, item in enumerate(raw):
            sub = f"{context}.followers[{i}]"
            if not isinstance(item, dict):
                raise ScenarioError(f"{sub} must be a mapping")
            _check_keys(item, {"rho", "psi"}, sub)
            out.append(FollowerSpec(_number(item, "rho", sub), _number(item, "psi", sub)))
        return tuple(out)
    except InvalidInputError as exc:
        raise ScenarioError(f"{context}: {exc}") from exc


def _parse_formation(entry: Any, index: int, arena: Bounds, params: SimParams) -> FormationSpec:
    context = f"formations[{index}]"
    if not isinstance(entry, dict):
        raise ScenarioError(f"{context} must be a mapping")
    allowed = {"id", "start", "dest", "radius", "followers", "ring",
               "body_radius", "d", "v_max", "neighbour_dist"}
    _check_keys(entry, allowed, context)
    fid = entry.get("id")
    if not isinstance(fid, str) or not fid:
        raise ScenarioError(f"{context}.id must be a non-empty string")
    start_raw = entry.get("start")
    if not isinstance(start_raw, dict):
        raise ScenarioError(f"{context}.start must be a mapping with x/y/theta")
    _check_keys(start_raw, {"x", "y", "theta"}, f"{context}.start")
    dest_raw = entry.get("dest")
    if not isinstance(dest_raw, dict):
        raise ScenarioError(f"{context}.dest must be a mapping with x/y")
    _check_keys(dest_raw, {"x", "y"}, f"{context}.dest")
    try:
        start = Pose(_number(start_raw, "x", f"{context}.start"),
                     _number(start_raw, "y", f"{context}.start"),
                     _number(start_raw, "theta", f"{context}.start", default=0.0))
    except InvalidInputError as exc:
        raise ScenarioError(f"{context}.start: {exc}") from exc
    dest = (_number(dest_raw, "x", f"{context}.dest"),
            _number(dest_raw, "y", f"{context}.dest"))
    followers = _parse_followers(entry, context)
    radius = _number(entry, "radius", context)
    body_radius = _number(entry, "body_radius", context, default=0.1)
    d = _number(entry, "d", context, default=0.1)
    v_max = _number(entry, "v_max", context) if "v_max" in entry else None
    neighbour_dist = (_number(entry, "neighbour_dist", context)
                      if "neighbour_dist" in entry else None)

    required = max([body_radius] + [s.rho_d + body_radius for s in followers])
    if radius < required - 1e-12:
        raise ScenarioError(
            f"{context}.radius {radius} does not cover the followers (needs >= {required})")
    xmin, ymin, xmax, ymax = arena
    for label, (x, y) in (("start", (start.x, start.y)), ("dest", dest)):
        if not (xmin <= x <= xmax and ymin <= y <= ymax):
            raise ScenarioError(f"{context}.{label} ({x}, {y}) lies outside the arena")
    if (v_max is not None and v_max <= 0) or (neighbour_dist is not None and neighbour_dist <= 0):
        raise ScenarioError(f"{context}: v_max and neighbour_dist must be positive when given")
    return FormationSpec(id=fid, start=start, dest=dest, radius=radius,
                         followers=followers, body_radius=body_radius, d=d,
                         v_max=v_max, neighbour_dist=neighbour_dist)


def parse_scenario(text: str) -> ScenarioConfig:
    """Parse scenario YAML text into a validated config."""
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"invalid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ScenarioError("scenario must be a YAML mapping")
    _check_keys(raw, {"name", "seed", "arena", "params", "obstacles", "formations"},
                "scenario")
    name = raw.get("name", "scenario")
    if not isinstance(name, str):
        raise ScenarioError(f"name must be a string, got {name!r}")
    seed = raw.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ScenarioError(f"seed must be a non-negative integer, got {seed!r}")
    if "arena" not in raw:
        raise ScenarioError("missing arena")
    arena = _parse_arena(raw["arena"])
    try:
        params = _parse_params(raw.get("params"))
    except InvalidInputError as exc:
        raise ScenarioError(f"params: {exc}") from exc
    obstacles = _parse_obstacles(raw.get("obstacles"))
    formations_raw = raw.get("formations")
    if not isinstance(formations_raw, list) or not formations_raw:
        raise ScenarioError("formations must be a non-empty list")
    formations = tuple(_parse_formation(entry, i, arena, params)
                       for i, entry in enumerate(formations_raw))
    ids = [f.id for f in formations]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise ScenarioError(f"duplicate formation id(s): {dupes}")
    return ScenarioConfig(name=name, seed=seed, arena=arena, params=params,
                          obstacles=obstacles, formations=formations)


def packaged_scenarios() -> tuple[str, ...]:
    """Names of the scenario files shipped inside the package."""
    folder = resources.files("pts_sim") / "scenarios"
    return tuple(sorted(entry.name[:-5] for entry in folder.iterdir()
                        if entry.name.endswith(".yaml")))


def load_scenario(path: str | os.PathLike) -> ScenarioConfig:
    """Load and validate a scenario YAML file.

    `path` is either a filesystem path or the bare name of a packaged
    scenario (filesystem wins if both exist).
    """
    name = os.fspath(path)
    if not os.path.exists(name) and os.sep not in name and "." not in name:
        packaged = resources.files("pts_sim") / "scenarios" / f"{name}.yaml"
        if packaged.is_file():
            return parse_scenario(packaged.read_text(encoding="utf-8"))
        raise ScenarioError(
            f"no scenario file or packaged scenario named {name!r} "
            f"(packaged: {', '.join(packaged_scenarios())})")
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file {path}: {exc}") from exc
    return parse_scenario(text)


def dump_scenario(config: ScenarioConfig) -> str:
    """Serialize a config back to YAML.  parse_scenario(dump_scenario(c))
    equals c exactly (followers are written explicitly, full precision)."""
    params = config.params
    doc: dict[str, Any] = {
        "name": config.name,
        "seed": config.seed,
        "arena": {"xmin": config.arena[0], "ymin": config.arena[1],
                  "xmax": config.arena[2], "ymax": config.arena[3]},
        "params": {f.name: getattr(params, f.name)
                   for f in fields(SimParams) if f.name != "rrt"},
    }
    doc["params"]["rrt"] = {"max_iters": params.rrt.max_iters,
                            "step_eta": params.rrt.step_eta,
                            "goal_bias": params.rrt.goal_bias,
                            "rewire_gamma": params.rrt.rewire_gamma}
    if config.obstacles:
        doc["obstacles"] = [{"x": o.center[0], "y": o.center[1], "radius": o.radius}
                            for o in config.obstacles]
    doc["formations"] = []
    for spec in config.formations:
        entry: dict[str, Any] = {
            "id": spec.id,
            "start": {"x": spec.start.x, "y": spec.start.y, "theta": spec.start.theta},
            "dest": {"x": spec.dest[0], "y": spec.dest[1]},
            "radius": spec.radius,
            "body_radius": spec.body_radius,
            "d": spec.d,
            "followers": [{"rho": s.rho_d, "psi": s.psi_d} for s in spec.followers],
        }
        if spec.v_max is not None:
            entry["v_max"] = spec.v_max
        if spec.neighbour_dist is not None:
            entry["neighbour_dist"] = spec.neighbour_dist
        doc["formations"].append(entry)
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=False)


def build_formations(config: ScenarioConfig) -> list[Formation]:
    """Instantiate mutable formations, followers placed on their slots."""
    from .formation_control import desired_follower_pose

    out = []
    for spec in config.formations:
        leader = RobotState(pose=spec.start, body_radius=spec.body_radius, d=spec.d)
        followers = []
        for fs in spec.followers:
            pose = desired_follower_pose(spec.start, fs)
            followers.append((RobotState(pose=pose, body_radius=spec.body_radius,
                                         d=spec.d), fs))
        out.append(Formation(
            id=spec.id, leader=leader, followers=followers, radius=spec.radius,
            src=(spec.start.x, spec.start.y), dest=spec.dest,
            v_max=spec.v_max if spec.v_max is not None else config.params.maxspeed,
            neighbour_dist=(spec.neighbour_dist if spec.neighbour_dist is not None
                            else config.params.neighbour_dist)))
    return out


TRAJECTORY_HEADER = ["step", "time", "formation_id", "robot_id", "role",
                     "x", "y", "theta", "v", "omega"]


def write_trajectories(report: "SimReport", destination: str | os.PathLike | IO[str]) -> None:
    """Write the per-robot trajectory table as CSV.

    One row per robot per recorded step, sorted by (step, formation_id,
    robot_id); floats at full precision (shortest round-trip repr).
    """
    own = not hasattr(destination, "write")
    handle = open(destination, "w", encoding="utf-8", newline="") if own else destination
    try:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(TRAJECTORY_HEADER)
        dt = report.dt
        ordered = sorted(report.trajectories.items())
        for step in range(report.steps):
            time = step * dt
            base = 5 * step
            for fid, robots in ordered:
                for robot_id, (role, samples) in enumerate(robots):
                    writer.writerow((step, repr(time), fid, robot_id, role,
                                     repr(samples[base]), repr(samples[base + 1]),
                                     repr(samples[base + 2]), repr(samples[base + 3]),
                                     repr(samples[base + 4])))
    finally:
        if own:
            handle.close()


def write_metrics(report: "SimReport", destination: str | os.PathLike | IO[str]) -> None:
    """Write the run metrics JSON document.

    Self-sufficient for downstream plotting: scenario geometry, per
    formation summary (including time_to_goal), collision counters and the
    per-step distance series.
    """
    config = report.config
    doc: dict[str, Any] = {
        "scenario": config.name,
        "seed": report.seed,
        "dt": report.dt,
        "sample_interval": report.dt,
        "steps": report.steps,
        "completed": report.completed,
        "collision_count": report.collision_count,
        "min_separation": _json_float(report.min_separation),
        "min_obstacle_clearance": _json_float(report.min_obstacle_clearance),
        "maxspeed": config.params.maxspeed,
        "arena": {"xmin": config.arena[0], "ymin": config.arena[1],
                  "xmax": config.arena[2], "ymax": config.arena[3]},
        "obstacles": [{"x": o.center[0], "y": o.center[1], "radius": o.radius}
                      for o in config.obstacles],
        "formations": [{
            "id": s.id,
            "radius": s.radius,
            "robots": 1 + len(s.followers),
            "rho": [f.rho_d for f in s.followers],
            "src": [s.start.x, s.start.y],
            "dest": list(s.dest),
            "time_to_goal": report.time_to_goal.get(s.id),
        } for s in config.formations],
    }
    if len(config.formations) > 1:
        doc["min_pairwise_distance"] = {fid: list(series)
                                        for fid, series in report.min_distance_series.items()}
        doc["min_pairwise_separation"] = {fid: list(series)
                                          for fid, series in report.min_separation_series.items()}
    doc["follower_distance"] = {fid: [list(s) for s in series]
                                for fid, series in report.follower_distance_series.items()}
    own = not hasattr(destination, "write")
    handle = open(destination, "w", encoding="utf-8") if own else destination
    try:
        json.dump(doc, handle, indent=None, separators=(",", ":"))
        handle.write("\n")
    finally:
        if own:
            handle.close()


def _json_float(value: float):
    if value == math.inf:
        return None
    return value
