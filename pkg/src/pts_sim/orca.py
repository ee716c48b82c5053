"""Formation-level reciprocal collision avoidance.

Formations are abstracted as discs centred on their leaders.  Each step a
leader builds one feasible half-plane per neighbour (reciprocal, half
responsibility) and per static obstacle (full responsibility), solves a
small 2D linear program for the holonomic velocity closest to its preferred
velocity, and maps the result onto the unicycle.

Conventions:
  * A velocity obstacle VO^tau is induced by relative position p_rel and
    combined radius r_sum: the set of relative velocities v with
    t*v inside the open disc D(p_rel, r_sum) for some t in (0, tau].
  * Half-planes are feasible sets {v | (v - point) . normal >= 0} with the
    normal pointing away from the velocity obstacle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .core import (Formation, HalfPlane, InvalidInputError, Obstacle,
                   PlanarVelocity, Pose, Vec2, VelocityCmd, _require_finite,
                   angle_normalize)

# Gain mapping heading error to angular rate in to_nonholonomic.
HEADING_GAIN = 2.0

# Horizon used to resolve already-overlapping discs (one control period).
DEFAULT_COLLISION_HORIZON = 0.0167

# Half-planes are tightened inward by this fraction of v_max so LP results
# clear every constraint with strictly positive slack despite rounding.
_FEASIBLE_SHIFT = 1e-9

# Denominator threshold for treating two constraint normals as parallel.
_PARALLEL_EPS = 1e-12


@dataclass(frozen=True)
class VelocityObstacle:
    """Truncated-cone velocity obstacle in relative velocity space."""

    p_rel: Vec2
    r_sum: float
    tau: float

    def __post_init__(self) -> None:
        _require_finite("velocity obstacle", self.p_rel[0], self.p_rel[1],
                        self.r_sum, self.tau)
        if self.r_sum <= 0.0:
            raise InvalidInputError(f"r_sum must be > 0, got {self.r_sum}")
        if self.tau <= 0.0:
            raise InvalidInputError(f"tau must be > 0, got {self.tau}")


@dataclass(frozen=True)
class OrcaResult:
    """Outcome of one leader avoidance solve."""

    cmd: VelocityCmd
    v_star: PlanarVelocity
    v_pref: PlanarVelocity
    next_dest_index: int
    halfplane_count: int
    feasible: bool


def vo_contains(vo: VelocityObstacle, v_rel: PlanarVelocity) -> bool:
    """True if the relative velocity collides within the horizon.

    Membership means some t in (0, tau] puts t*v_rel strictly inside the
    open disc around p_rel.  Evaluated in closed form: the minimum of
    ||t*v - p|| over t in [0, tau] is attained at t = 0, t = tau, or the
    unconstrained minimiser (v.p)/||v||^2; strict inequality at the
    minimum is equivalent to membership on the open interval by continuity.
    """
    px, py = vo.p_rel
    vx, vy = v_rel.vx, v_rel.vy
    r_sq = vo.r_sum * vo.r_sum
    best = px * px + py * py  # t = 0
    v_sq = vx * vx + vy * vy
    if v_sq > 0.0:
        t = (vx * px + vy * py) / v_sq
        if t < 0.0:
            t = 0.0
        elif t > vo.tau:
            t = vo.tau
        for t_eval in (t, vo.tau):
            dx = t_eval * vx - px
            dy = t_eval * vy - py
            dist_sq = dx * dx + dy * dy
            if dist_sq < best:
                best = dist_sq
    return best < r_sq


def compute_u(vo: VelocityObstacle,
              v_opt_rel: PlanarVelocity,
              collision_horizon: float = DEFAULT_COLLISION_HORIZON) -> tuple[Vec2, Vec2]:
    """Smallest change u taking v_opt_rel to the VO boundary, with the
    outward unit normal n at that boundary point.

    For v inside the obstacle u points outward (along n); for v outside it
    points back toward the boundary (along -n).  Already-overlapping discs
    (||p_rel|| <= r_sum) fall back to a one-period disc of radius
    r_sum / collision_horizon around p_rel / collision_horizon.
    """
    px, py = vo.p_rel
    vx, vy = v_opt_rel.vx, v_opt_rel.vy
    r = vo.r_sum
    dist_sq = px * px + py * py
    r_sq = r * r

    if dist_sq > r_sq:
        inv_tau = 1.0 / vo.tau
        wx = vx - px * inv_tau
        wy = vy - py * inv_tau
        w_sq = wx * wx + wy * wy
        dot = wx * px + wy * py
        if dot < 0.0 and dot * dot > r_sq * w_sq:
            # Closest boundary feature is the truncation arc.
            w_len = math.sqrt(w_sq)
            nx = wx / w_len
            ny = wy / w_len
            scale = r * inv_tau - w_len
            return ((scale * nx, scale * ny), (nx, ny))
        # Closest feature is one of the legs; pick the side v lies on.
        leg = math.sqrt(dist_sq - r_sq)
        if px * wy - py * wx > 0.0:
            dx = (px * leg - py * r) / dist_sq
            dy = (px * r + py * leg) / dist_sq
        else:
            dx = -(px * leg + py * r) / dist_sq
            dy = -(-px * r + py * leg) / dist_sq
        dot_d = vx * dx + vy * dy
        ux = dot_d * dx - vx
        uy = dot_d * dy - vy
        return ((ux, uy), (-dy, dx))

    # Discs already overlap: push the relative velocity out of the disc
    # reachable within one collision horizon.
    if collision_horizon <= 0.0 or not math.isfinite(collision_horizon):
        raise InvalidInputError(
            f"collision_horizon must be > 0, got {collision_horizon!r}")
    inv_h = 1.0 / collision_horizon
    wx = vx - px * inv_h
    wy = vy - py * inv_h
    w_len = math.hypot(wx, wy)
    if w_len < 1e-15:
        # Matched velocities at overlap: separate along the centre line.
        dist = math.sqrt(dist_sq)
        if dist > 1e-15:
            nx, ny = -px / dist, -py / dist
        else:
            nx, ny = 1.0, 0.0
        scale = r * inv_h
        return ((scale * nx, scale * ny), (nx, ny))
    nx = wx / w_len
    ny = wy / w_len
    scale = r * inv_h - w_len
    return ((scale * nx, scale * ny), (nx, ny))


def orca_halfplane(p_i: Vec2, v_i: PlanarVelocity, r_i: float,
                   p_j: Vec2, v_j: PlanarVelocity, r_j: float,
                   tau: float,
                   responsibility: float = 0.5,
                   collision_horizon: float = DEFAULT_COLLISION_HORIZON) -> HalfPlane:
    """Reciprocal avoidance half-plane induced on agent i by agent j.

    Agent i takes `responsibility` of the correction u (0.5 for reciprocal
    pairs, 1.0 against non-cooperating discs).
    """
    vo = VelocityObstacle((p_j[0] - p_i[0], p_j[1] - p_i[1]), r_i + r_j, tau)
    v_rel = PlanarVelocity(v_i.vx - v_j.vx, v_i.vy - v_j.vy)
    (ux, uy), n = compute_u(vo, v_rel, collision_horizon)
    point = PlanarVelocity(v_i.vx + responsibility * ux,
                           v_i.vy + responsibility * uy)
    return HalfPlane(point, n)


def obstacle_halfplane(p_i: Vec2, v_i: PlanarVelocity, r_i: float,
                       obstacle: Obstacle,
                       tau_obstacle: float,
                       collision_horizon: float = DEFAULT_COLLISION_HORIZON) -> HalfPlane:
    """Avoidance half-plane against a static disc; the agent takes the full
    correction since the obstacle will not move."""
    return orca_halfplane(p_i, v_i, r_i,
                          obstacle.center, PlanarVelocity(0.0, 0.0), obstacle.radius,
                          tau_obstacle, responsibility=1.0,
                          collision_horizon=collision_horizon)


def _solve_on_line(lines: list[tuple[float, float, float, float]],
                   k: int,
                   v_max: float,
                   opt_x: float, opt_y: float) -> Vec2 | None:
    """Optimum on the boundary line of constraint k subject to constraints
    0..k-1 and the speed disc; None when that segment is empty."""
    qx, qy, nx, ny = lines[k]
    dx, dy = ny, -nx  # direction along the boundary line
    # Intersect the line with the speed disc.
    qd = qx * dx + qy * dy
    disc = qd * qd - (qx * qx + qy * qy) + v_max * v_max
    if disc < 0.0:
        return None
    root = math.sqrt(disc)
    t_lo = -qd - root
    t_hi = -qd + root
    for j in range(k):
        jx, jy, mx, my = lines[j]
        denom = dx * mx + dy * my
        num = (jx - qx) * mx + (jy - qy) * my
        if abs(denom) <= _PARALLEL_EPS:
            if num > 0.0:
                return None  # line k lies entirely outside constraint j
            continue
        bound = num / denom
        if denom > 0.0:
            if bound > t_lo:
                t_lo = bound
        else:
            if bound < t_hi:
                t_hi = bound
        if t_lo > t_hi:
            return None
    t = (opt_x - qx) * dx + (opt_y - qy) * dy
    if t < t_lo:
        t = t_lo
    elif t > t_hi:
        t = t_hi
    return (qx + t * dx, qy + t * dy)


def _solve_lines(lines: list[tuple[float, float, float, float]],
                 v_pref_x: float, v_pref_y: float,
                 v_max: float) -> Vec2 | None:
    """Incremental 2D LP: the point of the constraint intersection (within
    the speed disc) closest to the preferred velocity, or None if empty."""
    speed = math.hypot(v_pref_x, v_pref_y)
    if speed > v_max:
        scale = v_max / speed
        rx, ry = v_pref_x * scale, v_pref_y * scale
    else:
        rx, ry = v_pref_x, v_pref_y
    for k, (qx, qy, nx, ny) in enumerate(lines):
        if (rx - qx) * nx + (ry - qy) * ny >= 0.0:
            continue
        solved = _solve_on_line(lines, k, v_max, v_pref_x, v_pref_y)
        if solved is None:
            return None
        rx, ry = solved
    return (rx, ry)


def solve_velocity_lp(halfplanes: Sequence[HalfPlane],
                      v_pref: PlanarVelocity,
                      v_max: float) -> PlanarVelocity:
    """Velocity inside every half-plane and the speed disc, closest to
    v_pref.

    Constraints are processed incrementally in the given order, so the
    result is deterministic.  When the intersection is empty the solver
    falls back to minimising the largest half-plane violation within the
    speed disc (bisection on a uniform relaxation of all constraints),
    breaking ties toward v_pref.
    """
    _require_finite("v_max", v_max)
    if v_max <= 0.0:
        raise InvalidInputError(f"v_max must be > 0, got {v_max}")
    px, py = v_pref.vx, v_pref.vy

    # Work on slightly tightened constraints so the result clears the
    # originals with positive slack even after rounding.
    shift = _FEASIBLE_SHIFT * v_max
    lines = [(h.point.vx + shift * h.normal[0],
              h.point.vy + shift * h.normal[1],
              h.normal[0], h.normal[1]) for h in halfplanes]

    solved = _solve_lines(lines, px, py, v_max)
    if solved is not None:
        return PlanarVelocity(solved[0], solved[1])

    # Infeasible: minimise the maximum violation of the original
    # constraints.  Relaxing every half-plane outward by s >= 0 becomes
    # feasible exactly when s reaches the minimax violation, so bisect on s.
    original = [(h.point.vx, h.point.vy, h.normal[0], h.normal[1])
                for h in halfplanes]
    hi = 0.0
    for qx, qy, nx, ny in original:
        violation = qx * nx + qy * ny  # violation at the origin
        if violation > hi:
            hi = violation
    hi *= 1.0 + 1e-12
    lo = 0.0
    best: Vec2 | None = None
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        relaxed = [(qx - mid * nx, qy - mid * ny, nx, ny)
                   for qx, qy, nx, ny in original]
        candidate = _solve_lines(relaxed, px, py, v_max)
        if candidate is None:
            lo = mid
        else:
            hi = mid
            best = candidate
    if best is None:
        # hi was feasible by construction; solve there explicitly.
        relaxed = [(qx - hi * nx, qy - hi * ny, nx, ny)
                   for qx, qy, nx, ny in original]
        best = _solve_lines(relaxed, px, py, v_max)
        if best is None:
            raise InvalidInputError("velocity program has no bounded relaxation")
    return PlanarVelocity(best[0], best[1])


def formation_neighbours(formations: Sequence[Formation],
                         index: int,
                         neighbour_dist: float | None = None) -> list[Formation]:
    """Formations whose leaders are within neighbour_dist of formation
    `index` (excluding itself).  Arrived formations count: parked discs
    still have to be avoided."""
    me = formations[index]
    if neighbour_dist is None:
        neighbour_dist = me.neighbour_dist
    mx, my = me.position
    out = []
    for i, other in enumerate(formations):
        if i == index:
            continue
        ox, oy = other.position
        if math.hypot(ox - mx, oy - my) <= neighbour_dist:
            out.append(other)
    return out


def to_nonholonomic(v_star: PlanarVelocity, pose: Pose,
                    v_max: float, omega_max: float) -> VelocityCmd:
    """Map a holonomic velocity onto the unicycle.

    Angular rate steers toward the velocity heading (proportional, gain
    HEADING_GAIN, clamped); forward speed is the velocity magnitude scaled
    by cos of the heading error, floored at zero so the robot never
    reverses through a large error.
    """
    speed = v_star.norm()
    if speed == 0.0:
        return VelocityCmd(0.0, 0.0)
    phi = angle_normalize(math.atan2(v_star.vy, v_star.vx) - pose.theta)
    omega = HEADING_GAIN * phi
    if omega > omega_max:
        omega = omega_max
    elif omega < -omega_max:
        omega = -omega_max
    v = speed * math.cos(phi)
    if v < 0.0:
        v = 0.0
    elif v > v_max:
        v = v_max
    return VelocityCmd(v, omega)


def preferred_velocity(position: Vec2, target: Vec2, final: bool,
                        v_max: float, tau_slow: float) -> PlanarVelocity:
    """Full-speed velocity toward the target; on the final leg the speed
    ramps down as distance / tau_slow so the leader settles on the goal."""
    dx = target[0] - position[0]
    dy = target[1] - position[1]
    dist = math.hypot(dx, dy)
    if dist <= 0.0:
        return PlanarVelocity(0.0, 0.0)
    speed = v_max
    if final:
        speed = min(v_max, dist / tau_slow)
    return PlanarVelocity(speed * dx / dist, speed * dy / dist)


def leader_velocity(formation: Formation,
                    neighbours: Sequence[Formation],
                    obstacles: Sequence[Obstacle],
                    params) -> OrcaResult:
    """One avoidance cycle for a leader.

    Builds the reciprocal half-plane for every neighbour (arrived
    neighbours are static, so the formation takes full responsibility for
    them, like obstacles), an obstacle half-plane for every static disc
    within neighbour_dist, solves the velocity program, and converts the
    result to a unicycle command.  Also runs the waypoint check: when the
    leader is within params.delta of the current waypoint the index
    advances (the engine owns writing the returned state back).

    The formation radius is padded by params.safety_margin inside the
    velocity obstacles only: the unicycle tracks the holonomic solution
    with a bounded lag, and the pad absorbs that tracking error so the
    unpadded discs never touch.

    `params` needs attributes tau, tau_obstacle, dt, delta, tau_slow,
    leader_omega_max and safety_margin.
    """
    pos = formation.position
    v_i = formation.velocity
    r_i = formation.radius + params.safety_margin

    last_leg = formation.next_dest_index >= len(formation.path) - 1
    v_pref = preferred_velocity(pos, formation.next_dest, last_leg,
                                 formation.v_max, params.tau_slow)

    planes: list[HalfPlane] = []
    for other in neighbours:
        if other.arrived:
            planes.append(orca_halfplane(pos, v_i, r_i,
                                         other.position, PlanarVelocity(0.0, 0.0),
                                         other.radius,
                                         params.tau_obstacle, responsibility=1.0,
                                         collision_horizon=params.dt))
        else:
            planes.append(orca_halfplane(pos, v_i, r_i,
                                         other.position, other.velocity,
                                         other.radius,
                                         params.tau, responsibility=0.5,
                                         collision_horizon=params.dt))
    for obstacle in obstacles:
        gap = math.hypot(obstacle.center[0] - pos[0], obstacle.center[1] - pos[1])
        if gap <= formation.neighbour_dist + obstacle.radius:
            planes.append(obstacle_halfplane(pos, v_i, r_i, obstacle,
                                             params.tau_obstacle,
                                             collision_horizon=params.dt))

    v_star = solve_velocity_lp(planes, v_pref, formation.v_max)
    feasible = all(plane.contains(v_star, slack=1e-9 * formation.v_max)
                   for plane in planes)
    cmd = to_nonholonomic(v_star, formation.leader.pose,
                          formation.v_max, params.leader_omega_max)

    next_index = formation.next_dest_index
    target = formation.next_dest
    if (next_index < len(formation.path) - 1
            and math.hypot(target[0] - pos[0], target[1] - pos[1]) <= params.delta):
        next_index += 1

    return OrcaResult(cmd=cmd, v_star=v_star, v_pref=v_pref,
                      next_dest_index=next_index,
                      halfplane_count=len(planes), feasible=feasible)
