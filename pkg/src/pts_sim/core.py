"""Shared domain types for the formation traffic simulator.

Everything downstream (control, avoidance, planning, engine) builds on the
types in this module.  Angles are always stored wrapped to (-pi, pi].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

Vec2 = tuple[float, float]


class InvalidInputError(ValueError):
    """Raised when an operation receives non-finite or out-of-range inputs."""


class SingularConfigurationError(ValueError):
    """Raised when a control law is evaluated at a singular geometry."""


def _require_finite(label: str, *values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise InvalidInputError(f"{label} must be finite, got {v!r}")


def angle_normalize(theta: float) -> float:
    """Wrap an angle to the half-open interval (-pi, pi].

    Exact for inputs already in range, and idempotent:
    angle_normalize(angle_normalize(x)) == angle_normalize(x) bit-for-bit.
    """
    if not math.isfinite(theta):
        raise InvalidInputError(f"angle must be finite, got {theta!r}")
    # IEEE remainder lands in [-pi, pi]; fold the open endpoint onto +pi.
    r = math.remainder(theta, math.tau)
    return math.pi if r <= -math.pi else r


@dataclass(frozen=True)
class Pose:
    """Planar position plus heading.  theta is wrapped on construction."""

    x: float
    y: float
    theta: float

    def __post_init__(self) -> None:
        _require_finite("pose", self.x, self.y, self.theta)
        object.__setattr__(self, "theta", angle_normalize(self.theta))

    @property
    def position(self) -> Vec2:
        return (self.x, self.y)


@dataclass(frozen=True)
class VelocityCmd:
    """Unicycle command: forward speed v and angular rate omega."""

    v: float
    omega: float

    def __post_init__(self) -> None:
        _require_finite("velocity command", self.v, self.omega)


STOP_CMD = VelocityCmd(0.0, 0.0)


@dataclass(frozen=True)
class PlanarVelocity:
    """A holonomic velocity (or any other 2-vector in velocity space)."""

    vx: float
    vy: float

    def __post_init__(self) -> None:
        _require_finite("planar velocity", self.vx, self.vy)

    def norm(self) -> float:
        return math.hypot(self.vx, self.vy)

    def as_tuple(self) -> Vec2:
        return (self.vx, self.vy)


ZERO_VELOCITY = PlanarVelocity(0.0, 0.0)


@dataclass(frozen=True)
class FollowerSpec:
    """Rigid slot a follower keeps relative to its leader.

    rho_d is the desired separation in metres, psi_d the desired bearing in
    the leader body frame (0 means dead ahead, pi dead behind).
    """

    rho_d: float
    psi_d: float

    def __post_init__(self) -> None:
        _require_finite("follower spec", self.rho_d, self.psi_d)
        if self.rho_d <= 0.0:
            raise InvalidInputError(f"rho_d must be > 0, got {self.rho_d}")


@dataclass(frozen=True)
class GainSet:
    """Controller gains.  k1..k3 drive the follower law; k4..k6 are part of
    the published tuning set and are carried in configs for completeness."""

    k1: float
    k2: float
    k3: float
    k4: float = 15.0
    k5: float = 1.0
    k6: float = 1.0

    def __post_init__(self) -> None:
        for name in ("k1", "k2", "k3", "k4", "k5", "k6"):
            value = getattr(self, name)
            _require_finite("gain", value)
            if value <= 0.0:
                raise InvalidInputError(f"{name} must be > 0, got {value}")


@dataclass
class RobotState:
    """Mutable state of a single differential-drive robot.

    d is the offset from the wheel axle to the controlled off-axis point;
    it appears in a denominator of the follower law so it must be positive.
    """

    pose: Pose
    cmd: VelocityCmd = STOP_CMD
    body_radius: float = 0.1
    d: float = 0.1

    def __post_init__(self) -> None:
        _require_finite("robot geometry", self.body_radius, self.d)
        if self.body_radius <= 0.0:
            raise InvalidInputError(f"body_radius must be > 0, got {self.body_radius}")
        if self.d <= 0.0:
            raise InvalidInputError(f"d must be > 0, got {self.d}")


@dataclass(frozen=True)
class Obstacle:
    """Static disc obstacle."""

    center: Vec2
    radius: float

    def __post_init__(self) -> None:
        _require_finite("obstacle", self.center[0], self.center[1], self.radius)
        if self.radius <= 0.0:
            raise InvalidInputError(f"obstacle radius must be > 0, got {self.radius}")


@dataclass(frozen=True)
class HalfPlane:
    """Feasible half-plane in velocity space: {v | (v - point) . normal >= 0}.

    normal must be unit length (checked to 1e-9); point is any point on the
    boundary line.
    """

    point: PlanarVelocity
    normal: Vec2

    def __post_init__(self) -> None:
        nx, ny = self.normal
        _require_finite("half-plane normal", nx, ny)
        if abs(math.hypot(nx, ny) - 1.0) > 1e-9:
            raise InvalidInputError(f"half-plane normal must be unit length, got {self.normal}")

    def contains(self, v: PlanarVelocity, slack: float = 0.0) -> bool:
        """True if v lies on the feasible side, allowing `slack` of violation."""
        return ((v.vx - self.point.vx) * self.normal[0]
                + (v.vy - self.point.vy) * self.normal[1]) >= -slack


@dataclass
class Formation:
    """A payload transport system: one leader plus rigidly-slotted followers.

    The formation is abstracted as a disc of the given radius centred on the
    leader for inter-formation avoidance.  radius must cover the leader body
    and every follower slot (rho_d + follower body radius).
    """

    id: str
    leader: RobotState
    followers: list[tuple[RobotState, FollowerSpec]]
    radius: float
    src: Vec2
    dest: Vec2
    path: list[Vec2] = field(default_factory=list)
    next_dest_index: int = 0
    v_pref: PlanarVelocity = ZERO_VELOCITY
    velocity: PlanarVelocity = ZERO_VELOCITY
    v_max: float = 0.03
    neighbour_dist: float = 4.0
    arrived: bool = False

    def __post_init__(self) -> None:
        _require_finite("formation", self.radius, self.v_max, self.neighbour_dist,
                        self.src[0], self.src[1], self.dest[0], self.dest[1])
        if self.v_max <= 0.0:
            raise InvalidInputError(f"v_max must be > 0, got {self.v_max}")
        if self.neighbour_dist <= 0.0:
            raise InvalidInputError(f"neighbour_dist must be > 0, got {self.neighbour_dist}")
        self.check_radius()

    def check_radius(self) -> None:
        """Re-validate the bounding-disc invariant (call after editing slots)."""
        required = self.leader.body_radius
        for robot, spec in self.followers:
            required = max(required, spec.rho_d + robot.body_radius)
        if self.radius < required - 1e-12:
            raise InvalidInputError(
                f"formation {self.id!r} radius {self.radius} does not cover robots "
                f"(needs >= {required})")

    @property
    def position(self) -> Vec2:
        """Formation reference point: the leader position."""
        return self.leader.pose.position

    @property
    def next_dest(self) -> Vec2:
        """Current waypoint target; the final destination once exhausted."""
        if 0 <= self.next_dest_index < len(self.path):
            return self.path[self.next_dest_index]
        return self.dest

    @property
    def robots(self) -> list[RobotState]:
        return [self.leader] + [robot for robot, _ in self.followers]
