"""Differential-drive kinematics for the off-axis reference point.

The controlled point sits a distance d ahead of the wheel axle along the
body x-axis, so angular rate couples into the translational rates:

    x_dot = v * cos(theta) - d * omega * sin(theta)
    y_dot = v * sin(theta) + d * omega * cos(theta)
    theta_dot = omega
"""

from __future__ import annotations

import math

from .core import InvalidInputError, Pose, VelocityCmd, _require_finite


def pose_derivative(pose: Pose, cmd: VelocityCmd, d: float) -> tuple[float, float, float]:
    """World-frame rates (x_dot, y_dot, theta_dot) for a command.

    d >= 0; d == 0 reduces to the plain unicycle model.
    """
    _require_finite("offset d", d)
    if d < 0.0:
        raise InvalidInputError(f"offset d must be >= 0, got {d}")
    s = math.sin(pose.theta)
    c = math.cos(pose.theta)
    return (cmd.v * c - d * cmd.omega * s,
            cmd.v * s + d * cmd.omega * c,
            cmd.omega)


def integrate(pose: Pose, cmd: VelocityCmd, d: float, dt: float) -> Pose:
    """Advance a pose by one explicit Euler step of length dt (dt > 0)."""
    _require_finite("dt", dt)
    if dt <= 0.0:
        raise InvalidInputError(f"dt must be > 0, got {dt}")
    dx, dy, dtheta = pose_derivative(pose, cmd, d)
    return Pose(pose.x + dx * dt, pose.y + dy * dt, pose.theta + dtheta * dt)
