"""Decentralized leader-follower tracking control.

A follower regulates a rigid slot (rho_d, psi_d) expressed in the leader
body frame.  Errors are measured in the follower body frame and fed into a
proportional law with feedforward of the leader command.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import (FollowerSpec, GainSet, Pose, SingularConfigurationError,
                   VelocityCmd, angle_normalize)


@dataclass(frozen=True)
class TrackingErrors:
    """Follower-frame tracking errors.

    alpha: longitudinal error (positive = slot is ahead of the follower).
    beta: lateral error (positive = slot is to the follower's left).
    theta_ij: leader heading minus follower heading, wrapped.
    theta_je: follower heading error to the slot heading (same as theta_ij
        because the slot inherits the leader heading).
    x_je, y_je: world-frame position error components for diagnostics.
    """

    alpha: float
    beta: float
    theta_ij: float
    theta_je: float
    x_je: float
    y_je: float


def desired_follower_pose(leader: Pose, spec: FollowerSpec) -> Pose:
    """Slot pose: offset rho_d at bearing psi_d in the leader frame, with
    the leader's heading."""
    angle = leader.theta + spec.psi_d
    return Pose(leader.x + spec.rho_d * math.cos(angle),
                leader.y + spec.rho_d * math.sin(angle),
                leader.theta)


def tracking_errors(leader: Pose, follower: Pose, spec: FollowerSpec) -> TrackingErrors:
    """Errors of `follower` relative to its slot, in the follower body frame."""
    target = desired_follower_pose(leader, spec)
    ex = target.x - follower.x
    ey = target.y - follower.y
    c = math.cos(follower.theta)
    s = math.sin(follower.theta)
    alpha = ex * c + ey * s
    beta = -ex * s + ey * c
    heading_err = angle_normalize(leader.theta - follower.theta)
    return TrackingErrors(alpha, beta, heading_err, heading_err, ex, ey)


def _clamp(value: float, lo: float, hi: float) -> float:
    return lo if value < lo else hi if value > hi else value


def follower_cmd(leader_cmd: VelocityCmd,
                 errors: TrackingErrors,
                 gains: GainSet,
                 spec: FollowerSpec,
                 d: float,
                 v_max: float,
                 omega_max: float) -> VelocityCmd:
    """Follower command from the tracking law.

    v  = k1*alpha + v_i*cos(theta_ij) - rho_d*omega_i*sin(psi_d - theta_ij)
    w  = (v_i*sin(theta_ij) + rho_d*omega_i*cos(psi_d + theta_ij)
          + k2*beta + k3*theta_je) / d

    Outputs are clamped to [-v_max, v_max] and [-omega_max, omega_max].
    """
    if d == 0.0:
        raise SingularConfigurationError("follower law undefined for d == 0")
    v_i = leader_cmd.v
    w_i = leader_cmd.omega
    v = (gains.k1 * errors.alpha
         + v_i * math.cos(errors.theta_ij)
         - spec.rho_d * w_i * math.sin(spec.psi_d - errors.theta_ij))
    w = (v_i * math.sin(errors.theta_ij)
         + spec.rho_d * w_i * math.cos(spec.psi_d + errors.theta_ij)
         + gains.k2 * errors.beta
         + gains.k3 * errors.theta_je) / d
    return VelocityCmd(_clamp(v, -v_max, v_max), _clamp(w, -omega_max, omega_max))
