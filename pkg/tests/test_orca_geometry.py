"""Velocity-obstacle geometry against independent sampling oracles.

The truncated velocity obstacle induced by relative position p, combined
radius r and horizon tau is the union of the scaled discs D(p/t, r/t) over
t in (0, tau].  The tests below never reuse the implementation's geometry:

  * membership oracle #1 (analytic): ||t*v - p||^2 < r^2 is a quadratic in
    t; membership holds iff its negative interval intersects (0, tau].
  * membership oracle #2 (dense-t): two-stage sampled minimum of
    ||t*v - p|| over t, asserted wherever the sampled margin is confident.
  * boundary oracle: the VO boundary is the cap arc of the circle
    C(p/tau, r/tau) facing the origin plus the two tangent legs
    {s*d : s >= L/tau}; 10,000 constructed samples plus golden-section
    refinement give the closest boundary point to any query velocity.

Checks:
  * vo_contains agrees with both membership oracles on 10,000 random pairs.
  * compute_u lands on the boundary point found by the 10,000-sample oracle
    to within 1e-3 on 500 random non-degenerate instances (inside and
    outside queries), and ||u|| matches the oracle distance.
  * (v + u, n) is a supporting half-plane of the (convex) VO: sampled
    member points never lie on the positive-n side.
  * compute_u is antisymmetric under swapping the two agents.
  * already-overlapping discs use the one-horizon escape disc exactly.
  * orca_halfplane reciprocity: any velocities chosen inside the two
    reciprocal half-planes leave the new relative velocity outside the VO.
  * to_nonholonomic, preferred_velocity and formation_neighbours contracts.
"""

from __future__ import annotations

import math
import random

import numpy as np
import pytest

from pts_sim.core import (Formation, FollowerSpec, Obstacle, PlanarVelocity,
                          Pose, RobotState, InvalidInputError)
from pts_sim.orca import (DEFAULT_COLLISION_HORIZON, HEADING_GAIN,
                          VelocityObstacle, compute_u, formation_neighbours,
                          obstacle_halfplane, orca_halfplane,
                          preferred_velocity, to_nonholonomic, vo_contains)


# ── Independent membership oracles ───────────────────────────────────────────

def member_analytic(px, py, r, tau, vx, vy) -> bool:
    """Quadratic-root membership: exists t in (0, tau] with t*v inside the
    open disc D(p, r)."""
    a = vx * vx + vy * vy
    b = -2.0 * (vx * px + vy * py)
    c = px * px + py * py - r * r
    if a == 0.0:
        return c < 0.0
    disc = b * b - 4.0 * a * c
    if disc <= 0.0:
        return False
    root = math.sqrt(disc)
    t_lo = (-b - root) / (2.0 * a)
    t_hi = (-b + root) / (2.0 * a)
    return t_lo < tau and t_hi > 0.0


def min_gap_analytic(px, py, r, tau, vx, vy) -> float:
    """min over t in [0, tau] of ||t*v - p|| minus r (signed clearance)."""
    ts = [0.0, tau]
    v_sq = vx * vx + vy * vy
    if v_sq > 0.0:
        ts.append(min(max((vx * px + vy * py) / v_sq, 0.0), tau))
    best = min(math.hypot(t * vx - px, t * vy - py) for t in ts)
    return best - r


# ── Boundary oracle ──────────────────────────────────────────────────────────

def _golden(fun, lo, hi, iters=120):
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - phi * (b - a)
    d = a + phi * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(iters):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = fun(d)
    t = 0.5 * (a + b)
    return t, fun(t)


class BoundaryOracle:
    """Constructed sample set of the VO boundary with local refinement."""

    def __init__(self, px, py, r, tau, n_samples=10000):
        dist = math.hypot(px, py)
        assert dist > r, "boundary construction needs non-overlapping discs"
        self.p = (px, py)
        self.r = r
        self.tau = tau
        L = math.sqrt(dist * dist - r * r)
        theta_p = math.atan2(py, px)
        half = math.asin(r / dist)
        self.legs = [(math.cos(theta_p - half), math.sin(theta_p - half)),
                     (math.cos(theta_p + half), math.sin(theta_p + half))]
        self.s_min = L / tau
        self.cx, self.cy = px / tau, py / tau
        self.rho = r / tau
        # Cap arc endpoints: angles of the tangent points seen from the
        # truncation-circle centre; the cap is the side facing the origin.
        ang = [math.atan2(L * d[1] - py, L * d[0] - px) for d in self.legs]
        span = (ang[1] - ang[0]) % math.tau
        mid = math.atan2(-py, -px)
        if not ((mid - ang[0]) % math.tau) <= span:
            ang = [ang[1], ang[0]]
            span = math.tau - span
        self.arc_start = ang[0]
        self.arc_span = span

    def _arc_point(self, a):
        return (self.cx + self.rho * math.cos(a), self.cy + self.rho * math.sin(a))

    def _leg_point(self, which, s):
        d = self.legs[which]
        return (s * d[0], s * d[1])

    def closest(self, vx, vy, n_samples=10000):
        """Closest boundary point to (vx, vy): best of n_samples constructed
        points, then golden-section refinement on the winning feature.
        Returns (point, distance, runner_up_distance)."""
        n_arc = n_samples // 2
        n_leg = (n_samples - n_arc) // 2
        s_max = max(self.s_min + 1.0, 2.0 * math.hypot(vx, vy) + self.s_min + 1.0)

        best = []  # (distance, feature, parameter)
        angles = self.arc_start + self.arc_span * np.linspace(0.0, 1.0, n_arc)
        ax = self.cx + self.rho * np.cos(angles)
        ay = self.cy + self.rho * np.sin(angles)
        d_arc = np.hypot(ax - vx, ay - vy)
        k = int(np.argmin(d_arc))
        best.append((float(d_arc[k]), "arc", float(angles[k])))

        ss = np.linspace(self.s_min, s_max, n_leg)
        for which, d in enumerate(self.legs):
            d_leg = np.hypot(ss * d[0] - vx, ss * d[1] - vy)
            k = int(np.argmin(d_leg))
            best.append((float(d_leg[k]), f"leg{which}", float(ss[k])))

        refined = []
        arc_step = self.arc_span / max(n_arc - 1, 1)
        s_step = (s_max - self.s_min) / max(n_leg - 1, 1)
        for dist, feature, param in best:
            if feature == "arc":
                lo = max(self.arc_start, param - arc_step)
                hi = min(self.arc_start + self.arc_span, param + arc_step)
                a, val = _golden(lambda a: math.hypot(*(np.array(self._arc_point(a))
                                                        - (vx, vy))), lo, hi)
                refined.append((val, self._arc_point(a)))
            else:
                which = int(feature[3:])
                lo = max(self.s_min, param - s_step)
                hi = param + s_step
                s, val = _golden(lambda s: math.hypot(*(np.array(self._leg_point(which, s))
                                                        - (vx, vy))), lo, hi)
                refined.append((val, self._leg_point(which, s)))
        refined.sort(key=lambda item: item[0])
        runner_up = refined[1][0] if len(refined) > 1 else math.inf
        return refined[0][1], refined[0][0], runner_up


def test_boundary_construction_is_on_the_boundary():
    """Spot-validate the oracle itself: constructed points sit on the VO
    boundary (inward probe is a member, outward probe is not)."""
    rng = random.Random(401)
    for _ in range(50):
        r = rng.uniform(0.3, 2.0)
        dist = rng.uniform(1.1 * r, 6.0 * r)
        ang = rng.uniform(-math.pi, math.pi)
        px, py = dist * math.cos(ang), dist * math.sin(ang)
        tau = rng.uniform(2.0, 15.0)
        oracle = BoundaryOracle(px, py, r, tau)
        probes = []
        for frac in (0.1, 0.5, 0.9):
            a = oracle.arc_start + frac * oracle.arc_span
            bx, by = oracle._arc_point(a)
            inward = (oracle.cx - bx, oracle.cy - by)
            probes.append(((bx, by), inward))
        for which in (0, 1):
            s = oracle.s_min * 1.5 + 0.7
            bx, by = oracle._leg_point(which, s)
            dx, dy = oracle.legs[which]
            normal = (-dy, dx)
            sign = 1.0 if member_analytic(px, py, r, tau,
                                          bx + 1e-6 * normal[0],
                                          by + 1e-6 * normal[1]) else -1.0
            probes.append(((bx, by), (sign * normal[0], sign * normal[1])))
        for (bx, by), (ix, iy) in probes:
            scale = 1e-6 / math.hypot(ix, iy)
            assert member_analytic(px, py, r, tau,
                                   bx + scale * ix, by + scale * iy)
            assert not member_analytic(px, py, r, tau,
                                       bx - scale * ix, by - scale * iy)


def test_vo_contains_matches_analytic_oracle():
    rng = random.Random(402)
    skipped = 0
    for _ in range(10000):
        r = rng.uniform(0.2, 2.0)
        dist = rng.uniform(0.2, 6.0)
        ang = rng.uniform(-math.pi, math.pi)
        px, py = dist * math.cos(ang), dist * math.sin(ang)
        tau = rng.uniform(1.0, 15.0)
        scale = (dist + r) / tau * 3.0 + 0.5
        vx, vy = rng.uniform(-scale, scale), rng.uniform(-scale, scale)
        margin = min_gap_analytic(px, py, r, tau, vx, vy)
        if abs(margin) < 1e-12 * (1.0 + r):
            skipped += 1
            continue
        vo = VelocityObstacle((px, py), r, tau)
        assert vo_contains(vo, PlanarVelocity(vx, vy)) == member_analytic(
            px, py, r, tau, vx, vy)
    assert skipped < 20


def test_vo_contains_matches_dense_t_oracle():
    """Two-stage dense sampling of ||t*v - p|| over t in (0, tau]."""
    rng = np.random.default_rng(403)
    n_pairs = 10000
    coarse = 512
    skipped = 0
    for start in range(0, n_pairs, 500):
        m = min(500, n_pairs - start)
        r = rng.uniform(0.2, 2.0, m)
        dist = rng.uniform(0.2, 6.0, m)
        ang = rng.uniform(-math.pi, math.pi, m)
        px, py = dist * np.cos(ang), dist * np.sin(ang)
        tau = rng.uniform(1.0, 15.0, m)
        scale = (dist + r) / tau * 3.0 + 0.5
        vx = rng.uniform(-1.0, 1.0, m) * scale
        vy = rng.uniform(-1.0, 1.0, m) * scale

        grid = np.linspace(1.0 / coarse, 1.0, coarse)  # fractions of tau
        ts = tau[:, None] * grid[None, :]
        d = np.hypot(ts * vx[:, None] - px[:, None], ts * vy[:, None] - py[:, None])
        k = np.argmin(d, axis=1)
        t_best = np.take_along_axis(ts, k[:, None], axis=1)[:, 0]
        t_step = tau / coarse
        lo = np.maximum(t_best - t_step, 1e-12)
        hi = np.minimum(t_best + t_step, tau)
        fine = np.linspace(0.0, 1.0, 512)
        ts2 = lo[:, None] + (hi - lo)[:, None] * fine[None, :]
        d2 = np.hypot(ts2 * vx[:, None] - px[:, None], ts2 * vy[:, None] - py[:, None])
        sampled_min = np.minimum(d.min(axis=1), d2.min(axis=1))

        for i in range(m):
            margin = sampled_min[i] - r[i]
            if abs(margin) < 1e-7 * (1.0 + r[i]):
                skipped += 1
                continue
            vo = VelocityObstacle((px[i], py[i]), r[i], tau[i])
            assert vo_contains(vo, PlanarVelocity(vx[i], vy[i])) == (margin < 0.0)
    assert skipped < 200  # tangential draws are rare


def _random_instance(rng):
    r = rng.uniform(0.3, 2.0)
    dist = rng.uniform(1.1 * r, 6.0 * r)
    ang = rng.uniform(-math.pi, math.pi)
    px, py = dist * math.cos(ang), dist * math.sin(ang)
    tau = rng.uniform(2.0, 15.0)
    if rng.random() < 0.5:
        # Velocity drawn inside the obstacle: scaled interior disc point.
        t = rng.uniform(0.05, 1.0) * tau
        rad = r * math.sqrt(rng.random()) * 0.95
        beta = rng.uniform(-math.pi, math.pi)
        qx, qy = px + rad * math.cos(beta), py + rad * math.sin(beta)
        vx, vy = qx / t, qy / t
    else:
        scale = (dist + r) / tau * 3.0 + 0.5
        vx, vy = rng.uniform(-scale, scale), rng.uniform(-scale, scale)
    return px, py, r, tau, vx, vy


def test_compute_u_matches_boundary_oracle():
    rng = random.Random(404)
    ambiguous = 0
    for _ in range(500):
        px, py, r, tau, vx, vy = _random_instance(rng)
        vo = VelocityObstacle((px, py), r, tau)
        (ux, uy), (nx, ny) = compute_u(vo, PlanarVelocity(vx, vy))
        bx, by = vx + ux, vy + uy

        oracle = BoundaryOracle(px, py, r, tau)
        (ox, oy), best, runner_up = oracle.closest(vx, vy)

        # The magnitude of the correction equals the distance to the
        # boundary regardless of which feature wins.
        assert math.hypot(ux, uy) == pytest.approx(best, abs=1e-3)
        # The landing point matches the oracle point except when two
        # features tie (the closest point is then non-unique).
        if runner_up - best > 1e-6:
            assert math.hypot(bx - ox, by - oy) < 1e-3
        else:
            ambiguous += 1
        # The boundary point really is on the boundary: zero signed gap.
        assert abs(min_gap_analytic(px, py, r, tau, bx, by)) < 1e-9 * (1.0 + r)
        assert math.hypot(nx, ny) == pytest.approx(1.0, abs=1e-12)
    assert ambiguous < 25


def test_compute_u_supporting_halfplane():
    """(v + u, n) supports the convex VO: members satisfy (x - b) . n <= 0."""
    rng = random.Random(405)
    for _ in range(60):
        px, py, r, tau, vx, vy = _random_instance(rng)
        vo = VelocityObstacle((px, py), r, tau)
        (ux, uy), (nx, ny) = compute_u(vo, PlanarVelocity(vx, vy))
        bx, by = vx + ux, vy + uy
        members = 0
        while members < 60:
            t = rng.uniform(1e-3, 1.0) * tau
            rad = r * math.sqrt(rng.random())
            beta = rng.uniform(-math.pi, math.pi)
            mx = (px + rad * math.cos(beta)) / t
            my = (py + rad * math.sin(beta)) / t
            if not member_analytic(px, py, r, tau, mx, my):
                continue
            members += 1
            assert (mx - bx) * nx + (my - by) * ny <= 1e-7 * (1.0 + abs(mx) + abs(my))


def test_compute_u_antisymmetry():
    rng = random.Random(406)
    for _ in range(300):
        px, py, r, tau, vx, vy = _random_instance(rng)
        fwd = VelocityObstacle((px, py), r, tau)
        rev = VelocityObstacle((-px, -py), r, tau)
        (ux, uy), (nx, ny) = compute_u(fwd, PlanarVelocity(vx, vy))
        (rx, ry), (mx, my) = compute_u(rev, PlanarVelocity(-vx, -vy))
        assert rx == pytest.approx(-ux, abs=1e-12)
        assert ry == pytest.approx(-uy, abs=1e-12)
        assert mx == pytest.approx(-nx, abs=1e-12)
        assert my == pytest.approx(-ny, abs=1e-12)


def test_compute_u_collision_branch():
    rng = random.Random(407)
    h = DEFAULT_COLLISION_HORIZON
    for _ in range(300):
        r = rng.uniform(0.3, 2.0)
        dist = rng.uniform(0.0, 0.999) * r
        ang = rng.uniform(-math.pi, math.pi)
        px, py = dist * math.cos(ang), dist * math.sin(ang)
        vx, vy = rng.uniform(-1, 1), rng.uniform(-1, 1)
        vo = VelocityObstacle((px, py), r, 11.0)
        (ux, uy), (nx, ny) = compute_u(vo, PlanarVelocity(vx, vy))
        # Landing point sits on the escape disc D(p/h, r/h) exactly.
        bx, by = vx + ux, vy + uy
        assert math.hypot(bx - px / h, by - py / h) == pytest.approx(r / h, rel=1e-9)
        # u is parallel to w = v - p/h and n is its unit vector.
        wx, wy = vx - px / h, vy - py / h
        w_len = math.hypot(wx, wy)
        if w_len > 1e-12:
            assert nx == pytest.approx(wx / w_len, abs=1e-9)
            assert ny == pytest.approx(wy / w_len, abs=1e-9)
            assert ux * wy - uy * wx == pytest.approx(0.0, abs=1e-9)


def test_compute_u_rejects_bad_horizon_when_overlapping():
    vo = VelocityObstacle((0.1, 0.0), 1.0, 11.0)
    with pytest.raises(InvalidInputError):
        compute_u(vo, PlanarVelocity(0.0, 0.0), collision_horizon=0.0)


def test_orca_halfplane_reciprocal_safety():
    """Velocities picked anywhere inside the two reciprocal half-planes put
    the new relative velocity outside the velocity obstacle."""
    rng = random.Random(408)
    checked = 0
    for _ in range(80):
        r_i, r_j = rng.uniform(0.3, 0.8), rng.uniform(0.3, 0.8)
        gap = rng.uniform(0.05, 3.0)
        ang = rng.uniform(-math.pi, math.pi)
        dist = r_i + r_j + gap
        p_i = (rng.uniform(-2, 2), rng.uniform(-2, 2))
        p_j = (p_i[0] + dist * math.cos(ang), p_i[1] + dist * math.sin(ang))
        v_i = PlanarVelocity(rng.uniform(-1, 1), rng.uniform(-1, 1))
        v_j = PlanarVelocity(rng.uniform(-1, 1), rng.uniform(-1, 1))
        tau = rng.uniform(3.0, 12.0)
        h_i = orca_halfplane(p_i, v_i, r_i, p_j, v_j, r_j, tau)
        h_j = orca_halfplane(p_j, v_j, r_j, p_i, v_i, r_i, tau)
        px, py = p_j[0] - p_i[0], p_j[1] - p_i[1]
        r_sum = r_i + r_j
        for _ in range(40):
            cand_i = PlanarVelocity(rng.uniform(-2, 2), rng.uniform(-2, 2))
            cand_j = PlanarVelocity(rng.uniform(-2, 2), rng.uniform(-2, 2))
            if not (h_i.contains(cand_i) and h_j.contains(cand_j)):
                continue
            checked += 1
            rel = (cand_i.vx - cand_j.vx, cand_i.vy - cand_j.vy)
            # Outside the open VO, up to a hair of rounding: shrink r by 1e-9.
            assert not member_analytic(px, py, r_sum - 1e-9, tau, rel[0], rel[1])
    assert checked > 300  # the rejection sampling found plenty of pairs


def test_obstacle_halfplane_full_responsibility():
    """The obstacle plane equals the pair plane with responsibility 1 and a
    stationary other agent."""
    rng = random.Random(409)
    for _ in range(100):
        p_i = (rng.uniform(-2, 2), rng.uniform(-2, 2))
        v_i = PlanarVelocity(rng.uniform(-1, 1), rng.uniform(-1, 1))
        r_i = rng.uniform(0.3, 0.8)
        obs = Obstacle((p_i[0] + rng.uniform(1.5, 4.0), p_i[1] + rng.uniform(-2, 2)),
                       rng.uniform(0.2, 0.8))
        tau = rng.uniform(2.0, 8.0)
        a = obstacle_halfplane(p_i, v_i, r_i, obs, tau)
        b = orca_halfplane(p_i, v_i, r_i, obs.center, PlanarVelocity(0.0, 0.0),
                           obs.radius, tau, responsibility=1.0)
        assert a.point == b.point
        assert a.normal == b.normal


def test_to_nonholonomic_contract():
    # Zero velocity stops the robot.
    cmd = to_nonholonomic(PlanarVelocity(0.0, 0.0), Pose(0, 0, 1.0), 0.03, 0.4)
    assert cmd.v == 0.0 and cmd.omega == 0.0
    # Aligned: full requested speed, no turn.
    cmd = to_nonholonomic(PlanarVelocity(0.02, 0.0), Pose(0, 0, 0.0), 0.03, 0.4)
    assert cmd.v == pytest.approx(0.02)
    assert cmd.omega == 0.0
    # Behind the robot: speed floored at zero, full turn rate.
    cmd = to_nonholonomic(PlanarVelocity(-0.02, 0.0), Pose(0, 0, 0.0), 0.03, 0.4)
    assert cmd.v == 0.0
    assert abs(cmd.omega) == 0.4
    rng = random.Random(410)
    for _ in range(500):
        v_star = PlanarVelocity(rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1))
        pose = Pose(0.0, 0.0, rng.uniform(-3, 3))
        v_max = rng.uniform(0.01, 0.1)
        omega_max = rng.uniform(0.1, 1.0)
        cmd = to_nonholonomic(v_star, pose, v_max, omega_max)
        assert 0.0 <= cmd.v <= v_max
        assert abs(cmd.omega) <= omega_max
        if v_star.norm() > 0.0:
            phi = math.remainder(math.atan2(v_star.vy, v_star.vx) - pose.theta,
                                 math.tau)
            expected_omega = max(-omega_max, min(omega_max, HEADING_GAIN * phi))
            assert cmd.omega == pytest.approx(expected_omega, abs=1e-9)


def test_preferred_velocity_contract():
    v = preferred_velocity((0.0, 0.0), (3.0, 4.0), False, 0.03, 1.0)
    assert v.norm() == pytest.approx(0.03)
    assert v.vx / v.norm() == pytest.approx(0.6)
    # Final leg ramps down with distance / tau_slow.
    v = preferred_velocity((0.0, 0.0), (0.01, 0.0), True, 0.03, 1.0)
    assert v.vx == pytest.approx(0.01)
    v = preferred_velocity((0.0, 0.0), (5.0, 0.0), True, 0.03, 1.0)
    assert v.vx == pytest.approx(0.03)
    # At the target the preferred velocity vanishes.
    v = preferred_velocity((1.0, 1.0), (1.0, 1.0), True, 0.03, 1.0)
    assert v.norm() == 0.0


def _disc_formation(fid, x, y, radius=0.45):
    leader = RobotState(pose=Pose(x, y, 0.0))
    follower = (RobotState(pose=Pose(x - 0.35, y, 0.0)), FollowerSpec(0.35, math.pi))
    return Formation(id=fid, leader=leader, followers=[follower], radius=radius,
                     src=(x, y), dest=(x + 1.0, y))


def test_formation_neighbours_distance_filter():
    formations = [_disc_formation("a", 0.0, 0.0),
                  _disc_formation("b", 3.0, 0.0),
                  _disc_formation("c", 4.0, 0.0),   # exactly at the limit
                  _disc_formation("d", 4.01, 0.0)]
    out = formation_neighbours(formations, 0, neighbour_dist=4.0)
    assert [f.id for f in out] == ["b", "c"]
    # Default pulls the distance from the formation itself.
    formations[0].neighbour_dist = 3.5
    out = formation_neighbours(formations, 0)
    assert [f.id for f in out] == ["b"]
    # Arrived formations stay in the neighbour set.
    formations[1].arrived = True
    out = formation_neighbours(formations, 0, neighbour_dist=4.0)
    assert [f.id for f in out] == ["b", "c"]
