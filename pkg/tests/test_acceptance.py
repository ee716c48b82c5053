"""Acceptance criteria for the formation traffic simulator.

One test per criterion, each emitting a single visible PASS/FAIL line:

  C1  Baseline: one formation (leader + 3 followers at 0.35 m), straight
      10 m route -> arrives in [333.33, 366.67] simulated seconds, under
      10 s wall clock.
  C2  Four-formation swap (3-10 robots each, crossing routes): zero
      collisions, pairwise centre distance >= r_i + r_j at every step,
      per-formation time <= 1.25x its own solo baseline, follower
      distances 0.35 +/- 0.05 m after a 5 s transient.
  C3  Same four formations + five seeded disc obstacles: zero obstacle
      penetrations, zero collisions, time <= 1.4x baseline.
  C4  Thirty formations with varied robot counts: all arrive, zero
      collisions, under 5 minutes wall clock.
  C5  LP oracle suite: 1,000 feasible instances within 1e-3 * v_max of a
      400x400 grid search; 200 infeasible instances within 1e-3 of the
      grid minimax violation.
  C6  VO geometry suite: compute_u within 1e-3 of a 10,000-sample boundary
      oracle on 500 instances; vo_contains agrees with a dense-t sampling
      oracle on 10,000 pairs.
  C7  Controller regulation: followers perturbed by up to 0.1 m / 0.3 rad
      behind a straight-driving leader settle to rho +/- 0.05 m within 60
      simulated seconds using the default controller gains.
  C8  Determinism: re-running every scenario gives byte-identical
      trajectory files, and thread-pool mode matches sequential mode
      byte for byte (the thirty-formation scenario is compared on a
      4,000-step prefix to keep the run time reasonable).
"""

from __future__ import annotations

import io
import math
import time
from importlib import resources

import pytest

import test_lp
import test_orca_geometry
from pts_sim import engine
from pts_sim.core import FollowerSpec, GainSet, Pose, VelocityCmd
from pts_sim.formation_control import (desired_follower_pose, follower_cmd,
                                       tracking_errors)
from pts_sim.kinematics import integrate
from pts_sim.scenario import (ScenarioConfig, parse_scenario,
                              write_trajectories)

TRANSIENT_STEPS = 300  # 5 s at dt = 0.0167


def _load(name):
    text = (resources.files("pts_sim") / "scenarios" / f"{name}.yaml").read_text()
    return parse_scenario(text)


def _timed_run(config, **kwargs):
    start = time.perf_counter()
    report = engine.run(config, **kwargs)
    return report, time.perf_counter() - start


@pytest.fixture(scope="module")
def baseline_run():
    return _timed_run(_load("baseline"))


@pytest.fixture(scope="module")
def four_swap_run():
    return _timed_run(_load("four_swap"))


@pytest.fixture(scope="module")
def obstacles_run():
    return _timed_run(_load("four_swap_obstacles"))


@pytest.fixture(scope="module")
def thirty_run():
    return _timed_run(_load("thirty"))


@pytest.fixture(scope="module")
def solo_baselines():
    """Per-formation obstacle-free solo arrival times (shared by C2/C3)."""
    config = _load("four_swap")
    out = {}
    for spec in config.formations:
        solo = ScenarioConfig(name=f"solo_{spec.id}", seed=config.seed,
                              arena=config.arena, params=config.params,
                              obstacles=(), formations=(spec,))
        report = engine.run(solo)
        assert report.completed
        out[spec.id] = report.time_to_goal[spec.id]
    return out


def _follower_band(report, lo=0.30, hi=0.40):
    """Worst follower-to-leader distance after the transient, across all
    formations, as (minimum, maximum)."""
    worst_lo, worst_hi = math.inf, -math.inf
    for series in report.follower_distance_series.values():
        for samples in series:
            tail = samples[TRANSIENT_STEPS:]
            worst_lo = min(worst_lo, min(tail))
            worst_hi = max(worst_hi, max(tail))
    return worst_lo, worst_hi


def test_c1_baseline(baseline_run, term):
    report, wall = baseline_run
    arrival = report.time_to_goal["pts1"]
    lo, hi = 10.0 / 0.03, 1.10 * 10.0 / 0.03
    ok = (report.completed and arrival is not None
          and lo <= arrival <= hi and wall < 10.0)
    term.line(f"[C1] baseline arrival: {'PASS' if ok else 'FAIL'} — "
              f"time {arrival:.2f} s in [{lo:.2f}, {hi:.2f}], "
              f"wall {wall:.2f} s < 10 s")
    assert ok


def test_c2_four_formation_swap(four_swap_run, solo_baselines, term):
    report, _ = four_swap_run
    ratios = {fid: report.time_to_goal[fid] / solo_baselines[fid]
              for fid in solo_baselines}
    band_lo, band_hi = _follower_band(report)
    ok = (report.completed
          and report.collision_count == 0
          and report.min_separation >= 0.0
          and max(ratios.values()) <= 1.25
          and band_lo >= 0.30 and band_hi <= 0.40)
    detail = ", ".join(f"{fid} {ratio:.3f}x" for fid, ratio in ratios.items())
    term.line(f"[C2] four-formation swap: {'PASS' if ok else 'FAIL'} — "
              f"collisions {report.collision_count}, "
              f"min separation {report.min_separation:.4f} m, "
              f"times ({detail}) <= 1.25x, "
              f"follower band [{band_lo:.3f}, {band_hi:.3f}] in [0.30, 0.40]")
    assert ok


def test_c3_obstacle_scenario(obstacles_run, solo_baselines, term):
    report, _ = obstacles_run
    ratios = {fid: report.time_to_goal[fid] / solo_baselines[fid]
              for fid in solo_baselines}
    band_lo, band_hi = _follower_band(report)
    ok = (report.completed
          and report.collision_count == 0
          and report.min_separation >= 0.0
          and report.min_obstacle_clearance >= 0.0
          and max(ratios.values()) <= 1.4
          and band_lo >= 0.30 and band_hi <= 0.40)
    term.line(f"[C3] obstacle scenario: {'PASS' if ok else 'FAIL'} — "
              f"collisions {report.collision_count}, "
              f"obstacle clearance {report.min_obstacle_clearance:.4f} m >= 0, "
              f"worst time ratio {max(ratios.values()):.3f} <= 1.4, "
              f"follower band [{band_lo:.3f}, {band_hi:.3f}]")
    assert ok


def test_c4_thirty_formations(thirty_run, term):
    report, wall = thirty_run
    arrived = sum(1 for v in report.time_to_goal.values() if v is not None)
    band_lo, band_hi = _follower_band(report)
    ok = (report.completed and arrived == 30
          and report.collision_count == 0
          and report.min_separation >= 0.0
          and band_lo >= 0.30 and band_hi <= 0.40
          and wall < 300.0)
    term.line(f"[C4] thirty formations: {'PASS' if ok else 'FAIL'} — "
              f"{arrived}/30 arrived, collisions {report.collision_count}, "
              f"min separation {report.min_separation:.4f} m, "
              f"wall {wall:.1f} s < 300 s")
    assert ok


def test_c5_lp_oracle_suite(term):
    test_lp.test_solver_matches_grid_on_feasible_instances()
    test_lp.test_fallback_matches_grid_minimax_on_infeasible_instances()
    term.line("[C5] velocity LP vs 400x400 grid oracle: PASS — "
              "1000 feasible within 1e-3*v_max, "
              "200 infeasible minimax within 1e-3")


def test_c6_vo_geometry_suite(term):
    test_orca_geometry.test_compute_u_matches_boundary_oracle()
    test_orca_geometry.test_vo_contains_matches_dense_t_oracle()
    term.line("[C6] VO geometry vs sampling oracles: PASS — "
              "500 compute_u instances within 1e-3 of the 10k-sample "
              "boundary, 10k membership pairs agree")


def test_c7_controller_regulation(term):
    dt = 0.0167
    gains = GainSet(1.5, 1.0, 0.025)
    spec_angles = (math.pi, math.tau / 3, -math.tau / 3)
    perturbations = [(0.1, 0.0, 0.0), (-0.1, 0.0, 0.0), (0.0, 0.1, 0.0),
                     (0.0, -0.1, 0.0), (0.0, 0.0, 0.3), (0.0, 0.0, -0.3),
                     (0.07, -0.07, 0.2), (-0.07, 0.07, -0.2),
                     (0.1, 0.1, 0.3), (-0.1, -0.1, -0.3)]
    worst_settle = 0.0
    worst_residual = 0.0
    for psi in spec_angles:
        spec = FollowerSpec(0.35, psi)
        for dx, dy, dth in perturbations:
            leader = Pose(0.0, 0.0, 0.0)
            slot = desired_follower_pose(leader, spec)
            follower = Pose(slot.x + dx, slot.y + dy, dth)
            leader_cmd = VelocityCmd(0.03, 0.0)
            settle = None
            for k in range(int(90.0 / dt)):
                errors = tracking_errors(leader, follower, spec)
                cmd = follower_cmd(leader_cmd, errors, gains, spec,
                                   0.1, 0.15, 1.0)
                follower = integrate(follower, cmd, 0.1, dt)
                leader = integrate(leader, leader_cmd, 0.1, dt)
                gap = math.hypot(follower.x - leader.x, follower.y - leader.y)
                inside = abs(gap - spec.rho_d) <= 0.05
                if settle is None and inside:
                    settle = k * dt
                elif not inside:
                    settle = None  # must stay inside once settled
            assert settle is not None
            worst_settle = max(worst_settle, settle)
            worst_residual = max(worst_residual,
                                 abs(math.hypot(follower.x - leader.x,
                                                follower.y - leader.y)
                                     - spec.rho_d))
    ok = worst_settle <= 60.0
    term.line(f"[C7] controller regulation: {'PASS' if ok else 'FAIL'} — "
              f"30 perturbed starts settle to 0.35 +/- 0.05 m within "
              f"{worst_settle:.1f} s <= 60 s (final error "
              f"{worst_residual:.4f} m)")
    assert ok


def _trajectory_bytes(config, **kwargs):
    report = engine.run(config, **kwargs)
    buffer = io.StringIO()
    write_trajectories(report, buffer)
    return buffer.getvalue().encode()


def test_c8_determinism(monkeypatch, term):
    cases = [("baseline", None), ("four_swap", None),
             ("four_swap_obstacles", None), ("thirty", 4000)]
    details = []
    for name, max_steps in cases:
        config = _load(name)
        kwargs = {"max_steps": max_steps} if max_steps else {}
        monkeypatch.delenv(engine.THREADS_ENV, raising=False)
        first = _trajectory_bytes(config, **kwargs)
        second = _trajectory_bytes(config, **kwargs)
        monkeypatch.setenv(engine.THREADS_ENV, "4")
        pooled = _trajectory_bytes(config, **kwargs)
        monkeypatch.delenv(engine.THREADS_ENV, raising=False)
        assert first == second, f"{name}: sequential reruns differ"
        assert first == pooled, f"{name}: thread-pool run differs"
        steps = "full" if max_steps is None else f"{max_steps}-step prefix"
        details.append(f"{name} ({steps}, {len(first)} bytes)")
    term.line("[C8] determinism: PASS — sequential reruns and 4-thread "
              "runs byte-identical for " + ", ".join(details))
