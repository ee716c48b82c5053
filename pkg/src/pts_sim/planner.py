"""Global path planning with an asymptotically optimal sampling tree.

Each formation plans once, before the run starts, treating itself as a disc
of its formation radius: obstacles are inflated by radius + clearance and
all collision checks are exact point-disc / segment-disc distance tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import InvalidInputError, Obstacle, Vec2, _require_finite

Bounds = tuple[float, float, float, float]  # (xmin, ymin, xmax, ymax)


class PlanningError(RuntimeError):
    """Search exhausted its iteration budget without reaching the goal."""

    def __init__(self, message: str, iterations: int):
        super().__init__(message)
        self.iterations = iterations


@dataclass(frozen=True)
class RrtParams:
    """Tuning knobs for the sampling tree."""

    max_iters: int = 10000
    step_eta: float = 0.5
    goal_bias: float = 0.05
    rewire_gamma: float = 6.0
    # When the straight segment src->dest is already collision free it is
    # provably optimal, so the tree search can be skipped entirely.  Tests
    # that exercise the tree itself turn this off.
    straight_line_fast_path: bool = True

    def __post_init__(self) -> None:
        if self.max_iters <= 0:
            raise InvalidInputError(f"max_iters must be > 0, got {self.max_iters}")
        if self.step_eta <= 0.0:
            raise InvalidInputError(f"step_eta must be > 0, got {self.step_eta}")
        if not 0.0 <= self.goal_bias < 1.0:
            raise InvalidInputError(f"goal_bias must be in [0, 1), got {self.goal_bias}")
        if self.rewire_gamma <= 0.0:
            raise InvalidInputError(f"rewire_gamma must be > 0, got {self.rewire_gamma}")


@dataclass(frozen=True)
class PlanNode:
    """One tree node: position, parent index (-1 for the root), and the
    cost of the root path ending here."""

    position: Vec2
    parent: int
    cost: float


@dataclass(frozen=True)
class Path:
    """Piecewise-linear path through free space."""

    points: tuple[Vec2, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "points", tuple(tuple(p) for p in self.points))

    def length(self) -> float:
        total = 0.0
        for (ax, ay), (bx, by) in zip(self.points, self.points[1:]):
            total += math.hypot(bx - ax, by - ay)
        return total

    def __len__(self) -> int:
        return len(self.points)


def _inflate(obstacles, clearance: float) -> list[tuple[float, float, float]]:
    return [(o.center[0], o.center[1], o.radius + clearance) for o in obstacles]


def _point_clear(x: float, y: float, discs) -> bool:
    for cx, cy, r in discs:
        dx = x - cx
        dy = y - cy
        if dx * dx + dy * dy < r * r:
            return False
    return True


def _segment_clear(ax: float, ay: float, bx: float, by: float, discs) -> bool:
    """Exact test: the closest point of segment AB to each disc centre must
    lie outside the disc."""
    dx = bx - ax
    dy = by - ay
    len_sq = dx * dx + dy * dy
    for cx, cy, r in discs:
        if len_sq == 0.0:
            qx, qy = ax - cx, ay - cy
        else:
            t = ((cx - ax) * dx + (cy - ay) * dy) / len_sq
            if t < 0.0:
                t = 0.0
            elif t > 1.0:
                t = 1.0
            qx = ax + t * dx - cx
            qy = ay + t * dy - cy
        if qx * qx + qy * qy < r * r:
            return False
    return True


def plan(src: Vec2, dest: Vec2,
         obstacles: list[Obstacle],
         bounds: Bounds,
         clearance: float,
         params: RrtParams | None = None,
         seed=0,
         return_tree: bool = False):
    """Collision-free path from src to dest, near-optimal in length.

    clearance is the margin kept between the path and every obstacle
    boundary (the planned body radius plus safety margin).  seed may be an
    int or a numpy Generator.  Returns a Path, or (Path, list[PlanNode])
    when return_tree is set.  Raises PlanningError when the iteration
    budget runs out and InvalidInputError for invalid endpoints.
    """
    if params is None:
        params = RrtParams()
    _require_finite("clearance", clearance)
    if clearance < 0.0:
        raise InvalidInputError(f"clearance must be >= 0, got {clearance}")
    xmin, ymin, xmax, ymax = bounds
    if not (xmin < xmax and ymin < ymax):
        raise InvalidInputError(f"empty bounds {bounds}")
    for label, (x, y) in (("src", src), ("dest", dest)):
        _require_finite(label, x, y)
        if not (xmin <= x <= xmax and ymin <= y <= ymax):
            raise InvalidInputError(f"{label} {x, y} outside bounds {bounds}")
    discs = _inflate(obstacles, clearance)
    if not _point_clear(src[0], src[1], discs):
        raise InvalidInputError(f"src {src} intersects an inflated obstacle")
    if not _point_clear(dest[0], dest[1], discs):
        raise InvalidInputError(f"dest {dest} intersects an inflated obstacle")

    if params.straight_line_fast_path and _segment_clear(
            src[0], src[1], dest[0], dest[1], discs):
        path = Path((tuple(src), tuple(dest)))
        if return_tree:
            root = PlanNode(tuple(src), -1, 0.0)
            goal = PlanNode(tuple(dest), 0, path.length())
            return path, [root, goal]
        return path

    rng = np.random.default_rng(seed)
    cap = params.max_iters + 1
    xs = np.empty(cap)
    ys = np.empty(cap)
    parent = np.full(cap, -1, dtype=np.int64)
    cost = np.zeros(cap)
    children: list[list[int]] = [[] for _ in range(cap)]
    xs[0], ys[0] = src
    n = 1

    goal_parent = -1
    eta = params.step_eta
    gamma = params.rewire_gamma
    span_x = xmax - xmin
    span_y = ymax - ymin

    for _ in range(params.max_iters):
        if rng.random() < params.goal_bias:
            sx, sy = dest
        else:
            sx = xmin + rng.random() * span_x
            sy = ymin + rng.random() * span_y

        dxs = xs[:n] - sx
        dys = ys[:n] - sy
        d2 = dxs * dxs + dys * dys
        nearest = int(np.argmin(d2))
        near_dist = math.sqrt(d2[nearest])
        if near_dist == 0.0:
            continue
        if near_dist <= eta:
            px, py = sx, sy
        else:
            scale = eta / near_dist
            px = xs[nearest] + (sx - xs[nearest]) * scale
            py = ys[nearest] + (sy - ys[nearest]) * scale
        if not _point_clear(px, py, discs):
            continue

        radius = min(gamma * math.sqrt(math.log(n + 1) / (n + 1)), eta) if n > 0 else eta
        dxn = xs[:n] - px
        dyn = ys[:n] - py
        d2n = dxn * dxn + dyn * dyn
        near_ids = np.flatnonzero(d2n <= radius * radius)
        if nearest not in near_ids:
            near_ids = np.append(near_ids, nearest)
        dists = np.sqrt(d2n[near_ids])
        through = cost[near_ids] + dists
        order = np.argsort(through, kind="stable")

        best = -1
        best_cost = math.inf
        for k in order:
            j = int(near_ids[k])
            if _segment_clear(xs[j], ys[j], px, py, discs):
                best = j
                best_cost = float(through[k])
                break
        if best < 0:
            continue

        node = n
        xs[node], ys[node] = px, py
        parent[node] = best
        cost[node] = best_cost
        children[best].append(node)
        n += 1

        # Rewire: adopt any near node whose root path through the new node
        # would be shorter, then shift its whole subtree cost.
        for k in range(len(near_ids)):
            j = int(near_ids[k])
            if j == best:
                continue
            new_cost = best_cost + float(dists[k])
            if new_cost + 1e-12 < cost[j] and _segment_clear(px, py, xs[j], ys[j], discs):
                children[parent[j]].remove(j)
                parent[j] = node
                children[node].append(j)
                delta = new_cost - cost[j]
                stack = [j]
                while stack:
                    m = stack.pop()
                    cost[m] += delta
                    stack.extend(children[m])

        gd = math.hypot(dest[0] - px, dest[1] - py)
        if gd <= eta and _segment_clear(px, py, dest[0], dest[1], discs):
            if goal_parent < 0 or cost[node] + gd < cost[goal_parent] + math.hypot(
                    dest[0] - xs[goal_parent], dest[1] - ys[goal_parent]):
                goal_parent = node

    if goal_parent < 0:
        raise PlanningError(
            f"no path from {src} to {dest} after {params.max_iters} iterations",
            params.max_iters)

    waypoints = [tuple(dest)]
    walk = goal_parent
    while walk >= 0:
        waypoints.append((float(xs[walk]), float(ys[walk])))
        walk = int(parent[walk])
    waypoints.reverse()
    path = Path(tuple(waypoints))
    if return_tree:
        tree = [PlanNode((float(xs[i]), float(ys[i])), int(parent[i]), float(cost[i]))
                for i in range(n)]
        return path, tree
    return path


def interpolate(path: Path, spacing: float) -> Path:
    """Resample a path so consecutive points are at most `spacing` apart,
    always keeping the original vertices (geometry is unchanged)."""
    _require_finite("spacing", spacing)
    if spacing <= 0.0:
        raise InvalidInputError(f"spacing must be > 0, got {spacing}")
    pts = path.points
    if len(pts) <= 1:
        return Path(tuple(pts))
    out: list[Vec2] = [pts[0]]
    for (ax, ay), (bx, by) in zip(pts, pts[1:]):
        seg = math.hypot(bx - ax, by - ay)
        if seg <= 1e-12:
            continue
        k = 1
        while k * spacing < seg - 1e-9:
            t = k * spacing / seg
            out.append((ax + t * (bx - ax), ay + t * (by - ay)))
            k += 1
        out.append((bx, by))
    return Path(tuple(out))
