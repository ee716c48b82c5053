/**
 * The five figure builders: trajectory overview, closest-neighbour
 * separation, follower slot distances, per-robot speed traces, and the
 * time-to-goal comparison.  All are pure functions from parsed export
 * data to an SVG string plus any warnings.
 */

import {
  DataError,
  MetricsDoc,
  RobotTrack,
  colorMap,
  formationOrder,
} from "./data.js";
import {
  Flag,
  HLine,
  LegendEntry,
  LinePanel,
  Series,
  barChart,
  lineChart,
  planeChart,
} from "./svg.js";

export interface ChartResult {
  svg: string;
  warnings: string[];
}

const THRESHOLD_COLOR = "#d00000";
const SLOT_COLOR = "#888";

function byFormation(tracks: RobotTrack[]): Map<string, RobotTrack[]> {
  const map = new Map<string, RobotTrack[]>();
  for (const t of tracks) {
    const list = map.get(t.formationId);
    if (list) list.push(t);
    else map.set(t.formationId, [t]);
  }
  return map;
}

// ---------------------------------------------------------------------------
// 1. Trajectory overview
// ---------------------------------------------------------------------------

export function trajectoriesChart(tracks: RobotTrack[], metrics?: MetricsDoc): ChartResult {
  if (tracks.length === 0) throw new DataError("trajectories file holds no rows");
  const order = formationOrder(tracks);
  const colors = colorMap(order);
  const groups = byFormation(tracks);

  let arena;
  if (metrics) {
    arena = metrics.arena;
  } else {
    let xmin = Infinity;
    let xmax = -Infinity;
    let ymin = Infinity;
    let ymax = -Infinity;
    for (const t of tracks) {
      for (const x of t.xs) {
        if (x < xmin) xmin = x;
        if (x > xmax) xmax = x;
      }
      for (const y of t.ys) {
        if (y < ymin) ymin = y;
        if (y > ymax) ymax = y;
      }
    }
    const padX = (xmax - xmin) * 0.05 + 0.5;
    const padY = (ymax - ymin) * 0.05 + 0.5;
    arena = { xmin: xmin - padX, ymin: ymin - padY, xmax: xmax + padX, ymax: ymax + padY };
  }

  const paths = [];
  const marks = [];
  for (const fid of order) {
    const color = colors.get(fid)!;
    for (const t of groups.get(fid)!) {
      const leader = t.role === "leader";
      paths.push({
        xs: t.xs,
        ys: t.ys,
        color,
        width: leader ? 1.4 : 0.7,
        opacity: leader ? 1 : 0.45,
      });
      if (leader) {
        marks.push({ x: t.xs[0]!, y: t.ys[0]!, color, kind: "start" as const });
      }
    }
    const summary = metrics?.formations.find((f) => f.id === fid);
    if (summary) {
      marks.push({ x: summary.dest[0], y: summary.dest[1], color, kind: "dest" as const });
    }
  }

  const legend: LegendEntry[] = order.map((fid) => {
    const summary = metrics?.formations.find((f) => f.id === fid);
    return {
      color: colors.get(fid)!,
      label: summary ? `${fid} (${summary.robots} robots)` : fid,
    };
  });

  const subtitle = metrics
    ? `${metrics.scenario} · ${metrics.steps} steps · dot = start, cross = destination, grey disc = obstacle`
    : "dot = start, cross = destination";
  return {
    svg: planeChart({
      title: "Formation trajectories",
      subtitle,
      arena,
      obstacles: metrics?.obstacles ?? [],
      paths,
      marks,
      legend,
    }),
    warnings: [],
  };
}

// ---------------------------------------------------------------------------
// 2. Closest-neighbour separation
// ---------------------------------------------------------------------------

export function minDistanceChart(metrics: MetricsDoc): ChartResult {
  const warnings: string[] = [];
  const separation = metrics.minPairwiseSeparation;
  const panel: LinePanel = {
    title: "Separation to closest neighbour (centre distance minus both radii)",
    yLabel: "separation (m)",
    series: [],
  };

  if (!separation || metrics.formations.length < 2) {
    warnings.push(
      `scenario "${metrics.scenario}" has ${metrics.formations.length} formation(s); ` +
        "closest-neighbour distances need at least two — emitting an empty plot",
    );
    panel.note = "single formation: no neighbour distances";
  } else {
    const ids = metrics.formations.map((f) => f.id);
    const colors = colorMap(ids);
    const dt = metrics.sampleInterval;
    const flags: Flag[] = [];
    for (const fid of ids) {
      const ys = separation[fid];
      if (!ys) throw new DataError(`metrics document lacks a separation series for "${fid}"`);
      const xs = ys.map((_, i) => i * dt);
      panel.series.push({ xs, ys, color: colors.get(fid)!, width: 1 });
      ys.forEach((v, i) => {
        if (v < 0) flags.push({ x: i * dt, y: v });
      });
    }
    panel.hLines = [
      {
        value: 0,
        color: THRESHOLD_COLOR,
        label: "collision threshold",
        dash: "6,3",
      },
    ];
    panel.flags = flags;
    panel.legend = [
      ...ids.map((fid) => ({ color: colors.get(fid)!, label: fid })),
      { color: THRESHOLD_COLOR, label: "collision threshold (r_i + r_j)", dash: "6,3" },
    ];
    if (flags.length > 0) {
      warnings.push(`${flags.length} sample(s) below the collision threshold are flagged`);
    }
  }

  return {
    svg: lineChart(`Closest-neighbour separation — ${metrics.scenario}`, "time (s)", [panel]),
    warnings,
  };
}

// ---------------------------------------------------------------------------
// 3. Follower slot distances
// ---------------------------------------------------------------------------

export function followerDistanceChart(metrics: MetricsDoc): ChartResult {
  const warnings: string[] = [];
  const ids = metrics.formations.map((f) => f.id);
  const colors = colorMap(ids);
  const dt = metrics.sampleInterval;

  const panels: LinePanel[] = metrics.formations.map((f) => {
    const series = metrics.followerDistance[f.id] ?? [];
    const color = colors.get(f.id)!;
    const panel: LinePanel = {
      title: `${f.id} — ${series.length} follower(s)`,
      yLabel: "distance to leader (m)",
      series: series.map((ys, k): Series => ({
        xs: ys.map((_, i) => i * dt),
        ys,
        color,
        width: 0.8,
        opacity: 0.35 + (0.65 * (k + 1)) / series.length,
      })),
    };
    if (series.length === 0) {
      warnings.push(`formation "${f.id}" has no followers`);
      panel.note = "no followers";
      return panel;
    }
    const slots = [...new Set(f.rho)];
    panel.hLines = slots.map(
      (rho): HLine => ({ value: rho, color: SLOT_COLOR, label: "slot distance", dash: "4,3" }),
    );
    panel.legend = [
      { color, label: `${f.id} followers` },
      { color: SLOT_COLOR, label: "slot distance", dash: "4,3" },
    ];
    return panel;
  });

  return {
    svg: lineChart(`Follower distances — ${metrics.scenario}`, "time (s)", panels),
    warnings,
  };
}

// ---------------------------------------------------------------------------
// 4. Per-robot speed traces
// ---------------------------------------------------------------------------

export function velocitiesChart(tracks: RobotTrack[], metrics?: MetricsDoc): ChartResult {
  if (tracks.length === 0) throw new DataError("trajectories file holds no rows");
  const order = formationOrder(tracks);
  const colors = colorMap(order);
  const groups = byFormation(tracks);

  const panels: LinePanel[] = order.map((fid) => {
    const robots = groups.get(fid)!;
    const color = colors.get(fid)!;
    const series = robots.map((t): Series => {
      const leader = t.role === "leader";
      return {
        xs: t.times,
        ys: t.vs,
        color,
        width: leader ? 1.2 : 0.7,
        opacity: leader ? 1 : 0.45,
      };
    });
    const panel: LinePanel = {
      title: `${fid} — ${robots.length} robots`,
      yLabel: "linear speed (m/s)",
      series,
      legend: [
        { color, label: `${fid} leader` },
        { color, label: `${fid} followers (faded)` },
      ],
    };
    if (metrics) {
      panel.hLines = [
        { value: metrics.maxspeed, color: SLOT_COLOR, label: "cruise speed", dash: "4,3" },
      ];
      panel.legend!.push({ color: SLOT_COLOR, label: "cruise speed", dash: "4,3" });
    }
    return panel;
  });

  const title = metrics
    ? `Robot speeds — ${metrics.scenario}`
    : "Robot speeds";
  return { svg: lineChart(title, "time (s)", panels), warnings: [] };
}

// ---------------------------------------------------------------------------
// 5. Time-to-goal comparison
// ---------------------------------------------------------------------------

export function timeComparisonChart(
  base: MetricsDoc,
  variant: MetricsDoc,
): ChartResult {
  const baseIds = base.formations.map((f) => f.id);
  const variantIds = variant.formations.map((f) => f.id);
  const missing = baseIds.filter((id) => !variantIds.includes(id));
  const extra = variantIds.filter((id) => !baseIds.includes(id));
  if (missing.length > 0 || extra.length > 0) {
    const parts: string[] = [];
    if (missing.length > 0) parts.push(`missing from variant: ${missing.join(", ")}`);
    if (extra.length > 0) parts.push(`only in variant: ${extra.join(", ")}`);
    throw new DataError(`formation sets differ — ${parts.join("; ")}`);
  }

  const timeOf = (doc: MetricsDoc, id: string): number => {
    const t = doc.formations.find((f) => f.id === id)!.timeToGoal;
    if (t === null) {
      throw new DataError(
        `formation "${id}" in "${doc.scenario}" has no time_to_goal (run did not complete)`,
      );
    }
    return t;
  };

  const groups = baseIds.map((id) => ({
    label: id,
    values: [timeOf(base, id), timeOf(variant, id)],
  }));

  return {
    svg: barChart({
      title: `Time to goal — ${base.scenario} vs ${variant.scenario}`,
      yLabel: "time to goal (s)",
      groups,
      seriesLabels: [base.scenario, variant.scenario],
      colors: ["#4361ee", "#e63946"],
    }),
    warnings: [],
  };
}
