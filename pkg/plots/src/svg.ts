/**
 * Hand-rolled SVG chart primitives: line panels (optionally stacked),
 * grouped bars, and an equal-aspect plane view.  No drawing dependencies;
 * every builder returns the SVG document as a string.
 */

export function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function fmtNum(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1000) return v.toFixed(0);
  if (a >= 10) return String(Math.round(v * 10) / 10);
  if (a >= 0.01) return String(Math.round(v * 1000) / 1000);
  return v.toExponential(1);
}

export function niceTicks(min: number, max: number, count: number): number[] {
  const range = max - min || 1;
  const rough = range / count;
  const mag = Math.pow(10, Math.floor(Math.log10(rough)));
  const step = [1, 2, 5, 10].map((m) => m * mag).find((n) => n >= rough) ?? rough;
  const ticks: number[] = [];
  for (let v = Math.ceil(min / step) * step; v <= max + step * 0.01; v += step) {
    ticks.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return ticks;
}

export interface Series {
  xs: number[];
  ys: number[];
  color: string;
  width?: number;
  opacity?: number;
  dash?: string;
}

export interface HLine {
  value: number;
  color: string;
  label: string;
  dash?: string;
}

export interface LegendEntry {
  color: string;
  label: string;
  dash?: string;
}

export interface Flag {
  x: number;
  y: number;
}

export interface LinePanel {
  title: string;
  yLabel: string;
  series: Series[];
  hLines?: HLine[];
  legend?: LegendEntry[];
  /** Red markers for flagged samples (e.g. threshold crossings). */
  flags?: Flag[];
  yMin?: number;
  yMax?: number;
  /** Rendered centered when there is nothing to plot. */
  note?: string;
}

const W = 720;
const ML = 58;
const MR = 16;
const PANEL_H = 190;
const PANEL_TOP = 20;
const PANEL_BOTTOM = 30;
const TITLE_H = 26;
const X_AXIS_H = 16;

function svgOpen(width: number, height: number): string {
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}" ` +
    `font-family="Helvetica, Arial, sans-serif">\n` +
    `<rect width="${width}" height="${height}" fill="#fff"/>\n`
  );
}

function legendBox(entries: LegendEntry[], xRight: number, yTop: number): string {
  if (entries.length === 0) return "";
  const w = Math.max(...entries.map((e) => e.label.length)) * 4.6 + 26;
  const h = entries.length * 11 + 5;
  const x0 = xRight - w;
  let s = `<rect x="${x0}" y="${yTop}" width="${w}" height="${h}" rx="2" fill="white" fill-opacity="0.85" stroke="#ddd" stroke-width="0.5"/>\n`;
  entries.forEach((e, i) => {
    const y = yTop + 9 + i * 11;
    s += `<line x1="${x0 + 4}" y1="${y}" x2="${x0 + 18}" y2="${y}" stroke="${e.color}" stroke-width="1.5" ${e.dash ? `stroke-dasharray="${e.dash}"` : ""}/>\n`;
    s += `<text x="${x0 + 22}" y="${y + 2.5}" font-size="6.5" fill="#444">${esc(e.label)}</text>\n`;
  });
  return s;
}

/** Render one line panel into a <g> at the given vertical offset. */
function renderPanel(p: LinePanel, yOff: number, xTicksWanted: boolean, clipId: string): string {
  const pw = W - ML - MR;
  const ph = PANEL_H - PANEL_TOP - PANEL_BOTTOM;
  const top = PANEL_TOP;
  let s = `<g transform="translate(0,${yOff})">\n`;
  s += `<text x="${ML}" y="${top - 7}" font-size="9" font-weight="600" fill="#222">${esc(p.title)}</text>\n`;

  if (p.series.length === 0) {
    s += `<rect x="${ML}" y="${top}" width="${pw}" height="${ph}" fill="none" stroke="#ccc" stroke-width="0.7"/>\n`;
    s += `<text x="${ML + pw / 2}" y="${top + ph / 2}" text-anchor="middle" font-size="8" fill="#999">${esc(p.note ?? "no data")}</text>\n`;
    s += `</g>\n`;
    return s;
  }

  // Ranges via explicit loops: series from full-length runs are far too
  // long to spread into Math.min/Math.max.
  let xMin = Infinity;
  let xMax = -Infinity;
  let yDataLo = Infinity;
  let yDataHi = -Infinity;
  for (const sr of p.series) {
    for (const x of sr.xs) {
      if (x < xMin) xMin = x;
      if (x > xMax) xMax = x;
    }
    for (const y of sr.ys) {
      if (y < yDataLo) yDataLo = y;
      if (y > yDataHi) yDataHi = y;
    }
  }
  for (const h of p.hLines ?? []) {
    if (h.value < yDataLo) yDataLo = h.value;
    if (h.value > yDataHi) yDataHi = h.value;
  }
  const loRaw = p.yMin ?? yDataLo;
  const hiRaw = p.yMax ?? yDataHi;
  const pad = (hiRaw - loRaw || 1) * 0.08;
  const lo = p.yMin ?? loRaw - pad;
  const hi = p.yMax ?? hiRaw + pad;
  const xOf = (v: number) => ML + ((v - xMin) / (xMax - xMin || 1)) * pw;
  const yOf = (v: number) => top + ph - ((v - lo) / (hi - lo || 1)) * ph;

  s += `<defs><clipPath id="${clipId}"><rect x="${ML}" y="${top}" width="${pw}" height="${ph}"/></clipPath></defs>\n`;

  const yTicks = niceTicks(lo, hi, 4);
  for (const v of yTicks) {
    const y = yOf(v).toFixed(1);
    s += `<line x1="${ML}" y1="${y}" x2="${ML + pw}" y2="${y}" stroke="#eee" stroke-width="0.5"/>\n`;
    s += `<line x1="${ML - 3}" y1="${y}" x2="${ML}" y2="${y}" stroke="#333" stroke-width="0.5"/>\n`;
    s += `<text x="${ML - 5}" y="${(yOf(v) + 2.5).toFixed(1)}" text-anchor="end" font-size="6.5" fill="#555">${esc(fmtNum(v))}</text>\n`;
  }

  for (const hl of p.hLines ?? []) {
    const y = yOf(hl.value).toFixed(1);
    s += `<line class="hline" clip-path="url(#${clipId})" x1="${ML}" y1="${y}" x2="${ML + pw}" y2="${y}" stroke="${hl.color}" stroke-width="1" stroke-dasharray="${hl.dash ?? "6,3"}"/>\n`;
  }

  for (const sr of p.series) {
    const pts = sr.xs.map((x, i) => `${xOf(x).toFixed(1)},${yOf(sr.ys[i]!).toFixed(1)}`).join(" ");
    s += `<polyline class="series" clip-path="url(#${clipId})" fill="none" stroke="${sr.color}" stroke-width="${sr.width ?? 1}" opacity="${sr.opacity ?? 1}" ${sr.dash ? `stroke-dasharray="${sr.dash}"` : ""} points="${pts}"/>\n`;
  }

  for (const f of p.flags ?? []) {
    s += `<circle class="flag" cx="${xOf(f.x).toFixed(1)}" cy="${yOf(f.y).toFixed(1)}" r="2.2" fill="none" stroke="#d00000" stroke-width="1"/>\n`;
  }

  s += `<line x1="${ML}" y1="${top}" x2="${ML}" y2="${top + ph}" stroke="#333" stroke-width="0.7"/>\n`;
  s += `<line x1="${ML}" y1="${top + ph}" x2="${ML + pw}" y2="${top + ph}" stroke="#333" stroke-width="0.7"/>\n`;

  const xTicks = niceTicks(xMin, xMax, 7);
  for (const t of xTicks) {
    const x = xOf(t).toFixed(1);
    s += `<line x1="${x}" y1="${top + ph}" x2="${x}" y2="${top + ph + 3}" stroke="#333" stroke-width="0.5"/>\n`;
    if (xTicksWanted) {
      s += `<text x="${x}" y="${top + ph + 12}" text-anchor="middle" font-size="6.5" fill="#555">${esc(fmtNum(t))}</text>\n`;
    }
  }

  s += `<text x="10" y="${top + ph / 2}" text-anchor="middle" font-size="7.5" fill="#444" transform="rotate(-90,10,${top + ph / 2})">${esc(p.yLabel)}</text>\n`;
  s += legendBox(p.legend ?? [], ML + pw - 4, top + 4);
  s += `</g>\n`;
  return s;
}

/** One or more line panels stacked vertically over a shared x meaning. */
export function lineChart(title: string, xLabel: string, panels: LinePanel[]): string {
  const height = TITLE_H + panels.length * PANEL_H + X_AXIS_H;
  let s = svgOpen(W, height);
  s += `<text x="${ML}" y="16" font-size="11" font-weight="600" fill="#222">${esc(title)}</text>\n`;
  panels.forEach((p, i) => {
    s += renderPanel(p, TITLE_H + i * PANEL_H, i === panels.length - 1, `clip${i}`);
  });
  s += `<text x="${ML + (W - ML - MR) / 2}" y="${height - 4}" text-anchor="middle" font-size="8" fill="#444">${esc(xLabel)}</text>\n`;
  s += `</svg>\n`;
  return s;
}

// ---------------------------------------------------------------------------
// Grouped bars
// ---------------------------------------------------------------------------

export interface BarGroup {
  label: string;
  values: number[];
}

export interface BarChartOpts {
  title: string;
  yLabel: string;
  groups: BarGroup[];
  seriesLabels: string[];
  colors: string[];
}

export function barChart(opts: BarChartOpts): string {
  const H = 280;
  const mt = 34;
  const mb = 36;
  const pw = W - ML - MR;
  const ph = H - mt - mb;
  const hi = Math.max(...opts.groups.flatMap((g) => g.values)) * 1.12 || 1;
  const yOf = (v: number) => mt + ph - (v / hi) * ph;

  let s = svgOpen(W, H);
  s += `<text x="${ML}" y="16" font-size="11" font-weight="600" fill="#222">${esc(opts.title)}</text>\n`;

  for (const v of niceTicks(0, hi, 5)) {
    const y = yOf(v).toFixed(1);
    s += `<line x1="${ML}" y1="${y}" x2="${ML + pw}" y2="${y}" stroke="#eee" stroke-width="0.5"/>\n`;
    s += `<text x="${ML - 5}" y="${(yOf(v) + 2.5).toFixed(1)}" text-anchor="end" font-size="6.5" fill="#555">${esc(fmtNum(v))}</text>\n`;
  }

  const n = opts.seriesLabels.length;
  const groupW = pw / opts.groups.length;
  const barW = Math.min(28, (groupW * 0.7) / n);
  opts.groups.forEach((g, gi) => {
    const cx = ML + groupW * (gi + 0.5);
    g.values.forEach((v, si) => {
      const x = cx + (si - n / 2) * barW;
      const y = yOf(v);
      const color = opts.colors[si % opts.colors.length]!;
      s += `<rect class="bar" x="${x.toFixed(1)}" y="${y.toFixed(1)}" width="${(barW - 2).toFixed(1)}" height="${(mt + ph - y).toFixed(1)}" fill="${color}" opacity="${0.85 - si * 0.15}"/>\n`;
      s += `<text x="${(x + barW / 2 - 1).toFixed(1)}" y="${(y - 3).toFixed(1)}" text-anchor="middle" font-size="5.5" fill="#555">${esc(fmtNum(v))}</text>\n`;
    });
    s += `<text x="${cx.toFixed(1)}" y="${mt + ph + 12}" text-anchor="middle" font-size="7.5" fill="#333">${esc(g.label)}</text>\n`;
  });

  s += `<line x1="${ML}" y1="${mt}" x2="${ML}" y2="${mt + ph}" stroke="#333" stroke-width="0.7"/>\n`;
  s += `<line x1="${ML}" y1="${mt + ph}" x2="${ML + pw}" y2="${mt + ph}" stroke="#333" stroke-width="0.7"/>\n`;
  s += `<text x="10" y="${mt + ph / 2}" text-anchor="middle" font-size="7.5" fill="#444" transform="rotate(-90,10,${mt + ph / 2})">${esc(opts.yLabel)}</text>\n`;
  s += legendBox(
    opts.seriesLabels.map((label, i) => ({ label, color: opts.colors[i % opts.colors.length]! })),
    ML + pw - 4,
    mt + 4,
  );
  s += `</svg>\n`;
  return s;
}

// ---------------------------------------------------------------------------
// Equal-aspect plane view
// ---------------------------------------------------------------------------

export interface PlanePath {
  xs: number[];
  ys: number[];
  color: string;
  width?: number;
  opacity?: number;
}

export interface PlaneMark {
  x: number;
  y: number;
  color: string;
  kind: "start" | "dest";
}

export interface PlaneChartOpts {
  title: string;
  subtitle?: string;
  arena: { xmin: number; ymin: number; xmax: number; ymax: number };
  obstacles: { x: number; y: number; radius: number }[];
  paths: PlanePath[];
  marks: PlaneMark[];
  legend: LegendEntry[];
}

export function planeChart(opts: PlaneChartOpts): string {
  const { arena } = opts;
  const aw = arena.xmax - arena.xmin;
  const ah = arena.ymax - arena.ymin;
  const mt = 40;
  const mb = 28;
  const mlr = 44;
  const maxPlane = 560;
  const scale = Math.min(maxPlane / aw, maxPlane / ah);
  const pw = aw * scale;
  const ph = ah * scale;
  const width = pw + 2 * mlr;
  const height = ph + mt + mb;
  const xOf = (v: number) => mlr + (v - arena.xmin) * scale;
  const yOf = (v: number) => mt + ph - (v - arena.ymin) * scale;

  let s = svgOpen(width, height);
  s += `<text x="${mlr}" y="16" font-size="11" font-weight="600" fill="#222">${esc(opts.title)}</text>\n`;
  if (opts.subtitle) {
    s += `<text x="${mlr}" y="27" font-size="7" fill="#888">${esc(opts.subtitle)}</text>\n`;
  }
  s += `<rect x="${mlr}" y="${mt}" width="${pw.toFixed(1)}" height="${ph.toFixed(1)}" fill="#fcfcfc" stroke="#333" stroke-width="0.7"/>\n`;

  for (const v of niceTicks(arena.xmin, arena.xmax, 8)) {
    const x = xOf(v).toFixed(1);
    s += `<line x1="${x}" y1="${mt}" x2="${x}" y2="${(mt + ph).toFixed(1)}" stroke="#eee" stroke-width="0.5"/>\n`;
    s += `<text x="${x}" y="${(mt + ph + 10).toFixed(1)}" text-anchor="middle" font-size="6.5" fill="#555">${esc(fmtNum(v))}</text>\n`;
  }
  for (const v of niceTicks(arena.ymin, arena.ymax, 8)) {
    const y = yOf(v).toFixed(1);
    s += `<line x1="${mlr}" y1="${y}" x2="${(mlr + pw).toFixed(1)}" y2="${y}" stroke="#eee" stroke-width="0.5"/>\n`;
    s += `<text x="${mlr - 4}" y="${(yOf(v) + 2.5).toFixed(1)}" text-anchor="end" font-size="6.5" fill="#555">${esc(fmtNum(v))}</text>\n`;
  }

  for (const o of opts.obstacles) {
    s += `<circle class="obstacle" cx="${xOf(o.x).toFixed(1)}" cy="${yOf(o.y).toFixed(1)}" r="${(o.radius * scale).toFixed(1)}" fill="#9a9a9a" fill-opacity="0.4" stroke="#666" stroke-width="0.7"/>\n`;
  }

  for (const p of opts.paths) {
    const pts = p.xs.map((x, i) => `${xOf(x).toFixed(1)},${yOf(p.ys[i]!).toFixed(1)}`).join(" ");
    s += `<polyline class="path" fill="none" stroke="${p.color}" stroke-width="${p.width ?? 1}" opacity="${p.opacity ?? 1}" points="${pts}"/>\n`;
  }

  for (const m of opts.marks) {
    const x = xOf(m.x);
    const y = yOf(m.y);
    if (m.kind === "start") {
      s += `<circle class="mark-start" cx="${x.toFixed(1)}" cy="${y.toFixed(1)}" r="2.5" fill="${m.color}"/>\n`;
    } else {
      s += `<g class="mark-dest" stroke="${m.color}" stroke-width="1.2">` +
        `<line x1="${(x - 3).toFixed(1)}" y1="${(y - 3).toFixed(1)}" x2="${(x + 3).toFixed(1)}" y2="${(y + 3).toFixed(1)}"/>` +
        `<line x1="${(x - 3).toFixed(1)}" y1="${(y + 3).toFixed(1)}" x2="${(x + 3).toFixed(1)}" y2="${(y - 3).toFixed(1)}"/>` +
        `</g>\n`;
    }
  }

  s += legendBox(opts.legend, mlr + pw - 4, mt + 4);
  s += `<text x="${(mlr + pw / 2).toFixed(1)}" y="${height - 4}" text-anchor="middle" font-size="8" fill="#444">x (m)</text>\n`;
  s += `<text x="10" y="${(mt + ph / 2).toFixed(1)}" text-anchor="middle" font-size="8" fill="#444" transform="rotate(-90,10,${(mt + ph / 2).toFixed(1)})">y (m)</text>\n`;
  s += `</svg>\n`;
  return s;
}
