/**
 * The four figure kinds rendered from the solver's CSV artifacts:
 *
 *   snapshot      heatmap (2d) or profile line (1d) with the domain mask
 *                 shown by cell coverage
 *   levelsets     level-set bands [m-, m+] per level c against time
 *   metrics       m+ - m-, Hausdorff distance and profile distance vs time
 *   stability_fit log-log scatter of (path_dist, sol_dist) with the fitted
 *                 line and slope annotation
 *
 * Rendering is strictly read-only over the CSVs; the only computation is
 * the redundant least-squares cross-check of the stability slope.
 */

import { readMetrics, readSnapshot, readStability } from "./csv.js";
import { logLogFit } from "./fit.js";
import { DEFAULT_FRAME, Svg, colorMap, shortNum } from "./svg.js";

const SERIES_COLORS = ["#3b528b", "#21918c", "#5ec962", "#d95f02", "#7570b3"];

export function renderSnapshot(path: string): string {
  const snap = readSnapshot(path);
  const svg = new Svg();
  const a = svg.plotArea;
  const uMin = Math.min(...snap.u);
  const uMax = Math.max(...snap.u);
  const span = uMax - uMin || 1;

  if (snap.dim === 1) {
    const { sx, sy } = svg.axes(
      [Math.min(...snap.x), Math.max(...snap.x)],
      [uMin - 0.05 * span, uMax + 0.05 * span],
      { x: "x", y: "u", title: "snapshot" },
    );
    const pts = snap.x.map(
      (x, i) => [sx(x), sy(snap.u[i])] as [number, number],
    );
    svg.polyline(pts, SERIES_COLORS[0]);
    return svg.render();
  }

  const xs = Array.from(new Set(snap.x)).sort((p, q) => p - q);
  const ys = Array.from(new Set(snap.y)).sort((p, q) => p - q);
  const hx = xs.length > 1 ? xs[1] - xs[0] : 1;
  const hy = ys.length > 1 ? ys[1] - ys[0] : 1;
  const { sx, sy } = svg.axes(
    [xs[0] - hx / 2, xs[xs.length - 1] + hx / 2],
    [ys[0] - hy / 2, ys[ys.length - 1] + hy / 2],
    { x: "x", y: "y", title: "snapshot" },
  );
  const wPx = Math.abs(sx(xs[0] + hx) - sx(xs[0]));
  const hPx = Math.abs(sy(ys[0] + hy) - sy(ys[0]));
  for (let i = 0; i < snap.u.length; i++) {
    const t = (snap.u[i] - uMin) / span;
    svg.rect(
      sx(snap.x[i] - hx / 2),
      sy(snap.y[i] + hy / 2),
      wPx + 0.5,
      hPx + 0.5,
      colorMap(t),
    );
  }
  svg.text(a.x1 - 4, 16, `u in [${shortNum(uMin)}, ${shortNum(uMax)}]`, {
    anchor: "end",
    size: 11,
  });
  return svg.render();
}

export function renderLevelsets(path: string): string {
  const rows = readMetrics(path);
  const levels = Array.from(new Set(rows.map((r) => r.c))).sort(
    (p, q) => p - q,
  );
  const svg = new Svg();
  const ts = rows.map((r) => r.t);
  const lo = Math.min(...rows.map((r) => r.mMinus));
  const hi = Math.max(...rows.map((r) => r.mPlus));
  const pad = 0.05 * (hi - lo || 1);
  const { sx, sy } = svg.axes(
    [Math.min(...ts), Math.max(...ts)],
    [lo - pad, hi + pad],
    { x: "t", y: "level-set extent (x_n)", title: "level sets" },
  );
  levels.forEach((c, k) => {
    const series = rows
      .filter((r) => r.c === c)
      .sort((p, q) => p.t - q.t);
    const color = SERIES_COLORS[k % SERIES_COLORS.length];
    const upper = series.map(
      (r) => [sx(r.t), sy(r.mPlus)] as [number, number],
    );
    const lower = series
      .slice()
      .reverse()
      .map((r) => [sx(r.t), sy(r.mMinus)] as [number, number]);
    svg.polygon([...upper, ...lower], color, 0.25);
    svg.polyline(upper, color, 1);
    svg.polyline(
      series.map((r) => [sx(r.t), sy(r.mMinus)] as [number, number]),
      color,
      1,
    );
    svg.text(
      sx(series[series.length - 1].t),
      sy(series[series.length - 1].mPlus) - 4,
      `c=${shortNum(c)}`,
      { anchor: "end", size: 10 },
    );
  });
  return svg.render();
}

export function renderMetrics(path: string): string {
  const rows = readMetrics(path);
  const levels = Array.from(new Set(rows.map((r) => r.c))).sort(
    (p, q) => p - q,
  );
  const svg = new Svg();
  const ts = rows.map((r) => r.t);
  const widths = rows.map((r) => r.mPlus - r.mMinus);
  const finite = (v: number) => Number.isFinite(v);
  const vals = [
    ...widths,
    ...rows.map((r) => r.hausdorff).filter(finite),
    ...rows.map((r) => r.profileDist).filter(finite),
  ];
  const { sx, sy } = svg.axes(
    [Math.min(...ts), Math.max(...ts)],
    [0, Math.max(...vals) * 1.1 || 1],
    { x: "t", y: "width / distance", title: "level metrics" },
  );
  levels.forEach((c, k) => {
    const series = rows.filter((r) => r.c === c).sort((p, q) => p.t - q.t);
    const color = SERIES_COLORS[k % SERIES_COLORS.length];
    svg.polyline(
      series.map((r) => [sx(r.t), sy(r.mPlus - r.mMinus)] as [number, number]),
      color,
    );
    const haus = series.filter((r) => finite(r.hausdorff));
    svg.polyline(
      haus.map((r) => [sx(r.t), sy(r.hausdorff)] as [number, number]),
      color,
      0.8,
    );
  });
  const prof = rows
    .filter((r, i) => rows.findIndex((q) => q.t === r.t) === i)
    .sort((p, q) => p.t - q.t)
    .filter((r) => finite(r.profileDist));
  svg.polyline(
    prof.map((r) => [sx(r.t), sy(r.profileDist)] as [number, number]),
    "black",
    2,
  );
  svg.text(svg.plotArea.x1 - 4, 16,
    "solid: m+ - m-; thin: Hausdorff; black: profile dist",
    { anchor: "end", size: 10 });
  return svg.render();
}

export interface StabilityRender {
  svg: string;
  slope: number;
  intercept: number;
}

export function renderStabilityFit(path: string): StabilityRender {
  const rows = readStability(path);
  const fit = logLogFit(rows);
  const svg = new Svg();
  const xs = rows.map((r) => r.pathDist);
  const ys = rows.map((r) => r.solDist);
  const { sx, sy } = svg.axes(
    [Math.min(...xs) / 1.3, Math.max(...xs) * 1.3],
    [Math.min(...ys) / 1.3, Math.max(...ys) * 1.3],
    { x: "path distance", y: "solution distance", title: "path stability" },
    true,
  );
  for (const r of rows) {
    svg.circle(sx(r.pathDist), sy(r.solDist), 3.5, SERIES_COLORS[0]);
  }
  const xLo = Math.min(...xs);
  const xHi = Math.max(...xs);
  const yAt = (x: number) => Math.exp(fit.intercept + fit.slope * Math.log(x));
  svg.polyline(
    [
      [sx(xLo), sy(yAt(xLo))],
      [sx(xHi), sy(yAt(xHi))],
    ],
    "#d95f02",
    1.5,
  );
  svg.text(svg.plotArea.x0 + 10, 40, `slope = ${fit.slope.toFixed(12)}`, {
    anchor: "start",
  });
  return { svg: svg.render(), slope: fit.slope, intercept: fit.intercept };
}

export type FigureKind = "snapshot" | "levelsets" | "metrics" | "stability_fit";

export function render(kind: FigureKind, input: string): string {
  switch (kind) {
    case "snapshot":
      return renderSnapshot(input);
    case "levelsets":
      return renderLevelsets(input);
    case "metrics":
      return renderMetrics(input);
    case "stability_fit":
      return renderStabilityFit(input).svg;
    default:
      throw new Error(`unknown figure kind: ${kind}`);
  }
}
