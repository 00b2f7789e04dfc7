/** Independent least-squares fit of log(sol_dist) against log(path_dist),
 * cross-checking the solver's reported stability slope. */

import { StabilityRow } from "./csv.js";

export interface LogLogFit {
  slope: number;
  intercept: number;
}

export function logLogFit(rows: StabilityRow[]): LogLogFit {
  if (rows.length < 2) throw new Error("need at least two points to fit");
  const xs = rows.map((r) => Math.log(r.pathDist));
  const ys = rows.map((r) => Math.log(r.solDist));
  if (xs.some((v) => !Number.isFinite(v)) || ys.some((v) => !Number.isFinite(v))) {
    throw new Error("nonpositive distances in stability data");
  }
  const n = xs.length;
  const mx = xs.reduce((a, b) => a + b, 0) / n;
  const my = ys.reduce((a, b) => a + b, 0) / n;
  let sxx = 0;
  let sxy = 0;
  for (let i = 0; i < n; i++) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  const slope = sxy / sxx;
  return { slope, intercept: my - slope * mx };
}
