/** Minimal deterministic SVG emitter: scales, axes, marks. No DOM. */

export interface Frame {
  width: number;
  height: number;
  margin: { top: number; right: number; bottom: number; left: number };
}

export const DEFAULT_FRAME: Frame = {
  width: 640,
  height: 420,
  margin: { top: 28, right: 24, bottom: 44, left: 60 },
};

export function linearScale(
  domain: [number, number],
  range: [number, number],
): (v: number) => number {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  return (v: number) => r0 + ((v - d0) / span) * (r1 - r0);
}

export function logScale(
  domain: [number, number],
  range: [number, number],
): (v: number) => number {
  const inner = linearScale([Math.log10(domain[0]), Math.log10(domain[1])], range);
  return (v: number) => inner(Math.log10(v));
}

const fmt = (v: number) => (Object.is(v, -0) ? "0" : v.toFixed(3));

export function ticks(lo: number, hi: number, n = 5): number[] {
  const span = hi - lo || 1;
  const step = Math.pow(10, Math.floor(Math.log10(span / n)));
  const err = (span / n) / step;
  const mult = err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1;
  const s = step * mult;
  const start = Math.ceil(lo / s) * s;
  const out: number[] = [];
  for (let v = start; v <= hi + 1e-12; v += s) out.push(v);
  return out;
}

/** five-stop blue-to-yellow color map on [0, 1] */
export function colorMap(t: number): string {
  const stops: [number, number, number][] = [
    [68, 1, 84],
    [59, 82, 139],
    [33, 145, 140],
    [94, 201, 98],
    [253, 231, 37],
  ];
  const x = Math.min(Math.max(t, 0), 1) * (stops.length - 1);
  const i = Math.min(Math.floor(x), stops.length - 2);
  const f = x - i;
  const mix = stops[i].map((a, k) => Math.round(a + f * (stops[i + 1][k] - a)));
  return `rgb(${mix[0]},${mix[1]},${mix[2]})`;
}

export class Svg {
  private parts: string[] = [];

  constructor(public frame: Frame = DEFAULT_FRAME) {
    this.parts.push(
      `<svg xmlns="http://www.w3.org/2000/svg" width="${frame.width}" ` +
        `height="${frame.height}" viewBox="0 0 ${frame.width} ${frame.height}">`,
      `<rect width="${frame.width}" height="${frame.height}" fill="white"/>`,
    );
  }

  get plotArea(): { x0: number; x1: number; y0: number; y1: number } {
    const { width, height, margin } = this.frame;
    return {
      x0: margin.left,
      x1: width - margin.right,
      y0: height - margin.bottom, // svg y grows downward; y0 = bottom
      y1: margin.top,
    };
  }

  rect(x: number, y: number, w: number, h: number, fill: string): void {
    this.parts.push(
      `<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(w)}" height="${fmt(h)}" fill="${fill}"/>`,
    );
  }

  circle(x: number, y: number, r: number, fill: string): void {
    this.parts.push(`<circle cx="${fmt(x)}" cy="${fmt(y)}" r="${fmt(r)}" fill="${fill}"/>`);
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke: string,
       width = 1, dash?: string): void {
    const d = dash ? ` stroke-dasharray="${dash}"` : "";
    this.parts.push(
      `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" ` +
        `stroke="${stroke}" stroke-width="${width}"${d}/>`,
    );
  }

  polyline(pts: [number, number][], stroke: string, width = 1.5): void {
    const p = pts.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
    this.parts.push(
      `<polyline points="${p}" fill="none" stroke="${stroke}" stroke-width="${width}"/>`,
    );
  }

  polygon(pts: [number, number][], fill: string, opacity = 0.3): void {
    const p = pts.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
    this.parts.push(`<polygon points="${p}" fill="${fill}" opacity="${opacity}"/>`);
  }

  text(x: number, y: number, s: string, opts: { anchor?: string; size?: number } = {}): void {
    const anchor = opts.anchor ?? "middle";
    const size = opts.size ?? 12;
    this.parts.push(
      `<text x="${fmt(x)}" y="${fmt(y)}" font-family="sans-serif" ` +
        `font-size="${size}" text-anchor="${anchor}">${s}</text>`,
    );
  }

  axes(
    xDomain: [number, number],
    yDomain: [number, number],
    labels: { x: string; y: string; title?: string },
    log = false,
  ): { sx: (v: number) => number; sy: (v: number) => number } {
    const a = this.plotArea;
    const sx = log
      ? logScale(xDomain, [a.x0, a.x1])
      : linearScale(xDomain, [a.x0, a.x1]);
    const sy = log
      ? logScale(yDomain, [a.y0, a.y1])
      : linearScale(yDomain, [a.y0, a.y1]);
    this.line(a.x0, a.y0, a.x1, a.y0, "black");
    this.line(a.x0, a.y0, a.x0, a.y1, "black");
    const xt = log
      ? logTicks(xDomain)
      : ticks(xDomain[0], xDomain[1]);
    const yt = log ? logTicks(yDomain) : ticks(yDomain[0], yDomain[1]);
    for (const v of xt) {
      const px = sx(v);
      this.line(px, a.y0, px, a.y0 + 5, "black");
      this.text(px, a.y0 + 18, shortNum(v));
    }
    for (const v of yt) {
      const py = sy(v);
      this.line(a.x0 - 5, py, a.x0, py, "black");
      this.text(a.x0 - 8, py + 4, shortNum(v), { anchor: "end" });
    }
    this.text((a.x0 + a.x1) / 2, this.frame.height - 8, labels.x);
    this.parts.push(
      `<text x="14" y="${(a.y0 + a.y1) / 2}" font-family="sans-serif" font-size="12" ` +
        `text-anchor="middle" transform="rotate(-90 14 ${(a.y0 + a.y1) / 2})">${labels.y}</text>`,
    );
    if (labels.title) {
      this.text((a.x0 + a.x1) / 2, 16, labels.title, { size: 14 });
    }
    return { sx, sy };
  }

  render(): string {
    return this.parts.join("\n") + "\n</svg>\n";
  }
}

function logTicks(domain: [number, number]): number[] {
  const lo = Math.ceil(Math.log10(domain[0]) - 1e-12);
  const hi = Math.floor(Math.log10(domain[1]) + 1e-12);
  const out: number[] = [];
  for (let e = lo; e <= hi; e++) out.push(Math.pow(10, e));
  if (out.length === 0) out.push(domain[0], domain[1]);
  return out;
}

export function shortNum(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 0.01 && a < 10000) {
    return Number(v.toPrecision(3)).toString();
  }
  return v.toExponential(1);
}
