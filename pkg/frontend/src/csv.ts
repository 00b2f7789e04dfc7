/**
 * Readers for the solver's CSV artifacts.
 *
 * Schemas (first line is a `# config_sha256=...` comment):
 *   snapshot:  x[,y],u
 *   metrics:   t,c,m_minus,m_plus,hausdorff,profile_dist
 *   stability: path_dist,sol_dist
 */

import { readFileSync } from "node:fs";

export interface Table {
  columns: string[];
  rows: number[][];
  configHash: string | null;
}

export class SchemaError extends Error {}

export function readCsv(path: string): Table {
  const text = readFileSync(path, "utf8");
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  let configHash: string | null = null;
  let start = 0;
  while (start < lines.length && lines[start].startsWith("#")) {
    const m = lines[start].match(/config_sha256=(\S+)/);
    if (m) configHash = m[1];
    start += 1;
  }
  if (start >= lines.length) throw new SchemaError(`empty csv: ${path}`);
  const columns = lines[start].split(",").map((c) => c.trim());
  const rows: number[][] = [];
  for (const line of lines.slice(start + 1)) {
    const parts = line.split(",").map(Number);
    if (parts.length !== columns.length || parts.some(Number.isNaN)) {
      throw new SchemaError(
        `row does not match header ${columns.join(",")}: ${line}`,
      );
    }
    rows.push(parts);
  }
  return { columns, rows, configHash };
}

function requireColumns(t: Table, wanted: string[], path: string): void {
  for (const col of wanted) {
    if (!t.columns.includes(col)) {
      throw new SchemaError(`missing column '${col}' in ${path}`);
    }
  }
}

export interface Snapshot {
  dim: 1 | 2;
  x: number[];
  y: number[];
  u: number[];
  configHash: string | null;
}

export function readSnapshot(path: string): Snapshot {
  const t = readCsv(path);
  if (t.columns.join(",") === "x,u") {
    return {
      dim: 1,
      x: t.rows.map((r) => r[0]),
      y: [],
      u: t.rows.map((r) => r[1]),
      configHash: t.configHash,
    };
  }
  if (t.columns.join(",") === "x,y,u") {
    return {
      dim: 2,
      x: t.rows.map((r) => r[0]),
      y: t.rows.map((r) => r[1]),
      u: t.rows.map((r) => r[2]),
      configHash: t.configHash,
    };
  }
  throw new SchemaError(`snapshot header must be x[,y],u in ${path}`);
}

export interface MetricsRow {
  t: number;
  c: number;
  mMinus: number;
  mPlus: number;
  hausdorff: number;
  profileDist: number;
}

export function readMetrics(path: string): MetricsRow[] {
  const t = readCsv(path);
  requireColumns(
    t,
    ["t", "c", "m_minus", "m_plus", "hausdorff", "profile_dist"],
    path,
  );
  const idx = (name: string) => t.columns.indexOf(name);
  return t.rows.map((r) => ({
    t: r[idx("t")],
    c: r[idx("c")],
    mMinus: r[idx("m_minus")],
    mPlus: r[idx("m_plus")],
    hausdorff: r[idx("hausdorff")],
    profileDist: r[idx("profile_dist")],
  }));
}

export interface StabilityRow {
  pathDist: number;
  solDist: number;
}

export function readStability(path: string): StabilityRow[] {
  const t = readCsv(path);
  requireColumns(t, ["path_dist", "sol_dist"], path);
  const pi = t.columns.indexOf("path_dist");
  const si = t.columns.indexOf("sol_dist");
  return t.rows.map((r) => ({ pathDist: r[pi], solDist: r[si] }));
}
