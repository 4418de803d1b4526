/**
 * Readers for the CSV files the gcnstab CLI emits. Values are used verbatim
 * — nothing here recomputes, smooths, or rescales a measured quantity; the
 * only derived value is the epoch position of a step when the run manifest
 * pins the epoch count.
 */
import * as fs from "node:fs";
import * as path from "node:path";

import Papa from "papaparse";

export type PlotKind = "gap" | "dtheta";

/** Column holding the y value for each plot kind. */
export const KIND_COLUMNS: Record<PlotKind, { x: string; y: string }> = {
  gap: { x: "epoch", y: "gap" },
  dtheta: { x: "step", y: "delta_theta_l2" },
};

export interface Curve {
  label: string;
  /** Axis the x values are expressed in ("epoch" or "step"). */
  xAxis: string;
  points: Array<{ x: number; y: number | null }>;
  sourcePath: string;
}

export class CsvError extends Error {}

/** "" and "nan" cells become null (gaps in the rendered line). */
function parseCell(cell: string): number | null {
  const s = cell.trim();
  if (s === "" || s === "nan") {
    return null;
  }
  if (s === "inf") {
    return null;
  }
  if (s === "-inf") {
    return null;
  }
  const v = Number(s);
  return Number.isFinite(v) ? v : null;
}

interface RunManifest {
  flags?: Record<string, unknown>;
  aborted?: boolean;
}

function readManifest(csvPath: string): RunManifest | null {
  const p = csvPath + ".manifest.json";
  if (!fs.existsSync(p)) {
    return null;
  }
  try {
    return JSON.parse(fs.readFileSync(p, "utf8")) as RunManifest;
  } catch {
    return null;
  }
}

export function loadCurve(csvPath: string, kind: PlotKind): Curve {
  if (!fs.existsSync(csvPath)) {
    throw new CsvError(`missing CSV file: ${csvPath}`);
  }
  const text = fs.readFileSync(csvPath, "utf8");
  const parsed = Papa.parse<Record<string, string>>(text, {
    header: true,
    skipEmptyLines: true,
  });
  const columns = parsed.meta.fields ?? [];
  const { x: xCol, y: yCol } = KIND_COLUMNS[kind];
  for (const c of [xCol, yCol]) {
    if (!columns.includes(c)) {
      throw new CsvError(
        `${csvPath}: missing column '${c}' needed for kind '${kind}' ` +
          `(found: ${columns.join(", ") || "none"})`,
      );
    }
  }

  const manifest = readManifest(csvPath);
  const flags = manifest?.flags ?? {};
  const label =
    typeof flags.filter === "string"
      ? flags.filter
      : path.basename(csvPath, ".csv");

  const points = parsed.data.map((row) => ({
    x: parseCell(row[xCol] ?? "") ?? NaN,
    y: parseCell(row[yCol] ?? ""),
  }));
  points.forEach((pt, i) => {
    if (Number.isNaN(pt.x)) {
      throw new CsvError(`${csvPath}: row ${i + 1} has no usable '${xCol}' value`);
    }
  });

  let xAxis = xCol;
  if (kind === "dtheta" && points.length > 0) {
    const epochs = flags.epochs;
    const maxStep = Math.max(...points.map((pt) => pt.x));
    if (
      typeof epochs === "number" &&
      Number.isInteger(epochs) &&
      epochs > 0 &&
      manifest?.aborted !== true &&
      maxStep % epochs === 0
    ) {
      const perEpoch = maxStep / epochs;
      for (const pt of points) {
        pt.x /= perEpoch;
      }
      xAxis = "epoch";
    }
  }
  return { label, xAxis, points, sourcePath: csvPath };
}
