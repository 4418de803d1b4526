/**
 * `plot` command: render curves from gcnstab CSV outputs — one line per
 * input file, labeled by the filter recorded in the file's run manifest.
 * The figure is a pure function of the CSV cells; divergent ("nan") and
 * missing cells become gaps in the line.
 */
import * as fs from "node:fs";
import * as path from "node:path";

import * as echarts from "echarts";

import { loadCurve, type Curve, type PlotKind } from "./csv.js";

export class PlotError extends Error {}

const Y_LABELS: Record<PlotKind, string> = {
  gap: "generalization gap",
  dtheta: "parameter divergence (L2)",
};

export function renderFigure(
  curves: Curve[],
  kind: PlotKind,
  width: number,
  height: number,
): string {
  for (const curve of curves) {
    if (curve.points.length === 0) {
      console.warn(`${curve.sourcePath}: no data rows; drawing empty axes`);
    }
  }
  const axes = new Set(curves.map((c) => c.xAxis));
  let xLabel = curves[0]?.xAxis ?? "epoch";
  if (axes.size > 1) {
    console.warn(
      "inputs mix epoch-scaled and raw-step x values; labeling the axis 'step'",
    );
    xLabel = "step";
  }

  const chart = echarts.init(null, null, {
    renderer: "svg",
    ssr: true,
    width,
    height,
  });
  chart.setOption({
    animation: false,
    legend: { top: 8, data: curves.map((c) => c.label) },
    grid: { left: 70, right: 24, top: 44, bottom: 52 },
    xAxis: {
      type: "value",
      name: xLabel,
      nameLocation: "middle",
      nameGap: 30,
    },
    yAxis: {
      type: "value",
      name: Y_LABELS[kind],
      nameLocation: "middle",
      nameGap: 52,
    },
    series: curves.map((curve) => ({
      type: "line" as const,
      name: curve.label,
      showSymbol: false,
      smooth: false,
      connectNulls: false,
      data: curve.points.map((pt) => [pt.x, pt.y]),
    })),
  });
  const svg = chart.renderToSVGString();
  chart.dispose();
  return svg;
}

export type Rasterizer = (svg: string) => Promise<Buffer>;

async function sharpRasterize(svg: string): Promise<Buffer> {
  const sharp = (await import("sharp")).default;
  return sharp(Buffer.from(svg)).png().toBuffer();
}

/**
 * Write the figure to `outPath` (.svg or .png). If no PNG rasterizer is
 * available the SVG is written next to the requested path instead, with a
 * warning. Returns the path actually written.
 */
export async function writeFigure(
  svg: string,
  outPath: string,
  rasterize: Rasterizer = sharpRasterize,
): Promise<string> {
  const ext = path.extname(outPath).toLowerCase();
  if (ext === ".svg") {
    fs.writeFileSync(outPath, svg);
    return outPath;
  }
  if (ext !== ".png") {
    throw new PlotError(`unsupported output extension '${ext}' (use .svg or .png)`);
  }
  try {
    const buf = await rasterize(svg);
    fs.writeFileSync(outPath, buf);
    return outPath;
  } catch (err) {
    const fallback = outPath.slice(0, -4) + ".svg";
    fs.writeFileSync(fallback, svg);
    console.warn(
      `PNG rasterizer unavailable (${(err as Error).message}); wrote ${fallback} instead`,
    );
    return fallback;
  }
}

export interface PlotOptions {
  kind: PlotKind;
  csvs: string[];
  out: string;
  width: number;
  height: number;
}

export async function runPlot(opts: PlotOptions): Promise<string> {
  const curves = opts.csvs.map((p) => loadCurve(p, opts.kind));
  const svg = renderFigure(curves, opts.kind, opts.width, opts.height);
  return writeFigure(svg, opts.out);
}
