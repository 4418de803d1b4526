import { execFileSync } from "node:child_process";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";
import { fileURLToPath } from "node:url";

import { afterAll, afterEach, describe, expect, it, vi } from "vitest";

import { loadCurve } from "../src/csv.js";
import { renderFigure, runPlot, writeFigure, PlotError } from "../src/plot.js";
import { makeSource } from "./helpers.js";

const root = fs.mkdtempSync(path.join(os.tmpdir(), "gcnstab-plot-"));
afterAll(() => fs.rmSync(root, { recursive: true, force: true }));
afterEach(() => vi.restoreAllMocks());

let caseId = 0;
function workDir(): string {
  const dir = path.join(root, `case${caseId++}`);
  fs.mkdirSync(dir, { recursive: true });
  return dir;
}

const GAP_HEADER = "epoch,train_loss,test_loss,gap,train_err01,test_err01";
const TWIN_HEADER =
  "step,branch,delta_theta_l2,lemma34_lhs,lemma34_rhs,lemma35_lhs,lemma35_rhs,envelope";

function writeGapCsv(p: string, rows: Array<[number, number | string]>): void {
  const lines = rows.map(
    ([epoch, gap]) => `${epoch},0.5,0.6,${gap},0.0,0.125`,
  );
  fs.writeFileSync(p, [GAP_HEADER, ...lines].join("\n") + "\n");
}

function writeTwinCsv(p: string, rows: Array<[number, number]>): void {
  const lines = rows.map(
    ([step, delta]) => `${step},same,${delta},0.001,0.002,,,${delta * 2}`,
  );
  fs.writeFileSync(p, [TWIN_HEADER, ...lines].join("\n") + "\n");
}

function writeManifest(
  csvPath: string,
  flags: Record<string, unknown>,
  extra: Record<string, unknown> = {},
): void {
  fs.writeFileSync(
    csvPath + ".manifest.json",
    JSON.stringify({ subcommand: "x", flags, ...extra }),
  );
}

describe("loadCurve", () => {
  it("returns CSV cells verbatim, with nan cells as gaps", () => {
    const dir = workDir();
    const p = path.join(dir, "run.csv");
    writeGapCsv(p, [
      [1, 0.25],
      [2, "nan"],
      [3, 0.017821],
      [4, 9.75],
    ]);
    const curve = loadCurve(p, "gap");
    expect(curve.points.map((pt) => pt.x)).toEqual([1, 2, 3, 4]);
    expect(curve.points.map((pt) => pt.y)).toEqual([0.25, null, 0.017821, 9.75]);
    expect(curve.xAxis).toBe("epoch");
  });

  it("names curves from the manifest filter, falling back to the file name", () => {
    const dir = workDir();
    const p = path.join(dir, "mystery.csv");
    writeGapCsv(p, [[1, 0.1]]);
    expect(loadCurve(p, "gap").label).toBe("mystery");
    writeManifest(p, { filter: "symnorm" });
    expect(loadCurve(p, "gap").label).toBe("symnorm");
  });

  it("rescales dtheta steps to epochs when the manifest pins them", () => {
    const dir = workDir();
    const p = path.join(dir, "twin.csv");
    writeTwinCsv(
      p,
      Array.from({ length: 6 }, (_, i) => [i + 1, 0.1 * (i + 1)]),
    );
    writeManifest(p, { filter: "rw", epochs: 2 });
    const curve = loadCurve(p, "dtheta");
    expect(curve.xAxis).toBe("epoch");
    expect(curve.points.map((pt) => pt.x)).toEqual([
      1 / 3,
      2 / 3,
      1,
      4 / 3,
      5 / 3,
      2,
    ]);
    expect(curve.points.map((pt) => pt.y)).toEqual([
      0.1, 0.2, 0.30000000000000004, 0.4, 0.5, 0.6000000000000001,
    ]);
  });

  it("keeps the raw step axis for aborted or unmanifested runs", () => {
    const dir = workDir();
    const aborted = path.join(dir, "aborted.csv");
    writeTwinCsv(aborted, [
      [1, 0.5],
      [2, 80.0],
    ]);
    writeManifest(aborted, { filter: "unnorm", epochs: 4 }, { aborted: true });
    expect(loadCurve(aborted, "dtheta").xAxis).toBe("step");

    const bare = path.join(dir, "bare.csv");
    writeTwinCsv(bare, [[1, 0.5]]);
    expect(loadCurve(bare, "dtheta").xAxis).toBe("step");

    const ragged = path.join(dir, "ragged.csv");
    writeTwinCsv(ragged, [
      [1, 0.1],
      [2, 0.2],
      [3, 0.3],
    ]);
    writeManifest(ragged, { filter: "rw", epochs: 2 });
    expect(loadCurve(ragged, "dtheta").xAxis).toBe("step");
  });

  it("rejects CSVs missing the kind's columns", () => {
    const dir = workDir();
    const twin = path.join(dir, "twin.csv");
    writeTwinCsv(twin, [[1, 0.1]]);
    expect(() => loadCurve(twin, "gap")).toThrowError(/missing column 'epoch'/);
    const gap = path.join(dir, "gap.csv");
    writeGapCsv(gap, [[1, 0.1]]);
    expect(() => loadCurve(gap, "dtheta")).toThrowError(
      /missing column 'step'/,
    );
    expect(() => loadCurve(path.join(dir, "nope.csv"), "gap")).toThrowError(
      /missing CSV file/,
    );
  });
});

describe("renderFigure and writeFigure", () => {
  it("renders one labeled curve per input CSV", async () => {
    const dir = workDir();
    const csvs: string[] = [];
    for (const filter of ["unnorm", "symnorm", "rw"]) {
      const p = path.join(dir, `gap_${filter}.csv`);
      writeGapCsv(p, [
        [1, 0.3],
        [2, 0.2],
        [3, 0.1],
      ]);
      writeManifest(p, { filter });
      csvs.push(p);
    }
    const out = path.join(dir, "fig.svg");
    const written = await runPlot({
      kind: "gap",
      csvs,
      out,
      width: 840,
      height: 520,
    });
    expect(written).toBe(out);
    const svg = fs.readFileSync(out, "utf8");
    expect(svg.startsWith("<svg")).toBe(true);
    for (const label of ["unnorm", "symnorm", "rw", "generalization gap", "epoch"]) {
      expect(svg).toContain(label);
    }
  });

  it("draws empty axes with a warning for header-only CSVs", async () => {
    const warn = vi.spyOn(console, "warn").mockImplementation(() => {});
    const dir = workDir();
    const p = path.join(dir, "empty.csv");
    fs.writeFileSync(p, GAP_HEADER + "\n");
    const out = path.join(dir, "fig.svg");
    await runPlot({ kind: "gap", csvs: [p], out, width: 400, height: 300 });
    expect(fs.existsSync(out)).toBe(true);
    expect(fs.readFileSync(out, "utf8")).toContain("<svg");
    expect(warn).toHaveBeenCalledWith(expect.stringContaining("no data rows"));
  });

  it("warns when inputs mix epoch and step axes", () => {
    const dir = workDir();
    const withManifest = path.join(dir, "a.csv");
    writeTwinCsv(withManifest, [
      [1, 0.1],
      [2, 0.2],
    ]);
    writeManifest(withManifest, { filter: "rw", epochs: 2 });
    const bare = path.join(dir, "b.csv");
    writeTwinCsv(bare, [[1, 0.3]]);

    const warn = vi.spyOn(console, "warn").mockImplementation(() => {});
    const curves = [
      loadCurve(withManifest, "dtheta"),
      loadCurve(bare, "dtheta"),
    ];
    const svg = renderFigure(curves, "dtheta", 500, 300);
    expect(warn).toHaveBeenCalledWith(expect.stringContaining("mix"));
    expect(svg).toContain("step");
  });

  it("writes real PNG bytes when a rasterizer is available", async () => {
    const dir = workDir();
    const curve = {
      label: "symnorm",
      xAxis: "epoch",
      points: [
        { x: 1, y: 0.5 },
        { x: 2, y: 0.25 },
      ],
      sourcePath: "inline",
    };
    const svg = renderFigure([curve], "gap", 400, 300);
    const out = path.join(dir, "fig.png");
    const written = await writeFigure(svg, out);
    expect(written).toBe(out);
    const magic = fs.readFileSync(out).subarray(0, 4);
    expect([...magic]).toEqual([0x89, 0x50, 0x4e, 0x47]);
  });

  it("falls back to SVG with a warning when rasterization fails", async () => {
    const warn = vi.spyOn(console, "warn").mockImplementation(() => {});
    const dir = workDir();
    const out = path.join(dir, "fig.png");
    const written = await writeFigure("<svg></svg>", out, async () => {
      throw new Error("no rasterizer");
    });
    expect(written).toBe(path.join(dir, "fig.svg"));
    expect(fs.readFileSync(written, "utf8")).toBe("<svg></svg>");
    expect(fs.existsSync(out)).toBe(false);
    expect(warn).toHaveBeenCalledWith(expect.stringContaining("instead"));
  });

  it("rejects output paths that are neither .svg nor .png", async () => {
    await expect(writeFigure("<svg></svg>", "fig.pdf")).rejects.toThrowError(
      PlotError,
    );
  });
});

describe("end to end against the gcnstab CLI", () => {
  it(
    "plots three-filter gap and divergence figures from real runs",
    { timeout: 120_000 },
    async () => {
      const dir = workDir();
      const data = path.join(dir, "data");
      execFileSync("gcnstab", [
        "synth",
        "--kind",
        "er",
        "--n",
        "24",
        "--d",
        "4",
        "--p",
        "0.2",
        "--seed",
        "3",
        "--out",
        data,
      ]);
      const gapCsvs: string[] = [];
      const twinCsvs: string[] = [];
      for (const filter of ["unnorm", "symnorm", "rw"]) {
        const gapOut = path.join(dir, `gap_${filter}.csv`);
        execFileSync("gcnstab", [
          "gap",
          "--data",
          data,
          "--filter",
          filter,
          "--eta",
          "0.01",
          "--epochs",
          "3",
          "--out",
          gapOut,
        ]);
        gapCsvs.push(gapOut);
        const twinOut = path.join(dir, `twin_${filter}.csv`);
        execFileSync("gcnstab", [
          "twin",
          "--data",
          data,
          "--filter",
          filter,
          "--eta",
          "0.01",
          "--epochs",
          "3",
          "--out",
          twinOut,
        ]);
        twinCsvs.push(twinOut);
      }

      const gapFig = path.join(dir, "gap.svg");
      await runPlot({
        kind: "gap",
        csvs: gapCsvs,
        out: gapFig,
        width: 840,
        height: 520,
      });
      const gapSvg = fs.readFileSync(gapFig, "utf8");
      for (const label of ["unnorm", "symnorm", "rw"]) {
        expect(gapSvg).toContain(label);
      }

      const twinFig = path.join(dir, "dtheta.svg");
      await runPlot({
        kind: "dtheta",
        csvs: twinCsvs,
        out: twinFig,
        width: 840,
        height: 520,
      });
      const twinSvg = fs.readFileSync(twinFig, "utf8");
      for (const label of ["unnorm", "symnorm", "rw", "epoch"]) {
        expect(twinSvg).toContain(label);
      }

      const curve = loadCurve(twinCsvs[1], "dtheta");
      expect(curve.label).toBe("symnorm");
      expect(curve.xAxis).toBe("epoch");
      expect(Math.max(...curve.points.map((pt) => pt.x))).toBe(3);
    },
  );
});

describe("command line entry", () => {
  const cli = fileURLToPath(new URL("../dist/cli.js", import.meta.url));

  it("runs plot and convert from the built bundle", () => {
    expect(fs.existsSync(cli)).toBe(true);
    const dir = workDir();
    const p = path.join(dir, "run.csv");
    writeGapCsv(p, [
      [1, 0.4],
      [2, 0.3],
    ]);
    writeManifest(p, { filter: "symnorm" });
    const fig = path.join(dir, "fig.svg");
    execFileSync("node", [cli, "plot", "--kind", "gap", "--csv", p, "--out", fig]);
    expect(fs.existsSync(fig)).toBe(true);

    const src = path.join(dir, "source");
    makeSource(src, "cora", { seed: 9 });
    const converted = path.join(dir, "converted");
    execFileSync("node", [
      cli,
      "convert",
      "--dataset",
      "cora",
      "--source",
      src,
      "--out",
      converted,
    ]);
    expect(fs.existsSync(path.join(converted, "manifest.json"))).toBe(true);
    expect(fs.existsSync(path.join(converted, "graph.tsv"))).toBe(true);
  });

  it("exits 1 with a clear message on bad input", () => {
    const dir = workDir();
    try {
      execFileSync(
        "node",
        [cli, "convert", "--dataset", "cora", "--source", dir, "--out", dir],
        { stdio: "pipe" },
      );
      expect.unreachable("convert should have failed");
    } catch (err) {
      const e = err as { status?: number; stderr?: Buffer };
      expect(e.status).toBe(1);
      expect(String(e.stderr)).toContain("gcnstab-tools: error:");
      expect(String(e.stderr)).toContain("missing source file");
    }
  });

  it("rejects unknown commands and kinds", () => {
    for (const args of [["frobnicate"], ["plot", "--kind", "loss"]]) {
      try {
        execFileSync("node", [cli, ...args], { stdio: "pipe" });
        expect.unreachable("should have failed");
      } catch (err) {
        expect((err as { status?: number }).status).toBe(1);
      }
    }
  });
});
