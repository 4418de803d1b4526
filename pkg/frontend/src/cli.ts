#!/usr/bin/env node
import { pathToFileURL } from "node:url";

import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { runConvert } from "./convert.js";
import { CsvError, type PlotKind } from "./csv.js";
import { PlotError, runPlot } from "./plot.js";
import { ConvertError } from "./planetoid.js";

function fail(message: string): never {
  console.error(`gcnstab-tools: error: ${message}`);
  process.exit(1);
}

function parsePosClass(raw: string): number | "auto" {
  if (raw === "auto") {
    return "auto";
  }
  if (!/^\d+$/.test(raw)) {
    fail(`--pos-class must be 'auto' or a non-negative integer, got '${raw}'`);
  }
  return Number(raw);
}

async function handle(action: () => void | Promise<unknown>): Promise<void> {
  try {
    await action();
  } catch (err) {
    if (
      err instanceof ConvertError ||
      err instanceof CsvError ||
      err instanceof PlotError
    ) {
      fail(err.message);
    }
    throw err;
  }
}

export async function main(argv: string[]): Promise<void> {
  await yargs(argv)
    .scriptName("gcnstab-tools")
    .command(
      "convert",
      "convert a citation-benchmark source into a gcnstab dataset directory",
      (y) =>
        y
          .option("dataset", {
            type: "string",
            demandOption: true,
            describe: "source dataset name (e.g. cora, citeseer, pubmed)",
          })
          .option("source", {
            type: "string",
            default: "data",
            describe: "directory holding the ind.<dataset>.* source files",
          })
          .option("out", {
            type: "string",
            demandOption: true,
            describe: "dataset directory to write",
          })
          .option("pos-class", {
            type: "string",
            default: "auto",
            describe:
              "class id mapped to +1 (all others -1); 'auto' picks the most frequent",
          })
          .option("normalize", {
            choices: ["on", "off"] as const,
            default: "on",
            describe: "scale nonzero feature rows to unit L2 norm",
          }),
      async (args) =>
        handle(() =>
          runConvert({
            dataset: args.dataset,
            source: args.source,
            out: args.out,
            posClass: parsePosClass(args["pos-class"]),
            normalize: args.normalize === "on",
          }),
        ),
    )
    .command(
      "plot",
      "render curves from gcnstab CSV outputs, one per file",
      (y) =>
        y
          .option("kind", {
            choices: ["gap", "dtheta"] as const,
            demandOption: true,
            describe:
              "gap: 'gap' column vs epoch; dtheta: 'delta_theta_l2' column vs step/epoch",
          })
          .option("csv", {
            type: "string",
            array: true,
            demandOption: true,
            describe: "input CSV files (a .manifest.json sidecar names the curve)",
          })
          .option("out", {
            type: "string",
            demandOption: true,
            describe: "figure file to write (.svg or .png)",
          })
          .option("width", { type: "number", default: 840 })
          .option("height", { type: "number", default: 520 }),
      async (args) =>
        handle(() =>
          runPlot({
            kind: args.kind as PlotKind,
            csvs: args.csv,
            out: args.out,
            width: args.width,
            height: args.height,
          }),
        ),
    )
    .demandCommand(1, "specify a command: convert or plot")
    .strict()
    .help()
    .parseAsync();
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url === pathToFileURL(process.argv[1]).href;
if (invokedDirectly) {
  await main(hideBin(process.argv));
}
