/**
 * `convert` command: read a citation-benchmark source, binarize its labels
 * one-vs-rest, and write a dataset directory the gcnstab CLI can load,
 * plus a manifest recording the resolved class, label histogram, and
 * content hashes of every input and output.
 */
import * as fs from "node:fs";
import * as path from "node:path";

import { gitBlobSha1, stableJson, writeCanonical } from "./canonical.js";
import { convertPlanetoid, loadPlanetoidSource } from "./planetoid.js";

export interface ConvertOptions {
  dataset: string;
  source: string;
  out: string;
  posClass: number | "auto";
  normalize: boolean;
}

export function runConvert(opts: ConvertOptions): void {
  const src = loadPlanetoidSource(opts.source, opts.dataset);
  const { dataset, info } = convertPlanetoid(src, opts.posClass, opts.normalize);
  const written = writeCanonical(dataset, opts.out);

  const hashes = (paths: string[]): Record<string, string> =>
    Object.fromEntries(paths.map((p) => [path.basename(p), gitBlobSha1(p)]));
  const manifest = {
    subcommand: "convert",
    flags: {
      dataset: opts.dataset,
      source: opts.source,
      out: opts.out,
      pos_class: String(opts.posClass),
      normalize: opts.normalize ? "on" : "off",
    },
    pos_class_resolved: info.posClass,
    class_histogram: info.classHistogram,
    nodes: info.nodes,
    edges: info.edges,
    feature_dim: info.featureDim,
    train_size: info.trainSize,
    test_size: info.testSize,
    filler_nodes: info.fillerNodes,
    self_loops_dropped: info.selfLoopsDropped,
    label_counts: info.labelCounts,
    input_hashes: hashes(src.files),
    outputs: written,
    output_hashes: hashes(written),
  };
  fs.writeFileSync(path.join(opts.out, "manifest.json"), stableJson(manifest));
}
