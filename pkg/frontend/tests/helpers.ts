import { execFileSync } from "node:child_process";
import * as fs from "node:fs";
import * as path from "node:path";

/** Small deterministic PRNG so fixtures are reproducible across runs. */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export interface SourceOptions {
  classes?: number;
  featureDim?: number;
  labeledTrain?: number;
  unlabeled?: number;
  testCount?: number;
  /** Number of ids in the test block left out of test.index (fillers). */
  gapCount?: number;
  /** Order of test.index lines relative to the node ids they name. */
  testOrder?: "sorted" | "shuffled";
  seed?: number;
  edgeProb?: number;
  /** Nodes whose adjacency list also names the node itself. */
  selfLoopNodes?: number[];
  /** Leave ally rows for unlabeled nodes all-zero instead of one-hot. */
  unlabeledZero?: boolean;
  /** Restrict assigned classes to this list (defaults to all). */
  classPool?: number[];
}

export interface SourceFixture {
  dir: string;
  name: string;
  nodes: number;
  edges: number;
  blockSize: number;
  labeledTrain: number;
  featureDim: number;
  classes: number;
  /** tx row order: testIndex[k] is the node id of tx row k. */
  testIndex: number[];
  gapIds: number[];
  /** class id per node; -1 for fillers and zeroed unlabeled rows. */
  classOf: number[];
  /** raw (pre-normalization) feature row per node; zeros for fillers. */
  features: number[][];
}

/** Write a complete source-fileset for `name` under `dir`. */
export function makeSource(
  dir: string,
  name: string,
  opts: SourceOptions = {},
): SourceFixture {
  const C = opts.classes ?? 3;
  const d = opts.featureDim ?? 4;
  const L = opts.labeledTrain ?? 6;
  const U = opts.unlabeled ?? 4;
  const T = opts.testCount ?? 5;
  const gapCount = opts.gapCount ?? 0;
  const rng = mulberry32(opts.seed ?? 7);
  const pool = opts.classPool ?? Array.from({ length: C }, (_, c) => c);

  const A = L + U;
  const N = A + T + gapCount;
  const blockIds = Array.from({ length: T + gapCount }, (_, i) => A + i);
  shuffle(blockIds, rng);
  const gapIds = blockIds.slice(0, gapCount).sort((a, b) => a - b);
  let testIndex = blockIds.slice(gapCount);
  if ((opts.testOrder ?? "sorted") === "sorted") {
    testIndex = [...testIndex].sort((a, b) => a - b);
  }

  const features: number[][] = [];
  const classOf: number[] = [];
  for (let i = 0; i < N; i++) {
    features.push(Array.from({ length: d }, () => rng() * 2 - 1));
    classOf.push(pool[Math.floor(rng() * pool.length)]);
  }
  for (const g of gapIds) {
    features[g] = new Array(d).fill(0);
    classOf[g] = -1;
  }
  if (opts.unlabeledZero) {
    for (let i = L; i < A; i++) {
      classOf[i] = -1;
    }
  }

  const adj: Record<string, number[]> = {};
  for (let i = 0; i < N; i++) {
    adj[String(i)] = [];
  }
  let edges = 0;
  const p = opts.edgeProb ?? 0.25;
  for (let u = 0; u < N; u++) {
    for (let v = u + 1; v < N; v++) {
      if (rng() < p) {
        adj[String(u)].push(v);
        adj[String(v)].push(u);
        edges++;
      }
    }
  }
  for (const u of opts.selfLoopNodes ?? []) {
    adj[String(u)].push(u);
  }

  const oneHot = (c: number): number[] => {
    const row = new Array(C).fill(0);
    if (c >= 0) {
      row[c] = 1;
    }
    return row;
  };
  const allx = features.slice(0, A);
  const ally = Array.from({ length: A }, (_, i) => oneHot(classOf[i]));
  const y = ally.slice(0, L);
  const tx = testIndex.map((node) => features[node]);
  const ty = testIndex.map((node) => oneHot(classOf[node]));

  fs.mkdirSync(dir, { recursive: true });
  const write = (part: string, body: string): void => {
    fs.writeFileSync(path.join(dir, `ind.${name}.${part}`), body);
  };
  write("graph.json", JSON.stringify({ nodes: N, edges, adj }));
  write("allx.json", JSON.stringify(allx));
  write("ally.json", JSON.stringify(ally));
  write("y.json", JSON.stringify(y));
  write("tx.json", JSON.stringify(tx));
  write("ty.json", JSON.stringify(ty));
  write("test.index", testIndex.join("\n") + "\n");

  return {
    dir,
    name,
    nodes: N,
    edges,
    blockSize: A,
    labeledTrain: L,
    featureDim: d,
    classes: C,
    testIndex,
    gapIds,
    classOf,
    features,
  };
}

function shuffle(arr: number[], rng: () => number): void {
  for (let i = arr.length - 1; i > 0; i--) {
    const j = Math.floor(rng() * (i + 1));
    [arr[i], arr[j]] = [arr[j], arr[i]];
  }
}

const PY_LOAD = `
import json, sys
from gcnstab.datasets import load_canonical

ds = load_canonical(sys.argv[1], normalize=sys.argv[2] == "on")
print(json.dumps({
    "n": int(ds.graph.n),
    "edges": int(ds.graph.edge_count),
    "d": int(ds.features.d_in),
    "train": [int(i) for i in ds.train_idx],
    "test": [int(i) for i in ds.test_idx],
    "labels": [int(v) for v in ds.labels],
    "row_norms": [float(v) for v in ds.features.row_norms()],
}))
`;

export interface LoadedDataset {
  n: number;
  edges: number;
  d: number;
  train: number[];
  test: number[];
  labels: number[];
  row_norms: number[];
}

/**
 * Load a converted directory through the Python package's own reader —
 * the cross-component contract the converter must satisfy.
 */
export function loadThroughPython(
  dataDir: string,
  normalize: "on" | "off" = "off",
): LoadedDataset {
  const out = execFileSync("python3", ["-c", PY_LOAD, dataDir, normalize], {
    encoding: "utf8",
  });
  return JSON.parse(out) as LoadedDataset;
}

export function readFeaturesCsv(dataDir: string): number[][] {
  const text = fs.readFileSync(path.join(dataDir, "features.csv"), "utf8");
  return text
    .trim()
    .split("\n")
    .map((line) => line.split(",").map(Number));
}

export function readLabelsCsv(dataDir: string): number[] {
  return fs
    .readFileSync(path.join(dataDir, "labels.csv"), "utf8")
    .trim()
    .split("\n")
    .map(Number);
}
