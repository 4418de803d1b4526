/**
 * Loader and converter for citation-benchmark sources stored in the
 * split-file layout popularized by the planetoid distributions, with JSON
 * payloads instead of Python pickles. A dataset `name` in a source
 * directory consists of:
 *
 *   ind.<name>.graph.json   {"nodes": N, "edges": E, "adj": {"0": [..], ..}}
 *   ind.<name>.allx.json    feature rows for the initial node block (A x d)
 *   ind.<name>.ally.json    one-hot (or all-zero = unlabeled) rows for allx
 *   ind.<name>.y.json       one-hot rows for the labeled-train prefix of allx
 *   ind.<name>.tx.json      feature rows for the test nodes (T x d)
 *   ind.<name>.ty.json      one-hot rows for tx
 *   ind.<name>.test.index   text, one node id per line: the graph position
 *                           of each tx/ty row
 *
 * Node ids in [A, N) that test.index does not mention are kept as isolated
 * zero-feature filler nodes (the convention for sources whose test block has
 * holes); they join neither split and get the negative label.
 */
import * as fs from "node:fs";
import * as path from "node:path";

import type { CanonicalDataset } from "./canonical.js";

export class ConvertError extends Error {}

export interface PlanetoidSource {
  name: string;
  nodes: number;
  edges: number;
  adj: number[][];
  allx: number[][];
  ally: number[][];
  y: number[][];
  tx: number[][];
  ty: number[][];
  testIndex: number[];
  /** Absolute paths of the seven source files, for manifest hashing. */
  files: string[];
  selfLoopsDropped: number;
}

export interface ConversionInfo {
  posClass: number;
  classHistogram: Record<string, number>;
  nodes: number;
  edges: number;
  featureDim: number;
  trainSize: number;
  testSize: number;
  fillerNodes: number;
  selfLoopsDropped: number;
  labelCounts: { pos: number; neg: number };
}

function readText(p: string): string {
  if (!fs.existsSync(p)) {
    throw new ConvertError(`missing source file: ${p}`);
  }
  return fs.readFileSync(p, "utf8");
}

function readJson(p: string): unknown {
  const text = readText(p);
  try {
    return JSON.parse(text);
  } catch (err) {
    throw new ConvertError(`${p}: invalid JSON: ${(err as Error).message}`);
  }
}

function asMatrix(p: string, raw: unknown): number[][] {
  if (!Array.isArray(raw) || raw.length === 0) {
    throw new ConvertError(`${p}: expected a non-empty array of rows`);
  }
  const rows: number[][] = [];
  let width = -1;
  raw.forEach((row, i) => {
    if (!Array.isArray(row) || row.length === 0) {
      throw new ConvertError(`${p}: row ${i} is not a non-empty array`);
    }
    if (width === -1) {
      width = row.length;
    } else if (row.length !== width) {
      throw new ConvertError(
        `${p}: row ${i} has ${row.length} values, expected ${width}`,
      );
    }
    for (const v of row) {
      if (typeof v !== "number" || !Number.isFinite(v)) {
        throw new ConvertError(`${p}: row ${i} has a non-numeric value`);
      }
    }
    rows.push(row as number[]);
  });
  return rows;
}

/** Index of the single 1 in a 0/1 row; -1 for an all-zero row. */
function oneHotClass(p: string, row: number[], rowIndex: number): number {
  let hit = -1;
  for (let j = 0; j < row.length; j++) {
    if (row[j] === 0) {
      continue;
    }
    if (row[j] !== 1 || hit !== -1) {
      hit = -2;
      break;
    }
    hit = j;
  }
  if (hit === -2) {
    throw new ConvertError(`${p}: row ${rowIndex} is not one-hot`);
  }
  return hit;
}

export function loadPlanetoidSource(
  sourceDir: string,
  name: string,
): PlanetoidSource {
  const fileFor = (part: string): string =>
    path.join(sourceDir, `ind.${name}.${part}`);
  const files = [
    fileFor("graph.json"),
    fileFor("allx.json"),
    fileFor("ally.json"),
    fileFor("y.json"),
    fileFor("tx.json"),
    fileFor("ty.json"),
    fileFor("test.index"),
  ];
  const [graphPath, allxPath, allyPath, yPath, txPath, tyPath, indexPath] =
    files;

  const graphRaw = readJson(graphPath);
  if (
    graphRaw === null ||
    typeof graphRaw !== "object" ||
    Array.isArray(graphRaw)
  ) {
    throw new ConvertError(`${graphPath}: expected an object`);
  }
  const { nodes, edges, adj } = graphRaw as {
    nodes?: unknown;
    edges?: unknown;
    adj?: unknown;
  };
  if (!Number.isInteger(nodes) || (nodes as number) < 1) {
    throw new ConvertError(`${graphPath}: "nodes" must be a positive integer`);
  }
  if (!Number.isInteger(edges) || (edges as number) < 0) {
    throw new ConvertError(
      `${graphPath}: "edges" must be a non-negative integer`,
    );
  }
  if (adj === null || typeof adj !== "object" || Array.isArray(adj)) {
    throw new ConvertError(`${graphPath}: "adj" must be an object`);
  }
  const n = nodes as number;
  const adjLists: number[][] = [];
  let selfLoops = 0;
  for (let u = 0; u < n; u++) {
    const neighbors = (adj as Record<string, unknown>)[String(u)];
    if (neighbors === undefined) {
      throw new ConvertError(`${graphPath}: adjacency is missing node ${u}`);
    }
    if (!Array.isArray(neighbors)) {
      throw new ConvertError(`${graphPath}: adjacency of node ${u} is not an array`);
    }
    const list: number[] = [];
    for (const v of neighbors) {
      if (!Number.isInteger(v) || (v as number) < 0 || (v as number) >= n) {
        throw new ConvertError(
          `${graphPath}: node ${u} has an out-of-range neighbor ${v}`,
        );
      }
      if (v === u) {
        selfLoops++;
        continue;
      }
      list.push(v as number);
    }
    adjLists.push(list);
  }
  const extraKeys = Object.keys(adj as Record<string, unknown>).length - n;
  if (extraKeys > 0) {
    throw new ConvertError(
      `${graphPath}: adjacency lists ${extraKeys} node(s) beyond the declared ${n}`,
    );
  }
  const pairCount = undirectedEdgePairs(adjLists).length;
  if (pairCount !== edges) {
    throw new ConvertError(
      `${graphPath}: metadata says ${edges} edges, adjacency lists contain ${pairCount}`,
    );
  }

  const allx = asMatrix(allxPath, readJson(allxPath));
  const ally = asMatrix(allyPath, readJson(allyPath));
  const y = asMatrix(yPath, readJson(yPath));
  const tx = asMatrix(txPath, readJson(txPath));
  const ty = asMatrix(tyPath, readJson(tyPath));

  if (tx[0].length !== allx[0].length) {
    throw new ConvertError(
      `${txPath}: feature width ${tx[0].length} != allx width ${allx[0].length}`,
    );
  }
  if (ally.length !== allx.length) {
    throw new ConvertError(
      `${allyPath}: ${ally.length} rows for ${allx.length} allx rows`,
    );
  }
  if (ty.length !== tx.length) {
    throw new ConvertError(`${tyPath}: ${ty.length} rows for ${tx.length} tx rows`);
  }
  const classCount = ally[0].length;
  for (const [p, m] of [
    [yPath, y],
    [tyPath, ty],
  ] as Array<[string, number[][]]>) {
    if (m[0].length !== classCount) {
      throw new ConvertError(
        `${p}: ${m[0].length} label columns, expected ${classCount}`,
      );
    }
    m.forEach((row, i) => {
      if (oneHotClass(p, row, i) === -1) {
        throw new ConvertError(`${p}: row ${i} is all-zero, expected one-hot`);
      }
    });
  }
  ally.forEach((row, i) => oneHotClass(allyPath, row, i));
  if (y.length > allx.length) {
    throw new ConvertError(
      `${yPath}: ${y.length} labeled-train rows exceed ${allx.length} allx rows`,
    );
  }
  y.forEach((row, i) => {
    if (row.some((v, j) => v !== ally[i][j])) {
      throw new ConvertError(
        `${yPath}: row ${i} disagrees with the ally row at the same position`,
      );
    }
  });

  const indexText = readText(indexPath);
  const testIndex: number[] = [];
  indexText.split("\n").forEach((line, i) => {
    const s = line.trim();
    if (s === "") {
      return;
    }
    if (!/^\d+$/.test(s)) {
      throw new ConvertError(`${indexPath}:${i + 1}: non-integer index '${s}'`);
    }
    testIndex.push(Number(s));
  });
  if (testIndex.length !== tx.length) {
    throw new ConvertError(
      `${indexPath}: ${testIndex.length} indices for ${tx.length} tx rows`,
    );
  }
  const seen = new Set<number>();
  for (const idx of testIndex) {
    if (idx < allx.length || idx >= n) {
      throw new ConvertError(
        `${indexPath}: index ${idx} outside the test block [${allx.length}, ${n})`,
      );
    }
    if (seen.has(idx)) {
      throw new ConvertError(`${indexPath}: duplicate index ${idx}`);
    }
    seen.add(idx);
  }

  return {
    name,
    nodes: n,
    edges: edges as number,
    adj: adjLists,
    allx,
    ally,
    y,
    tx,
    ty,
    testIndex,
    files,
    selfLoopsDropped: selfLoops,
  };
}

function undirectedEdgePairs(adj: number[][]): Array<[number, number]> {
  const pairs: Array<[number, number]> = [];
  const seen = new Set<number>();
  const n = adj.length;
  for (let u = 0; u < n; u++) {
    for (const v of adj[u]) {
      const a = Math.min(u, v);
      const b = Math.max(u, v);
      const key = a * n + b;
      if (!seen.has(key)) {
        seen.add(key);
        pairs.push([a, b]);
      }
    }
  }
  pairs.sort((p, q) => (p[0] - q[0] === 0 ? p[1] - q[1] : p[0] - q[0]));
  return pairs;
}

/**
 * Histogram of class ids over every labeled row in the source (all one-hot
 * ally rows plus all ty rows); all-zero ally rows are unlabeled.
 */
export function classHistogram(src: PlanetoidSource): Map<number, number> {
  const hist = new Map<number, number>();
  const bump = (c: number): void => {
    if (c >= 0) {
      hist.set(c, (hist.get(c) ?? 0) + 1);
    }
  };
  src.ally.forEach((row, i) => bump(oneHotClass("ally", row, i)));
  src.ty.forEach((row, i) => bump(oneHotClass("ty", row, i)));
  return hist;
}

export function resolvePosClass(
  src: PlanetoidSource,
  posClass: number | "auto",
): number {
  const hist = classHistogram(src);
  if (posClass === "auto") {
    let best = -1;
    let bestCount = -1;
    for (const [c, count] of hist) {
      if (count > bestCount || (count === bestCount && c < best)) {
        best = c;
        bestCount = count;
      }
    }
    return best;
  }
  const classCount = src.ally[0].length;
  if (!Number.isInteger(posClass) || posClass < 0 || posClass >= classCount) {
    throw new ConvertError(
      `positive class ${posClass} not present in ${src.name}: ` +
        `classes run 0..${classCount - 1}`,
    );
  }
  if ((hist.get(posClass) ?? 0) === 0) {
    throw new ConvertError(
      `positive class ${posClass} is empty in ${src.name}: no labeled node has it`,
    );
  }
  return posClass;
}

export function convertPlanetoid(
  src: PlanetoidSource,
  posClass: number | "auto",
  normalize: boolean,
): { dataset: CanonicalDataset; info: ConversionInfo } {
  const pos = resolvePosClass(src, posClass);
  const hist = classHistogram(src);
  const n = src.nodes;
  const d = src.allx[0].length;
  const blockSize = src.allx.length;

  const features: number[][] = [];
  for (let i = 0; i < n; i++) {
    features.push(i < blockSize ? src.allx[i].slice() : new Array(d).fill(0));
  }
  const labels = new Array<number>(n).fill(-1);
  src.ally.forEach((row, i) => {
    if (oneHotClass("ally", row, i) === pos) {
      labels[i] = 1;
    }
  });
  src.testIndex.forEach((node, k) => {
    features[node] = src.tx[k].slice();
    if (oneHotClass("ty", src.ty[k], k) === pos) {
      labels[node] = 1;
    }
  });

  if (normalize) {
    for (const row of features) {
      let sq = 0;
      for (const v of row) {
        sq += v * v;
      }
      if (sq > 0) {
        const norm = Math.sqrt(sq);
        for (let j = 0; j < row.length; j++) {
          row[j] /= norm;
        }
      }
    }
  }

  const train = Array.from({ length: src.y.length }, (_, i) => i);
  const test = [...src.testIndex].sort((a, b) => a - b);
  const posCount = labels.filter((v) => v === 1).length;
  const dataset: CanonicalDataset = {
    nodes: n,
    edges: undirectedEdgePairs(src.adj),
    features,
    labels,
    train,
    test,
  };
  const info: ConversionInfo = {
    posClass: pos,
    classHistogram: Object.fromEntries(
      [...hist.entries()]
        .sort((a, b) => a[0] - b[0])
        .map(([c, count]) => [String(c), count]),
    ),
    nodes: n,
    edges: dataset.edges.length,
    featureDim: d,
    trainSize: train.length,
    testSize: test.length,
    fillerNodes: n - blockSize - test.length,
    selfLoopsDropped: src.selfLoopsDropped,
    labelCounts: { pos: posCount, neg: n - posCount },
  };
  return { dataset, info };
}
