/**
 * Writers for the dataset directory format the gcnstab CLI consumes:
 * graph.tsv (header "N<TAB>E", one "u<TAB>v" edge per line), features.csv
 * (comma-separated floats), labels.csv (one integer per line), split.json
 * ({"train": [...], "test": [...]}). All files LF-terminated.
 */
import * as crypto from "node:crypto";
import * as fs from "node:fs";
import * as path from "node:path";

export interface CanonicalDataset {
  nodes: number;
  /** Undirected edges as [u, v] pairs with u < v, sorted. */
  edges: Array<[number, number]>;
  /** Row-major feature matrix, nodes x d. */
  features: number[][];
  /** One of -1/+1 per node. */
  labels: number[];
  train: number[];
  test: number[];
}

/**
 * Shortest decimal representation that round-trips to the same IEEE double;
 * float() in Python parses it back to the identical bits.
 */
export function formatFloat(v: number): string {
  if (!Number.isFinite(v)) {
    throw new Error(`non-finite feature value ${v}`);
  }
  return String(v);
}

export function writeCanonical(ds: CanonicalDataset, outDir: string): string[] {
  fs.mkdirSync(outDir, { recursive: true });

  const graphLines = [`${ds.nodes}\t${ds.edges.length}`];
  for (const [u, v] of ds.edges) {
    graphLines.push(`${u}\t${v}`);
  }
  const written: string[] = [];
  const emit = (name: string, text: string): void => {
    const p = path.join(outDir, name);
    fs.writeFileSync(p, text);
    written.push(p);
  };
  emit("graph.tsv", graphLines.join("\n") + "\n");
  emit(
    "features.csv",
    ds.features.map((row) => row.map(formatFloat).join(",")).join("\n") + "\n",
  );
  emit("labels.csv", ds.labels.join("\n") + "\n");
  emit("split.json", JSON.stringify({ train: ds.train, test: ds.test }) + "\n");
  return written;
}

/** SHA-1 of the git blob encoding of a file, as used in run manifests. */
export function gitBlobSha1(filePath: string): string {
  const body = fs.readFileSync(filePath);
  const hash = crypto.createHash("sha1");
  hash.update(`blob ${body.length}\0`);
  hash.update(body);
  return hash.digest("hex");
}

/** JSON.stringify with recursively sorted object keys, 2-space indent. */
export function stableJson(value: unknown): string {
  const sortKeys = (v: unknown): unknown => {
    if (Array.isArray(v)) {
      return v.map(sortKeys);
    }
    if (v !== null && typeof v === "object") {
      const out: Record<string, unknown> = {};
      for (const k of Object.keys(v as Record<string, unknown>).sort()) {
        out[k] = sortKeys((v as Record<string, unknown>)[k]);
      }
      return out;
    }
    return v;
  };
  return JSON.stringify(sortKeys(value), null, 2) + "\n";
}
