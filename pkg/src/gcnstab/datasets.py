"""Canonical dataset I/O, synthetic tasks, and train/test splitting.

A dataset directory holds four files:

    graph.tsv     first line "N<TAB>E", then "u<TAB>v[<TAB>w]" per edge
    features.csv  one row per node, comma-separated floats, no header
    labels.csv    one integer per line, {-1,+1} or {0,1}
    split.json    {"train": [...], "test": [...]}

Synthetic tasks draw seeded unit-norm Gaussian features and label nodes by
a hidden linear teacher applied to the symmetric-normalized aggregation,
optionally flipping each label with a fixed probability, so a noise-free
task is separable by construction.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, replace

import numpy as np

from .ego import FeatureMatrix, load_features, normalize_features, save_features
from .graphs import FilterKind, Graph, build_filter, build_graph, load_graph, save_graph


@dataclass
class Dataset:
    graph: Graph
    features: FeatureMatrix
    labels: np.ndarray
    train_idx: np.ndarray
    test_idx: np.ndarray

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def m(self) -> int:
        return len(self.train_idx)

    def validate(self) -> None:
        n = self.graph.n
        if self.features.n != n:
            raise ValueError(f"features have {self.features.n} rows, graph has {n} nodes")
        if len(self.labels) != n:
            raise ValueError(f"labels count {len(self.labels)} does not match n={n}")
        dom = set(np.unique(self.labels).tolist())
        if not (dom <= {-1, 1} or dom <= {0, 1}):
            raise ValueError(f"labels must lie in {{-1,+1}} or {{0,1}}, got {sorted(dom)}")
        for name, idx in (("train", self.train_idx), ("test", self.test_idx)):
            if len(idx) and (idx.min() < 0 or idx.max() >= n):
                raise ValueError(f"split.json: {name} index out of range")
            if len(np.unique(idx)) != len(idx):
                raise ValueError(f"split.json: duplicate {name} indices")
        if np.intersect1d(self.train_idx, self.test_idx).size:
            raise ValueError("split.json: train and test overlap")


# ---------------------------------------------------------------------------
# Canonical directory I/O
# ---------------------------------------------------------------------------

def save_canonical(ds: Dataset, out_dir) -> None:
    os.makedirs(out_dir, exist_ok=True)
    save_graph(ds.graph, os.path.join(out_dir, "graph.tsv"))
    save_features(ds.features, os.path.join(out_dir, "features.csv"))
    with open(os.path.join(out_dir, "labels.csv"), "w", newline="\n") as fh:
        fh.write("\n".join(str(int(v)) for v in ds.labels) + "\n")
    with open(os.path.join(out_dir, "split.json"), "w", newline="\n") as fh:
        json.dump(
            {"train": [int(i) for i in ds.train_idx], "test": [int(i) for i in ds.test_idx]},
            fh,
        )
        fh.write("\n")


def load_canonical(data_dir, normalize: bool = True) -> Dataset:
    """Load and validate a dataset directory.

    normalize applies row normalization to the features (zero rows kept);
    it is idempotent on already-normalized data.
    """
    paths = {
        name: os.path.join(data_dir, name)
        for name in ("graph.tsv", "features.csv", "labels.csv", "split.json")
    }
    for name, p in paths.items():
        if not os.path.exists(p):
            raise ValueError(f"missing dataset file: {p}")
    graph = load_graph(paths["graph.tsv"])
    features = load_features(paths["features.csv"])
    labels = []
    with open(paths["labels.csv"]) as fh:
        for lineno, ln in enumerate(fh, start=1):
            ln = ln.strip()
            if not ln:
                continue
            try:
                val = int(ln)
            except ValueError:
                raise ValueError(f"{paths['labels.csv']}:{lineno}: non-integer label") from None
            if val not in (-1, 0, 1):
                raise ValueError(f"{paths['labels.csv']}:{lineno}: label {val} outside domain")
            labels.append(val)
    with open(paths["split.json"]) as fh:
        try:
            split_obj = json.load(fh)
        except json.JSONDecodeError as err:
            raise ValueError(f"{paths['split.json']}: invalid JSON: {err}") from None
    if not isinstance(split_obj, dict) or set(split_obj) != {"train", "test"}:
        raise ValueError(f"{paths['split.json']}: expected keys 'train' and 'test'")
    idx = {}
    for name in ("train", "test"):
        vals = split_obj[name]
        if not isinstance(vals, list) or any(not isinstance(v, int) for v in vals):
            raise ValueError(f"{paths['split.json']}: {name} must be a list of integers")
        idx[name] = np.asarray(vals, dtype=np.int64)
    ds = Dataset(
        graph=graph,
        features=features,
        labels=np.asarray(labels, dtype=np.int64),
        train_idx=idx["train"],
        test_idx=idx["test"],
    )
    try:
        ds.validate()
    except ValueError as err:
        raise ValueError(f"{data_dir}: {err}") from None
    if normalize:
        feats, _ = normalize_features(ds.features)
        ds = replace(ds, features=feats)
    return ds


# ---------------------------------------------------------------------------
# Synthetic graphs and tasks
# ---------------------------------------------------------------------------

def er_graph(n: int, p: float, rng: np.random.Generator) -> Graph:
    iu, iv = np.triu_indices(n, k=1)
    mask = rng.random(len(iu)) < p
    return build_graph(n, list(zip(iu[mask].tolist(), iv[mask].tolist())))


def star_graph(n: int) -> Graph:
    return build_graph(n, [(0, j) for j in range(1, n)])


def complete_graph(n: int) -> Graph:
    iu, iv = np.triu_indices(n, k=1)
    return build_graph(n, list(zip(iu.tolist(), iv.tolist())))


def cycle_graph(n: int) -> Graph:
    if n == 2:
        return build_graph(2, [(0, 1)])
    return build_graph(n, [(i, (i + 1) % n) for i in range(n)])


def generate_synthetic(
    kind: str,
    n: int,
    d_in: int,
    seed: int,
    p: float = 0.1,
    teacher_noise: float = 0.0,
    train_fraction: float = 0.6,
) -> Dataset:
    """Seeded synthetic task on one of the generator graphs.

    kind is one of er/star/complete/cycle (er uses edge probability p).
    Labels are sign(teacher applied to the symmetric-normalized aggregate),
    flipped with probability teacher_noise; the default split is a seeded
    60/40 shuffle.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    if not (0.0 <= teacher_noise < 0.5):
        raise ValueError("teacher_noise must lie in [0, 0.5)")
    rng = np.random.default_rng(seed)
    if kind == "er":
        if not (0.0 < p <= 1.0):
            raise ValueError("p must lie in (0, 1]")
        graph = er_graph(n, p, rng)
    elif kind == "star":
        graph = star_graph(n)
    elif kind == "complete":
        graph = complete_graph(n)
    elif kind == "cycle":
        graph = cycle_graph(n)
    else:
        raise ValueError(f"unknown synthetic kind {kind!r}")

    raw = FeatureMatrix(rng.standard_normal((n, d_in)))
    features, _ = normalize_features(raw)

    teacher = rng.standard_normal(d_in)
    teacher /= np.linalg.norm(teacher)
    sym = build_filter(graph, FilterKind.SYM_NORMALIZED)
    scores = sym.csr.matmat(features.values) @ teacher
    labels = np.where(scores >= 0.0, 1, -1).astype(np.int64)
    if teacher_noise > 0.0:
        flips = rng.random(n) < teacher_noise
        labels = np.where(flips, -labels, labels)

    ds = Dataset(
        graph=graph,
        features=features,
        labels=labels,
        train_idx=np.arange(n),
        test_idx=np.zeros(0, dtype=np.int64),
    )
    return split(ds, train_fraction, seed)


def split(ds: Dataset, train_fraction: float, seed: int) -> Dataset:
    """Deterministic shuffled split with at least one node on each side."""
    if not (0.0 < train_fraction < 1.0):
        raise ValueError("train_fraction must lie in (0, 1)")
    n = ds.n
    if n < 2:
        raise ValueError("cannot split a graph with fewer than 2 nodes")
    m = int(round(train_fraction * n))
    m = min(max(m, 1), n - 1)
    perm = np.random.default_rng(seed).permutation(n)
    return replace(
        ds,
        train_idx=np.sort(perm[:m]),
        test_idx=np.sort(perm[m:]),
    )
