"""Node features, ego-graph extraction, and the aggregated-feature supremum.

A single-layer model's output at node x depends only on the ego-graph: the
principal block of g(L) over {x} ∪ neighbors(x) and the matching feature
rows. The center's aggregated feature vector

    a(x) = sum_j g(L)[x, j] * x_j

is the whole sufficient statistic: output = act(a(x) @ theta). Its largest
norm over nodes ("g_lambda") is what the stability bounds consume.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphs import FilterMatrix, principal_submatrix
from .spectral import ego_index_set, lambda_max


@dataclass(frozen=True)
class FeatureMatrix:
    values: np.ndarray  # (n, d_in) float64

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise ValueError("features must be a 2-d array")
        if v.size and not np.all(np.isfinite(v)):
            raise ValueError("features must be finite")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d_in(self) -> int:
        return self.values.shape[1]

    def row_norms(self) -> np.ndarray:
        return np.linalg.norm(self.values, axis=1)


def normalize_features(x: FeatureMatrix) -> tuple[FeatureMatrix, int]:
    """Scale every row to unit L2 norm; zero rows pass through unchanged.

    Returns the normalized matrix and the count of zero rows left as-is.
    """
    norms = x.row_norms()
    zero = norms == 0.0
    safe = np.where(zero, 1.0, norms)
    out = x.values / safe[:, None]
    return FeatureMatrix(out), int(np.count_nonzero(zero))


def features_are_unit(x: FeatureMatrix, tol: float = 1e-9) -> bool:
    """True when every nonzero row has unit norm within tol."""
    norms = x.row_norms()
    nonzero = norms > 0.0
    return bool(np.all(np.abs(norms[nonzero] - 1.0) <= tol))


@dataclass
class EgoGraph:
    """Local view at one node: center mapped to local index 0."""

    center: int
    nodes: np.ndarray        # global indices, center first then ascending
    filter_block: np.ndarray  # (q, q) dense principal submatrix, reordered
    features_block: np.ndarray  # (q, d_in)

    @property
    def q(self) -> int:
        return len(self.nodes)

    def aggregate(self) -> np.ndarray:
        """Center row of the ego filter applied to the local features."""
        return self.filter_block[0] @ self.features_block


def extract_ego(f: FilterMatrix, x: FeatureMatrix, node: int) -> EgoGraph:
    if not (0 <= node < f.n):
        raise ValueError(f"node {node} out of range for n={f.n}")
    if x.n != f.n:
        raise ValueError("feature row count does not match filter dimension")
    idx = ego_index_set(f, node)
    block = principal_submatrix(f, idx)
    center_pos = int(np.searchsorted(idx, node))
    order = np.concatenate(([center_pos], np.delete(np.arange(idx.size), center_pos)))
    return EgoGraph(
        center=node,
        nodes=idx[order],
        filter_block=block[np.ix_(order, order)],
        features_block=x.values[idx[order]],
    )


def node_output(e: EgoGraph, theta: np.ndarray, act) -> float:
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape != (e.features_block.shape[1],):
        raise ValueError("theta dimension does not match features")
    return float(act.fn(e.aggregate() @ theta))


@dataclass
class GLambdaResult:
    value: float
    lambda_max: float
    within_bound: bool
    features_unit: bool


def g_lambda_empirical(f: FilterMatrix, x: FeatureMatrix, tol: float = 1e-9) -> GLambdaResult:
    """Largest aggregated-feature norm over all nodes, with the spectral check.

    The comparison flag value <= lambda_max + tol is the operative form of
    the spectral domination claim; it is guaranteed when the feature block
    of each ego has L2 norm at most 1, which per-row normalization alone
    does not ensure.
    """
    if x.n != f.n:
        raise ValueError("feature row count does not match filter dimension")
    agg = f.csr.matmat(x.values)
    value = float(np.max(np.linalg.norm(agg, axis=1))) if f.n else 0.0
    lam = lambda_max(f).lambda_max
    return GLambdaResult(
        value=value,
        lambda_max=lam,
        within_bound=value <= lam + tol,
        features_unit=features_are_unit(x),
    )


# ---------------------------------------------------------------------------
# Canonical feature file: one row per node, comma-separated decimal floats,
# no header.
# ---------------------------------------------------------------------------

def save_features(x: FeatureMatrix, path) -> None:
    with open(path, "w", newline="\n") as fh:
        for row in x.values:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def load_features(path) -> FeatureMatrix:
    rows = []
    width = None
    with open(path) as fh:
        for lineno, ln in enumerate(fh, start=1):
            ln = ln.strip()
            if not ln:
                continue
            parts = ln.split(",")
            if width is None:
                width = len(parts)
            elif len(parts) != width:
                raise ValueError(
                    f"{path}:{lineno}: expected {width} values, got {len(parts)}"
                )
            try:
                rows.append([float(p) for p in parts])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: malformed float") from None
    if not rows:
        raise ValueError(f"{path}: empty feature file")
    return FeatureMatrix(np.asarray(rows))
