"""Undirected graphs, their convolution filters, and a small CSR kernel.

The filter of a graph with adjacency A and degree matrix D is one of

    unnorm   : A + I
    symnorm  : D^{-1/2} A D^{-1/2} + I
    rw       : D^{-1} A + I
    identity : I            (degenerate, testing only)

Isolated nodes contribute no off-diagonal entries, so the normalized
variants never divide by zero (0/0 := 0 by construction); every filter
keeps the +I diagonal.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


class FilterKind(enum.Enum):
    UNNORMALIZED = "unnorm"
    SYM_NORMALIZED = "symnorm"
    RANDOM_WALK = "rw"
    IDENTITY = "identity"


FILTER_KINDS = {k.value: k for k in FilterKind}


@dataclass(frozen=True)
class Graph:
    """Undirected weighted graph; each edge stored once as (u, v, w) with u < v."""

    n: int
    edge_u: np.ndarray
    edge_v: np.ndarray
    edge_w: np.ndarray

    @property
    def edge_count(self) -> int:
        return len(self.edge_u)

    def edges(self) -> list[tuple[int, int, float]]:
        return [
            (int(u), int(v), float(w))
            for u, v, w in zip(self.edge_u, self.edge_v, self.edge_w)
        ]

    def degrees(self) -> np.ndarray:
        """Weighted degree of every node (sum of incident edge weights)."""
        both = np.concatenate([self.edge_u, self.edge_v])
        w2 = np.concatenate([self.edge_w, self.edge_w])
        return np.bincount(both, weights=w2, minlength=self.n)


def build_graph(n: int, edge_list) -> Graph:
    """Validate and canonicalize an edge list into a Graph.

    Rejects out-of-range endpoints, self-loops, duplicate undirected edges,
    and non-finite weights. Edges come out sorted by (min(u,v), max(u,v)).
    """
    if n < 1:
        raise ValueError(f"graph needs at least one node, got n={n}")
    us, vs, ws = [], [], []
    seen = set()
    for pos, edge in enumerate(edge_list):
        if len(edge) == 2:
            u, v = edge
            w = 1.0
        else:
            u, v, w = edge
        u, v, w = int(u), int(v), float(w)
        if not (0 <= u < n and 0 <= v < n):
            raise ValueError(f"edge {pos}: endpoint out of range: ({u}, {v}) with n={n}")
        if u == v:
            raise ValueError(f"edge {pos}: self-loop at node {u}")
        if not np.isfinite(w):
            raise ValueError(f"edge {pos}: non-finite weight {w}")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise ValueError(f"edge {pos}: duplicate undirected edge ({u}, {v})")
        seen.add(key)
        us.append(key[0])
        vs.append(key[1])
        ws.append(w)
    u_arr = np.asarray(us, dtype=np.int64)
    v_arr = np.asarray(vs, dtype=np.int64)
    w_arr = np.asarray(ws, dtype=np.float64)
    order = np.lexsort((v_arr, u_arr))
    return Graph(n=n, edge_u=u_arr[order], edge_v=v_arr[order], edge_w=w_arr[order])


@dataclass
class CsrMatrix:
    """Row-compressed sparse matrix with sorted columns per row."""

    n_rows: int
    n_cols: int
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    _row_ids: np.ndarray | None = field(default=None, repr=False)

    @property
    def row_ids(self) -> np.ndarray:
        if self._row_ids is None:
            self._row_ids = np.repeat(
                np.arange(self.n_rows, dtype=np.int64), np.diff(self.indptr)
            )
        return self._row_ids

    def row(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return self.indices[lo:hi], self.data[lo:hi]

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return np.bincount(
            self.row_ids, weights=self.data * x[self.indices], minlength=self.n_rows
        )

    def rmatvec(self, x: np.ndarray) -> np.ndarray:
        """Transpose matrix-vector product."""
        return np.bincount(
            self.indices, weights=self.data * x[self.row_ids], minlength=self.n_cols
        )

    def matmat(self, x: np.ndarray) -> np.ndarray:
        out = np.empty((self.n_rows, x.shape[1]))
        for k in range(x.shape[1]):
            out[:, k] = self.matvec(x[:, k])
        return out

    def to_dense(self) -> np.ndarray:
        dense = np.zeros((self.n_rows, self.n_cols))
        dense[self.row_ids, self.indices] = self.data
        return dense


def _csr_from_coo(n: int, rows: np.ndarray, cols: np.ndarray, vals: np.ndarray) -> CsrMatrix:
    order = np.lexsort((cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, rows + 1, 1)
    indptr = np.cumsum(indptr)
    return CsrMatrix(n_rows=n, n_cols=n, indptr=indptr, indices=cols, data=vals)


@dataclass
class FilterMatrix:
    n: int
    kind: FilterKind
    csr: CsrMatrix
    symmetric: bool

    def row(self, i: int):
        return self.csr.row(i)

    def to_dense(self) -> np.ndarray:
        return self.csr.to_dense()


def build_filter(g: Graph, kind: FilterKind) -> FilterMatrix:
    """Realize g(L) for the requested kind as a sparse matrix.

    Row i's nonzero columns are exactly {i} ∪ neighbors(i); the diagonal is
    all ones from the +I term (graphs store no self-loops).
    """
    n = g.n
    diag_rows = np.arange(n, dtype=np.int64)
    diag_vals = np.ones(n)
    if kind is FilterKind.IDENTITY or g.edge_count == 0:
        return FilterMatrix(
            n=n,
            kind=kind,
            csr=_csr_from_coo(n, diag_rows, diag_rows.copy(), diag_vals),
            symmetric=True,
        )

    u, v, w = g.edge_u, g.edge_v, g.edge_w
    deg = g.degrees()
    if kind is FilterKind.UNNORMALIZED:
        val_uv = w.copy()
        val_vu = w.copy()
        symmetric = True
    elif kind is FilterKind.SYM_NORMALIZED:
        scale = 1.0 / np.sqrt(deg[u] * deg[v])
        val_uv = w * scale
        val_vu = val_uv.copy()
        symmetric = True
    elif kind is FilterKind.RANDOM_WALK:
        val_uv = w / deg[u]  # row u, column v
        val_vu = w / deg[v]  # row v, column u
        symmetric = bool(np.all(deg[u] == deg[v]))
    else:
        raise ValueError(f"unknown filter kind {kind}")

    rows = np.concatenate([diag_rows, u, v])
    cols = np.concatenate([diag_rows, v, u])
    vals = np.concatenate([diag_vals, val_uv, val_vu])
    return FilterMatrix(n=n, kind=kind, csr=_csr_from_coo(n, rows, cols, vals), symmetric=symmetric)


DENSE_GUARD = 4096


def principal_submatrix(f: FilterMatrix, idx) -> np.ndarray:
    """Dense restriction of g(L) to a sorted, unique index set."""
    idx = np.asarray(idx, dtype=np.int64)
    if idx.size > DENSE_GUARD:
        raise ValueError(f"index set of size {idx.size} exceeds dense guard {DENSE_GUARD}")
    if idx.size == 0:
        return np.zeros((0, 0))
    if np.any(idx < 0) or np.any(idx >= f.n):
        raise ValueError("principal_submatrix: index out of range")
    if np.any(np.diff(idx) <= 0):
        raise ValueError("principal_submatrix: indices must be sorted and unique")
    q = idx.size
    out = np.zeros((q, q))
    for a, r in enumerate(idx):
        cols, vals = f.row(int(r))
        pos = np.searchsorted(idx, cols)
        keep = (pos < q) & (idx[np.minimum(pos, q - 1)] == cols)
        out[a, pos[keep]] = vals[keep]
    return out


# ---------------------------------------------------------------------------
# Canonical graph file: first line "N<TAB>E", then one edge per line
# "u<TAB>v[<TAB>w]".
# ---------------------------------------------------------------------------

def save_graph(g: Graph, path) -> None:
    lines = [f"{g.n}\t{g.edge_count}"]
    for u, v, w in zip(g.edge_u, g.edge_v, g.edge_w):
        if w == 1.0:
            lines.append(f"{u}\t{v}")
        else:
            lines.append(f"{u}\t{v}\t{w:.17g}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_graph(path) -> Graph:
    with open(path) as fh:
        raw = fh.read().splitlines()
    if not raw:
        raise ValueError(f"{path}: empty graph file")
    head = raw[0].split("\t")
    if len(head) != 2:
        raise ValueError(f"{path}:1: header must be 'N<TAB>E'")
    try:
        n, e = int(head[0]), int(head[1])
    except ValueError:
        raise ValueError(f"{path}:1: non-integer header fields") from None
    body = [ln for ln in raw[1:] if ln]
    if len(body) != e:
        raise ValueError(f"{path}: header declares {e} edges, file has {len(body)}")
    edges = []
    for lineno, ln in enumerate(body, start=2):
        parts = ln.split("\t")
        if len(parts) not in (2, 3):
            raise ValueError(f"{path}:{lineno}: expected 'u<TAB>v[<TAB>w]'")
        try:
            u, v = int(parts[0]), int(parts[1])
            w = float(parts[2]) if len(parts) == 3 else 1.0
        except ValueError:
            raise ValueError(f"{path}:{lineno}: malformed edge line") from None
        edges.append((u, v, w))
    try:
        return build_graph(n, edges)
    except ValueError as err:
        raise ValueError(f"{path}: {err}") from None
