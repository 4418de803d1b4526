"""Extremal spectral quantities of filter matrices.

The quantity the bounds consume is the operator norm of g(L). For the
symmetric kinds that is the largest |eigenvalue|, estimated by power
iteration with a Rayleigh quotient; for the asymmetric random-walk kind it
is the largest singular value, estimated by power iteration on g(L)^T g(L).
The random-walk filter is similar to the symmetric-normalized one
(D^{1/2} (D^{-1}A + I) D^{-1/2} = D^{-1/2}AD^{-1/2} + I on the non-isolated
block), so its spectral radius is computed from that symmetric twin and
reported next to the operator norm; the two need not agree.

A dense eigensolver/SVD serves as the independent oracle for tests and for
the per-node ego-graph checks.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graphs import (
    DENSE_GUARD,
    FilterKind,
    FilterMatrix,
    Graph,
    build_filter,
    principal_submatrix,
)

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITERS = 5000


@dataclass
class SpectralResult:
    lambda_max: float
    iterations: int
    residual: float
    method: str  # "power" or "dense"
    converged: bool
    spectral_radius: float | None = None


def _power_symmetric(mv, n: int, tol: float, max_iters: int, seed: int):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    rho_prev = np.inf
    restarted = False
    rho, residual = 0.0, np.inf
    for it in range(1, max_iters + 1):
        w = mv(v)
        rho = float(v @ w)
        residual = float(np.linalg.norm(w - rho * v))
        if residual <= tol:
            return abs(rho), it, residual, True
        stagnant = abs(rho - rho_prev) < tol * 1e-3 and residual > 100 * tol
        if stagnant and not restarted:
            v = rng.standard_normal(n)
            v /= np.linalg.norm(v)
            restarted = True
            rho_prev = np.inf
            continue
        nw = np.linalg.norm(w)
        if nw == 0.0:
            v = rng.standard_normal(n)
            v /= np.linalg.norm(v)
            continue
        v = w / nw
        rho_prev = rho
    return abs(rho), max_iters, residual, False


def lambda_max(
    f: FilterMatrix,
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
    seed: int = 0,
) -> SpectralResult:
    """Operator norm of g(L) by power iteration, deterministic per seed."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_iters < 1:
        raise ValueError("max_iters must be at least 1")
    if f.symmetric:
        val, its, res, ok = _power_symmetric(f.csr.matvec, f.n, tol, max_iters, seed)
        return SpectralResult(val, its, res, "power", ok)
    # Asymmetric: largest singular value via the normal equations.
    mv = lambda x: f.csr.rmatvec(f.csr.matvec(x))
    val2, its, res, ok = _power_symmetric(mv, f.n, tol, max_iters, seed)
    return SpectralResult(float(np.sqrt(max(val2, 0.0))), its, res, "power", ok)


def random_walk_spectral_radius(
    g: Graph, tol: float = DEFAULT_TOL, max_iters: int = DEFAULT_MAX_ITERS, seed: int = 0
) -> float:
    """Spectral radius of the random-walk filter via its symmetric twin."""
    sym = build_filter(g, FilterKind.SYM_NORMALIZED)
    return lambda_max(sym, tol=tol, max_iters=max_iters, seed=seed).lambda_max


def dense_spectrum(m: np.ndarray) -> np.ndarray:
    """Full spectrum oracle, sorted descending by absolute value.

    Symmetric input: eigenvalues (LAPACK symmetric eigensolver).
    Asymmetric input: singular values.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("dense_spectrum expects a square matrix")
    if m.shape[0] > DENSE_GUARD:
        raise ValueError(f"matrix of size {m.shape[0]} exceeds dense guard {DENSE_GUARD}")
    if m.size and not np.all(np.isfinite(m)):
        raise ValueError("dense_spectrum: non-finite entries")
    if m.shape[0] == 0:
        return np.zeros(0)
    if np.array_equal(m, m.T):
        vals = np.linalg.eigvalsh(m)
        return vals[np.argsort(-np.abs(vals), kind="stable")]
    return np.linalg.svd(m, compute_uv=False)


def dense_lambda_max(m: np.ndarray) -> float:
    spec = dense_spectrum(m)
    return float(np.abs(spec[0])) if spec.size else 0.0


def ego_index_set(f: FilterMatrix, node: int) -> np.ndarray:
    """1-hop neighborhood of a node as determined by the filter's row support."""
    cols, _ = f.row(node)
    return np.unique(np.append(cols, node))


@dataclass
class InterlacingReport:
    lambda_full: float
    nodes: np.ndarray
    ego_sizes: np.ndarray
    lambda_egos: np.ndarray
    tol: float
    violations: list = field(default_factory=list)

    @property
    def max_ratio(self) -> float:
        if self.lambda_full == 0.0:
            return 0.0
        return float(np.max(self.lambda_egos) / self.lambda_full)

    @property
    def ok(self) -> bool:
        return not self.violations


def interlacing_check(g: Graph, f: FilterMatrix, tol: float = 1e-9) -> InterlacingReport:
    """Verify that every ego-graph's extremal value sits below the full graph's.

    Each node's ego block is the principal submatrix of g(L) over the node
    and its neighbors; its top value (dense oracle) must not exceed the full
    matrix's by more than tol. A violation would signal a construction bug,
    not a property of the graph.
    """
    if f.n <= DENSE_GUARD:
        lam_full = dense_lambda_max(f.to_dense())
    else:
        lam_full = lambda_max(f).lambda_max
    nodes = np.arange(f.n)
    sizes = np.empty(f.n, dtype=np.int64)
    lams = np.empty(f.n)
    violations = []
    for x in range(f.n):
        idx = ego_index_set(f, x)
        block = principal_submatrix(f, idx)
        lam_ego = dense_lambda_max(block)
        sizes[x] = idx.size
        lams[x] = lam_ego
        if lam_ego > lam_full + tol:
            violations.append((x, lam_ego, lam_full))
    return InterlacingReport(
        lambda_full=lam_full,
        nodes=nodes,
        ego_sizes=sizes,
        lambda_egos=lams,
        tol=tol,
        violations=violations,
    )
