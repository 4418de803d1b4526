"""Batch-size-1 SGD and the coupled twin-run harness.

A twin run trains two trajectories in lockstep on training sets that differ
in exactly one sample, feeding both the identical index sequence and the
identical initialization, and records the parameter divergence together
with the per-step factor bounds the stability analysis relies on:

    same-sample step   : |grad(theta) - grad(theta')| <= nu_ell nu_sigma g^2 |dtheta|
    differing step     : |grad_z(theta) - grad_z'(theta')| <= 2 nu_ell alpha_sigma g
    envelope           : b_{t+1} = (1 + eta nu_ell nu_sigma g^2) b_t
                                   + [step hits the perturbed index] 2 eta nu_ell alpha_sigma g

with g the aggregated-feature supremum (or the spectral fallback the caller
resolved) and b_0 = 0, so |dtheta_t| <= b_t at every step.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .ego import EgoGraph
from .model import Activation, Loss, grad_from_aggregate


class SequenceMode(enum.Enum):
    UNIFORM_WITH_REPLACEMENT = "uniform"
    PERMUTATION_PER_EPOCH = "permutation"


@dataclass(frozen=True)
class SgdConfig:
    eta: float = 1.0
    epochs: int = 100
    seed: int = 0
    sequence_mode: SequenceMode = SequenceMode.UNIFORM_WITH_REPLACEMENT

    def __post_init__(self):
        if self.eta < 0:
            raise ValueError("eta must be nonnegative")
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")


def make_sequence(m: int, steps: int, seed: int, mode: SequenceMode) -> np.ndarray:
    """Deterministic sample-index sequence of the requested length."""
    if m < 1:
        raise ValueError("m must be at least 1")
    rng = np.random.default_rng(seed)
    if mode is SequenceMode.UNIFORM_WITH_REPLACEMENT:
        return rng.integers(0, m, size=steps)
    out = np.empty(steps, dtype=np.int64)
    pos = 0
    while pos < steps:
        perm = rng.permutation(m)
        take = min(m, steps - pos)
        out[pos : pos + take] = perm[:take]
        pos += take
    return out


def _aggregates(samples) -> tuple[np.ndarray, list]:
    a = np.stack([e.aggregate() for e, _ in samples])
    y = [y for _, y in samples]
    return a, y


@dataclass
class SgdResult:
    theta: np.ndarray
    epoch_losses: list[float]
    theta_per_epoch: list[np.ndarray]
    aborted: bool = False
    abort_step: int | None = None


def sgd_train(samples, cfg: SgdConfig, init: np.ndarray, act: Activation, loss: Loss) -> SgdResult:
    """Plain batch-size-1 SGD over (ego, label) samples.

    Records the mean training loss and a parameter snapshot at the end of
    every epoch. Non-finite loss or parameters abort the run with the step
    index recorded; the partial trace is kept.
    """
    if not samples:
        raise ValueError("training set is empty")
    for _, y in samples:
        loss.check_label(y)
    a_mat, ys = _aggregates(samples)
    y_arr = np.asarray(ys, dtype=np.float64)
    m = len(samples)
    theta = np.asarray(init, dtype=np.float64).copy()
    steps = cfg.epochs * m
    seq = make_sequence(m, steps, cfg.seed, cfg.sequence_mode)
    epoch_losses: list[float] = []
    snapshots: list[np.ndarray] = []
    for t in range(steps):
        k = int(seq[t])
        grad = grad_from_aggregate(a_mat[k], theta, act, loss, ys[k])
        theta = theta - cfg.eta * grad
        if not np.all(np.isfinite(theta)):
            return SgdResult(theta, epoch_losses, snapshots, aborted=True, abort_step=t + 1)
        if (t + 1) % m == 0:
            mean_loss = float(np.mean(loss.fn(act.fn(a_mat @ theta), y_arr)))
            if not np.isfinite(mean_loss):
                return SgdResult(theta, epoch_losses, snapshots, aborted=True, abort_step=t + 1)
            epoch_losses.append(mean_loss)
            snapshots.append(theta.copy())
    return SgdResult(theta, epoch_losses, snapshots)


@dataclass
class Perturbation:
    """Replacement of one training sample, by held-out ego or by feature row.

    Exactly one of replacement_ego / replacement_features is set. A feature
    row replaces the center node's own features inside the original ego, so
    the replacement aggregate is a + g_xx * (x' - x_center).
    """

    index: int
    label: object
    replacement_ego: EgoGraph | None = None
    replacement_features: np.ndarray | None = None

    def __post_init__(self):
        if (self.replacement_ego is None) == (self.replacement_features is None):
            raise ValueError("set exactly one of replacement_ego / replacement_features")

    def aggregate(self, original: EgoGraph) -> np.ndarray:
        if self.replacement_ego is not None:
            if self.replacement_ego.features_block.shape[1] != original.features_block.shape[1]:
                raise ValueError("replacement feature dimension mismatch")
            return self.replacement_ego.aggregate()
        row = np.asarray(self.replacement_features, dtype=np.float64)
        if row.shape != (original.features_block.shape[1],):
            raise ValueError("replacement feature dimension mismatch")
        return original.aggregate() + original.filter_block[0, 0] * (row - original.features_block[0])


@dataclass
class TwinTrace:
    steps: np.ndarray            # 1..T
    branch: np.ndarray           # "same" / "diff" per step
    delta_theta: np.ndarray      # |theta_S - theta_S'| after each step
    lemma_same_lhs: np.ndarray   # nan where not applicable
    lemma_same_rhs: np.ndarray
    lemma_diff_lhs: np.ndarray
    lemma_diff_rhs: np.ndarray
    envelope: np.ndarray
    epoch_delta_theta: np.ndarray
    g_lambda: float
    theta_a: np.ndarray
    theta_b: np.ndarray
    aborted: bool = False
    abort_step: int | None = None

    @property
    def final_delta_theta(self) -> float:
        return float(self.delta_theta[-1]) if len(self.delta_theta) else 0.0


def twin_train(
    samples,
    pert: Perturbation,
    cfg: SgdConfig,
    init: np.ndarray,
    act: Activation,
    loss: Loss,
    g_lambda: float | None = None,
) -> TwinTrace:
    """Run the coupled pair of SGD trajectories and audit every step.

    g_lambda is the constant used on the right-hand sides and in the
    envelope; when omitted it is measured as the largest aggregate norm over
    the union of both training sets.
    """
    if not samples:
        raise ValueError("training set is empty")
    m = len(samples)
    if not (0 <= pert.index < m):
        raise ValueError(f"perturbation index {pert.index} outside training set of size {m}")
    loss.check_label(pert.label)
    for _, y in samples:
        loss.check_label(y)

    a_mat, ys = _aggregates(samples)
    i = pert.index
    a_repl = pert.aggregate(samples[i][0])
    y_repl = pert.label
    if g_lambda is None:
        norms = np.linalg.norm(a_mat, axis=1)
        g_lambda = float(max(np.max(norms), np.linalg.norm(a_repl)))

    nu_ell, alpha_sigma, nu_sigma = loss.nu_ell, act.alpha_sigma, act.nu_sigma
    growth = 1.0 + cfg.eta * nu_ell * nu_sigma * g_lambda**2
    kick = 2.0 * cfg.eta * nu_ell * alpha_sigma * g_lambda

    steps = cfg.epochs * m
    seq = make_sequence(m, steps, cfg.seed, cfg.sequence_mode)
    theta_a = np.asarray(init, dtype=np.float64).copy()
    theta_b = theta_a.copy()

    branch = np.empty(steps, dtype=object)
    dtheta = np.full(steps, np.nan)
    l34_lhs = np.full(steps, np.nan)
    l34_rhs = np.full(steps, np.nan)
    l35_lhs = np.full(steps, np.nan)
    l35_rhs = np.full(steps, np.nan)
    env = np.full(steps, np.nan)
    epoch_dtheta: list[float] = []

    b = 0.0
    aborted = False
    abort_step = None
    t_done = 0
    for t in range(steps):
        k = int(seq[t])
        pre_gap = float(np.linalg.norm(theta_a - theta_b))
        grad_a = grad_from_aggregate(a_mat[k], theta_a, act, loss, ys[k])
        if k != i:
            grad_b = grad_from_aggregate(a_mat[k], theta_b, act, loss, ys[k])
            branch[t] = "same"
            l34_lhs[t] = float(np.linalg.norm(grad_a - grad_b))
            l34_rhs[t] = nu_ell * nu_sigma * g_lambda**2 * pre_gap
        else:
            grad_b = grad_from_aggregate(a_repl, theta_b, act, loss, y_repl)
            branch[t] = "diff"
            l35_lhs[t] = float(np.linalg.norm(grad_a - grad_b))
            l35_rhs[t] = 2.0 * nu_ell * alpha_sigma * g_lambda
        theta_a = theta_a - cfg.eta * grad_a
        theta_b = theta_b - cfg.eta * grad_b
        b = growth * b + (kick if k == i else 0.0)
        dtheta[t] = float(np.linalg.norm(theta_a - theta_b))
        env[t] = b
        t_done = t + 1
        if not (np.all(np.isfinite(theta_a)) and np.all(np.isfinite(theta_b))):
            aborted = True
            abort_step = t + 1
            break
        if (t + 1) % m == 0:
            epoch_dtheta.append(dtheta[t])

    return TwinTrace(
        steps=np.arange(1, t_done + 1),
        branch=branch[:t_done],
        delta_theta=dtheta[:t_done],
        lemma_same_lhs=l34_lhs[:t_done],
        lemma_same_rhs=l34_rhs[:t_done],
        lemma_diff_lhs=l35_lhs[:t_done],
        lemma_diff_rhs=l35_rhs[:t_done],
        envelope=env[:t_done],
        epoch_delta_theta=np.asarray(epoch_dtheta),
        g_lambda=g_lambda,
        theta_a=theta_a,
        theta_b=theta_b,
        aborted=aborted,
        abort_step=abort_step,
    )
