"""Closed-form stability bounds and their empirical counterparts.

beta_bound is the per-replacement uniform-stability constant

    beta_m = eta * alpha_ell * alpha_sigma * nu_ell * lambda^2
             * sum_{t=1}^{T} (1 + eta * nu_ell * nu_sigma * lambda^2)^{t-1} / m

and the generalization gap of a beta-stable algorithm with loss cap M holds
with probability 1 - delta below

    2 beta + (4 m beta + M) sqrt(log(1/delta) / (2 m)).

Both are pure arithmetic; overflow is reported as +inf (a vacuous bound is
a result, not an error). The empirical side measures the same quantities
from actual runs: the per-epoch train/test loss gap of a single trajectory,
and the largest mean-loss deviation produced by replacing one training
sample (an estimate whose sup is sampled, never exact).
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .model import Activation, Loss, default_loss_bound
from .training import Perturbation, SgdConfig, SgdResult, twin_train


@dataclass(frozen=True)
class BoundInputs:
    eta: float
    alpha_ell: float
    nu_ell: float
    alpha_sigma: float
    nu_sigma: float
    lam: float
    T: int
    m: int
    M: float = 1.0
    delta: float = 0.1
    lambda_source: str = "g_lambda"

    def __post_init__(self):
        for name in ("eta", "alpha_ell", "nu_ell", "alpha_sigma", "nu_sigma", "lam", "M"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.T < 0 or self.m < 1:
            raise ValueError("need T >= 0 and m >= 1")
        if not (0.0 < self.delta < 1.0):
            raise ValueError("delta must lie in (0, 1)")


def _geometric_sum(r: float, T: int) -> float:
    """sum_{t=1}^{T} r^{t-1}, closed form, +inf on overflow."""
    if T == 0:
        return 0.0
    if r == 1.0:
        return float(T)
    log_rT = T * math.log(r)
    if log_rT > 700.0:
        return math.inf
    return (r**T - 1.0) / (r - 1.0)


def beta_bound(b: BoundInputs) -> float:
    r = 1.0 + b.eta * b.nu_ell * b.nu_sigma * b.lam**2
    s = _geometric_sum(r, b.T)
    if math.isinf(s):
        return math.inf
    return b.eta * b.alpha_ell * b.alpha_sigma * b.nu_ell * b.lam**2 * s / b.m


def expected_delta_theta_bound(b: BoundInputs) -> float:
    """Bound on E|theta_S - theta_S'| after T uniform-with-replacement steps."""
    r = 1.0 + b.eta * b.nu_ell * b.nu_sigma * b.lam**2
    s = _geometric_sum(r, b.T)
    if math.isinf(s):
        return math.inf
    return 2.0 * b.eta * b.nu_ell * b.alpha_sigma * b.lam * s / b.m


def gen_gap_bound(beta: float, m: int, M: float, delta: float) -> float:
    if not (0.0 < delta < 1.0):
        raise ValueError("delta must lie in (0, 1)")
    if beta < 0 or M < 0:
        raise ValueError("beta and M must be nonnegative")
    if math.isinf(beta):
        return math.inf
    return 2.0 * beta + (4.0 * m * beta + M) * math.sqrt(math.log(1.0 / delta) / (2.0 * m))


@dataclass
class GapReport:
    epochs: np.ndarray
    train_loss: np.ndarray
    test_loss: np.ndarray
    gap: np.ndarray
    train_err01: np.ndarray
    test_err01: np.ndarray
    beta_m: float
    gap_bound: float
    ratio: float
    lambda_value: float
    lambda_source: str
    M: float
    observed_max_loss: float
    aborted: bool = False

    @property
    def final_gap(self) -> float:
        return float(self.gap[-1]) if len(self.gap) else math.inf


def _losses_and_errors(theta, a_mat, y_arr, act: Activation, loss: Loss):
    out = act.fn(a_mat @ theta)
    vals = loss.fn(out, y_arr)
    if loss.name == "logistic":
        pred = np.where(out >= 0.0, 1.0, -1.0)
    else:
        pred = np.where(out >= 0.5, 1.0, 0.0)
    return float(np.mean(vals)), float(np.mean(pred != y_arr)), float(np.max(vals))


def empirical_gap(
    result: SgdResult,
    train_samples,
    test_samples,
    act: Activation,
    loss: Loss,
    bounds: BoundInputs,
    M: float | None = None,
) -> GapReport:
    """Per-epoch |mean train loss - mean test loss| with the matching bound.

    The loss cap defaults to M = log(1 + exp(lambda * ||theta_T||)) from the
    realized final weights; pass M to override. Aborted runs report the gap
    rows recorded before the abort and an infinite final gap.
    """
    if not train_samples or not test_samples:
        raise ValueError("train and test sets must both be nonempty")
    a_tr = np.stack([e.aggregate() for e, _ in train_samples])
    y_tr = np.asarray([y for _, y in train_samples], dtype=np.float64)
    a_te = np.stack([e.aggregate() for e, _ in test_samples])
    y_te = np.asarray([y for _, y in test_samples], dtype=np.float64)

    rows = []
    observed = 0.0
    for theta in result.theta_per_epoch:
        tr_loss, tr_err, tr_max = _losses_and_errors(theta, a_tr, y_tr, act, loss)
        te_loss, te_err, te_max = _losses_and_errors(theta, a_te, y_te, act, loss)
        rows.append((tr_loss, te_loss, abs(tr_loss - te_loss), tr_err, te_err))
        observed = max(observed, tr_max, te_max)

    theta_norm = float(np.linalg.norm(result.theta)) if np.all(np.isfinite(result.theta)) else math.inf
    M_val = default_loss_bound(bounds.lam, theta_norm) if M is None else M
    bounds = replace(bounds, M=M_val)
    beta = beta_bound(bounds)
    bound = gen_gap_bound(beta, bounds.m, M_val, bounds.delta) if not math.isinf(M_val) else math.inf

    arr = np.asarray(rows) if rows else np.zeros((0, 5))
    final_gap = float(arr[-1, 2]) if len(arr) and not result.aborted else math.inf
    ratio = final_gap / bound if bound > 0 else math.inf
    return GapReport(
        epochs=np.arange(1, len(arr) + 1),
        train_loss=arr[:, 0],
        test_loss=arr[:, 1],
        gap=arr[:, 2],
        train_err01=arr[:, 3],
        test_err01=arr[:, 4],
        beta_m=beta,
        gap_bound=bound,
        ratio=ratio,
        lambda_value=bounds.lam,
        lambda_source=bounds.lambda_source,
        M=M_val,
        observed_max_loss=observed,
        aborted=result.aborted,
    )


@dataclass
class StabilityEstimate:
    beta_hat: float
    two_beta_bound: float
    ratio: float
    per_perturbation: list[float] = field(default_factory=list)
    perturbations: int = 0
    repeats: int = 0


def empirical_stability(
    train_samples,
    eval_samples,
    replacement_pool,
    cfg: SgdConfig,
    init: np.ndarray,
    act: Activation,
    loss: Loss,
    bounds: BoundInputs,
    perturbations: int = 1,
    repeats: int = 1,
    g_lambda: float | None = None,
    max_workers: int | None = None,
) -> StabilityEstimate:
    """Sampled estimate of the uniform-stability constant.

    For each perturbation index p the training set has sample p replaced by
    the p-th held-out candidate; beta_hat is the largest (over p and over
    evaluation points) absolute difference between mean losses of the
    original and perturbed trajectories, means taken over `repeats` seeds.
    Runs fan out across a thread pool; per-run seeds are fixed by (p, r) so
    the estimate is independent of scheduling.
    """
    if perturbations < 1 or repeats < 1:
        raise ValueError("need at least one perturbation and one repeat")
    if not replacement_pool:
        raise ValueError("replacement pool is empty")
    m = len(train_samples)
    a_ev = np.stack([e.aggregate() for e, _ in eval_samples])
    y_ev = np.asarray([y for _, y in eval_samples], dtype=np.float64)

    def one_run(p: int, r: int) -> tuple[np.ndarray, np.ndarray]:
        repl_ego, repl_y = replacement_pool[p % len(replacement_pool)]
        pert = Perturbation(index=p % m, label=repl_y, replacement_ego=repl_ego)
        run_cfg = replace(cfg, seed=cfg.seed + 7919 * p + r)
        trace = twin_train(train_samples, pert, run_cfg, init, act, loss, g_lambda=g_lambda)
        la = loss.fn(act.fn(a_ev @ trace.theta_a), y_ev)
        lb = loss.fn(act.fn(a_ev @ trace.theta_b), y_ev)
        return la, lb

    tasks = [(p, r) for p in range(perturbations) for r in range(repeats)]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        results = list(pool.map(lambda pr: one_run(*pr), tasks))

    per_p = []
    for p in range(perturbations):
        chunk = results[p * repeats : (p + 1) * repeats]
        mean_a = np.mean([la for la, _ in chunk], axis=0)
        mean_b = np.mean([lb for _, lb in chunk], axis=0)
        per_p.append(float(np.max(np.abs(mean_a - mean_b))))

    beta_hat = max(per_p)
    two_beta = 2.0 * beta_bound(bounds)
    return StabilityEstimate(
        beta_hat=beta_hat,
        two_beta_bound=two_beta,
        ratio=beta_hat / two_beta if two_beta > 0 else math.inf,
        per_perturbation=per_p,
        perturbations=perturbations,
        repeats=repeats,
    )
