"""End-to-end acceptance checks.

Every test prints one PASS/FAIL line (run with -s to see them) and asserts
the same condition, so the suite doubles as a human-readable report.
"""
import math
import time

import numpy as np
import pytest

from gcnstab import (
    ACTIVATIONS,
    FILTER_KINDS,
    BoundInputs,
    FeatureMatrix,
    FilterKind,
    Perturbation,
    SgdConfig,
    beta_bound,
    build_filter,
    dense_lambda_max,
    empirical_gap,
    empirical_stability,
    expected_delta_theta_bound,
    extract_ego,
    forward_full,
    g_lambda_empirical,
    gen_gap_bound,
    generate_synthetic,
    get_loss,
    grad_from_aggregate,
    interlacing_check,
    lambda_max,
    node_output,
    sgd_train,
    twin_train,
)
from gcnstab.datasets import complete_graph, cycle_graph, er_graph, star_graph

ELU = ACTIVATIONS["elu"]
LOGISTIC = get_loss("logistic")


def report(name, ok):
    print(("PASS: " if ok else "FAIL: ") + name, flush=True)
    assert ok, name


def labeled_samples(ds, filt, idx):
    labels = np.where(ds.labels > 0, 1, -1)
    return [(extract_ego(filt, ds.features, int(i)), int(labels[i])) for i in idx]


def test_criterion_1_interlacing_zero_violations():
    t0 = time.time()
    graphs = {
        "er200": er_graph(200, 0.05, np.random.default_rng(0)),
        "star50": star_graph(50),
        "complete20": complete_graph(20),
        "cycle30": cycle_graph(30),
    }
    violations = 0
    for g in graphs.values():
        for kind in ("unnorm", "symnorm", "rw"):
            rep = interlacing_check(g, build_filter(g, FILTER_KINDS[kind]), tol=1e-9)
            violations += len(rep.violations)
    elapsed = time.time() - t0
    report(
        f"interlacing: 0 violations across 4 graphs x 3 filters in {elapsed:.1f}s",
        violations == 0 and elapsed < 30.0,
    )


def test_criterion_2_spectral_facts():
    ok = True
    # symmetric-normalized filter never exceeds 2
    for seed in range(3):
        g = er_graph(80, 0.1, np.random.default_rng(seed))
        ok &= lambda_max(build_filter(g, FilterKind.SYM_NORMALIZED)).lambda_max <= 2.0 + 1e-9
    ok &= lambda_max(build_filter(star_graph(40), FilterKind.SYM_NORMALIZED)).lambda_max <= 2.0 + 1e-9

    # complete graph on 10 nodes: largest unnormalized filter value is 10
    k10 = lambda_max(build_filter(complete_graph(10), FilterKind.UNNORMALIZED)).lambda_max
    ok &= abs(k10 - 10.0) <= 1e-6

    # 5-node star: largest unnormalized filter value is 3
    s5 = lambda_max(build_filter(star_graph(5), FilterKind.UNNORMALIZED)).lambda_max
    ok &= abs(s5 - 3.0) <= 1e-6

    # power iteration agrees with the dense solver on graphs up to 200 nodes
    worst = 0.0
    cases = [
        er_graph(200, 0.05, np.random.default_rng(1)),
        er_graph(120, 0.06, np.random.default_rng(2)),
        star_graph(50),
        cycle_graph(30),
        complete_graph(20),
    ]
    for g in cases:
        for kind in FilterKind:
            filt = build_filter(g, kind)
            p = lambda_max(filt).lambda_max
            d = dense_lambda_max(filt.to_dense())
            worst = max(worst, abs(p - d))
    ok &= worst <= 1e-8
    report(
        f"spectral facts: symnorm<=2, K10=10, star5=3, power-vs-dense agree to {worst:.2e}",
        ok,
    )


def test_criterion_3_gradient_matches_finite_differences():
    h = 1e-6
    worst = 0.0
    for act_name in ("elu", "sigmoid", "tanh"):
        for loss_name in ("logistic", "xent"):
            act = ACTIVATIONS[act_name]
            loss = get_loss(loss_name)
            rng = np.random.default_rng(314159)
            done = 0
            while done < 100:
                d = int(rng.integers(1, 5))
                a = rng.uniform(-0.8, 0.8, d)
                theta = rng.uniform(-0.8, 0.8, d)
                y = int(rng.choice(loss.label_domain))
                out = float(act.fn(float(a @ theta)))
                if loss_name == "xent" and (
                    abs(out - 1e-6) < 1e-4 or abs(out - (1.0 - 1e-6)) < 1e-4
                ):
                    continue
                grad = grad_from_aggregate(a, theta, act, loss, y)
                fd = np.zeros(d)
                for j in range(d):
                    tp, tm = theta.copy(), theta.copy()
                    tp[j] += h
                    tm[j] -= h
                    fd[j] = (
                        float(loss.fn(act.fn(float(a @ tp)), y))
                        - float(loss.fn(act.fn(float(a @ tm)), y))
                    ) / (2 * h)
                err = np.linalg.norm(grad - fd)
                if err > 0:
                    rel = err / max(np.linalg.norm(fd), 1e-12)
                    worst = max(worst, rel)
                    assert rel <= 1e-6, (act_name, loss_name, rel)
                done += 1
    report(f"gradient vs central differences: 600 instances, worst rel err {worst:.2e}", worst <= 1e-6)


def test_criterion_4_ego_equals_full_forward():
    worst = 0.0
    graphs = [
        er_graph(50, 0.1, np.random.default_rng(3)),
        star_graph(12),
        cycle_graph(9),
    ]
    rng = np.random.default_rng(4)
    for g in graphs:
        x = FeatureMatrix(rng.standard_normal((g.n, 5)))
        theta = rng.standard_normal(5)
        for kind in FilterKind:
            filt = build_filter(g, kind)
            for act_name in ("elu", "sigmoid", "tanh"):
                act = ACTIVATIONS[act_name]
                full = forward_full(filt, x, theta, act)
                for node in range(g.n):
                    ego = extract_ego(filt, x, node)
                    worst = max(worst, abs(node_output(ego, theta, act) - full[node]))
    report(f"ego view equals full forward pass: max |diff| = {worst:.2e}", worst <= 1e-12)


def test_criterion_5_twin_runs_satisfy_stepwise_bounds():
    kinds = ["unnorm", "symnorm", "rw"]
    configs = [(seed, kind) for seed in range(7) for kind in kinds][:20]
    worst34 = worst35 = worst_env = -math.inf
    for seed, kind in configs:
        ds = generate_synthetic("er", 60, 8, seed, p=0.1)
        feats = FeatureMatrix(ds.features.values * 0.5)
        filt = build_filter(ds.graph, FILTER_KINDS[kind])
        lam = lambda_max(filt).lambda_max
        labels = np.where(ds.labels > 0, 1, -1)
        train = [(extract_ego(filt, feats, int(i)), int(labels[i])) for i in ds.train_idx]
        test = [(extract_ego(filt, feats, int(i)), int(labels[i])) for i in ds.test_idx]
        pert = Perturbation(index=0, label=test[0][1], replacement_ego=test[0][0])
        tr = twin_train(train, pert, SgdConfig(eta=1.0, epochs=5, seed=seed),
                        np.zeros(8), ELU, LOGISTIC, g_lambda=lam)
        assert not tr.aborted
        same = tr.branch == "same"
        diff = ~same
        if same.any():
            worst34 = max(worst34, float(np.max(tr.lemma_same_lhs[same] - tr.lemma_same_rhs[same])))
        if diff.any():
            worst35 = max(worst35, float(np.max(tr.lemma_diff_lhs[diff] - tr.lemma_diff_rhs[diff])))
        worst_env = max(worst_env, float(np.max(tr.delta_theta - tr.envelope)))
    ok = worst34 <= 1e-9 and worst35 <= 1e-9 and worst_env <= 1e-9
    report(
        "twin-run audits: 20 runs, worst slack "
        f"same={worst34:.2e} diff={worst35:.2e} envelope={worst_env:.2e}",
        ok,
    )


def test_criterion_6_mean_divergence_within_expectation_bound():
    ds = generate_synthetic("er", 100, 8, 0, p=0.05)
    filt = build_filter(ds.graph, FILTER_KINDS["symnorm"])
    train = labeled_samples(ds, filt, ds.train_idx)
    test = labeled_samples(ds, filt, ds.test_idx)
    pert = Perturbation(index=0, label=test[0][1], replacement_ego=test[0][0])
    finals = []
    g_used = None
    for seed in range(100):
        tr = twin_train(train, pert, SgdConfig(eta=0.1, epochs=5, seed=seed),
                        np.zeros(8), ELU, LOGISTIC)
        assert not tr.aborted
        finals.append(tr.final_delta_theta)
        g_used = tr.g_lambda
    finals = np.asarray(finals)
    m = len(train)
    bound = expected_delta_theta_bound(
        BoundInputs(eta=0.1, alpha_ell=LOGISTIC.alpha_ell, nu_ell=LOGISTIC.nu_ell,
                    alpha_sigma=ELU.alpha_sigma, nu_sigma=ELU.nu_sigma,
                    lam=g_used, T=5 * m, m=m)
    )
    se = finals.std(ddof=1) / math.sqrt(len(finals))
    ok = finals.mean() <= bound + 3 * se
    report(
        f"mean parameter divergence: {finals.mean():.4g} <= bound {bound:.4g} + 3SE",
        ok,
    )


def test_criterion_7_bound_arithmetic():
    b1 = beta_bound(BoundInputs(eta=0.1, alpha_ell=1.0, nu_ell=0.25, alpha_sigma=1.0,
                                nu_sigma=1.0, lam=2.0, T=1, m=100))
    b2 = beta_bound(BoundInputs(eta=0.1, alpha_ell=1.0, nu_ell=0.25, alpha_sigma=1.0,
                                nu_sigma=1.0, lam=2.0, T=2, m=100))
    gap = gen_gap_bound(b1, m=100, M=1.0, delta=0.1)
    ok = (
        abs(b1 - 0.001) <= 1e-12
        and abs(b2 - 0.0021) <= 1e-12
        and abs(gap - 0.1522176218402543) <= 1e-12
        and abs(gap - 0.1522177) <= 1e-6
    )
    report(f"bound arithmetic: beta(1)={b1:.6g} beta(2)={b2:.6g} gap={gap:.10g}", ok)


def test_criterion_8_unnormalized_filter_is_least_stable():
    t0 = time.time()
    seeds = [1, 2, 3, 4, 5]
    kinds = ["unnorm", "symnorm", "rw"]
    all_ok = True
    lines = []
    for seed in seeds:
        ds = generate_synthetic("er", 300, 16, seed, p=0.03)
        gaps = {}
        dths = {}
        for kind in kinds:
            filt = build_filter(ds.graph, FILTER_KINDS[kind])
            train = labeled_samples(ds, filt, ds.train_idx)
            test = labeled_samples(ds, filt, ds.test_idx)
            cfg = SgdConfig(eta=1.0, epochs=100, seed=seed)
            init = np.zeros(16)
            with np.errstate(all="ignore"):
                res = sgd_train(train, cfg, init, ELU, LOGISTIC)
                lam = g_lambda_empirical(filt, ds.features).value
                b = BoundInputs(eta=1.0, alpha_ell=1.0, nu_ell=0.25, alpha_sigma=1.0,
                                nu_sigma=1.0, lam=lam, T=cfg.epochs * len(train), m=len(train))
                gaps[kind] = empirical_gap(res, train, test, ELU, LOGISTIC, b).final_gap
                pert = Perturbation(index=0, label=test[0][1], replacement_ego=test[0][0])
                tr = twin_train(train, pert, cfg, init, ELU, LOGISTIC)
            dths[kind] = math.inf if tr.aborted else tr.final_delta_theta
        gap_ok = gaps["unnorm"] > gaps["symnorm"] and gaps["unnorm"] > gaps["rw"]
        dth_ok = dths["unnorm"] > dths["symnorm"] and dths["unnorm"] > dths["rw"]
        all_ok &= gap_ok and dth_ok
        lines.append(f"seed {seed}: gap u/s/r={gaps['unnorm']:.3g}/{gaps['symnorm']:.3g}/{gaps['rw']:.3g} "
                     f"dtheta u/s/r={dths['unnorm']:.3g}/{dths['symnorm']:.3g}/{dths['rw']:.3g}")
    elapsed = time.time() - t0
    for ln in lines:
        print(ln, flush=True)
    report(
        f"filter separation on er(300, 0.03): unnormalized largest in gap and divergence "
        f"for all {len(seeds)} seeds ({elapsed:.0f}s)",
        all_ok and elapsed < 300.0,
    )


def test_criterion_9_empirical_stability_within_two_beta():
    ok = True
    results = []
    for eta, epochs in [(0.05, 2), (0.1, 5), (0.1, 2)]:
        ds = generate_synthetic("er", 40, 6, 3, p=0.15)
        filt = build_filter(ds.graph, FILTER_KINDS["symnorm"])
        train = labeled_samples(ds, filt, ds.train_idx)
        test = labeled_samples(ds, filt, ds.test_idx)
        lam = g_lambda_empirical(filt, ds.features).value
        m = len(train)
        b = BoundInputs(eta=eta, alpha_ell=LOGISTIC.alpha_ell, nu_ell=LOGISTIC.nu_ell,
                        alpha_sigma=ELU.alpha_sigma, nu_sigma=ELU.nu_sigma,
                        lam=lam, T=epochs * m, m=m)
        est = empirical_stability(train, test, test, SgdConfig(eta=eta, epochs=epochs, seed=0),
                                  np.zeros(6), ELU, LOGISTIC, b,
                                  perturbations=3, repeats=3)
        ok &= est.beta_hat <= est.two_beta_bound
        results.append(f"eta={eta} epochs={epochs}: beta_hat={est.beta_hat:.3g} <= 2beta={est.two_beta_bound:.3g}")
    report("empirical stability within twice the closed-form constant: " + "; ".join(results), ok)
