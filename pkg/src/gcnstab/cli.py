"""Command-line front end.

Subcommands tie the library into reproducible experiment pipelines:

    synth      generate a synthetic dataset directory
    spectra    extremal filter values for a dataset's graph
    interlace  per-node ego-block spectral check against the full graph
    train      plain SGD run, per-epoch train/test loss CSV
    twin       coupled perturbed pair, per-step divergence/audit CSV
    gap        per-epoch generalization gap CSV plus the matching bound
    bound      closed-form stability/gap bound as JSON
    stability  sampled uniform-stability estimate vs. its bound

Every file-producing run also writes a manifest (flags, resolved constants,
content hashes) sufficient to reproduce the outputs bit-exactly. Exit codes:
0 success, 1 usage or validation error, 2 numeric divergence (the partial
trace is still flushed, with non-finite cells serialized as ``nan``).
Cells that are structurally absent (for example the same-sample audit on a
replaced-sample step) are left empty rather than ``nan``, which is reserved
for divergence.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys

import numpy as np

from .datasets import generate_synthetic, load_canonical, save_canonical
from .ego import extract_ego, g_lambda_empirical
from .graphs import FILTER_KINDS, build_filter
from .model import ACTIVATIONS, get_loss
from .spectral import (
    DEFAULT_MAX_ITERS,
    DEFAULT_TOL,
    interlacing_check,
    lambda_max,
    random_walk_spectral_radius,
)
from .stability import (
    BoundInputs,
    beta_bound,
    empirical_gap,
    empirical_stability,
    gen_gap_bound,
)
from .training import Perturbation, SequenceMode, SgdConfig, sgd_train, twin_train

SPECTRA_SCHEMA = ("kind", "lambda_max", "method", "iterations", "residual")
TRAIN_SCHEMA = ("epoch", "train_loss", "test_loss")
TWIN_SCHEMA = (
    "step",
    "branch",
    "delta_theta_l2",
    "lemma34_lhs",
    "lemma34_rhs",
    "lemma35_lhs",
    "lemma35_rhs",
    "envelope",
)
GAP_SCHEMA = ("epoch", "train_loss", "test_loss", "gap", "train_err01", "test_err01")

DATASET_FILES = ("graph.tsv", "features.csv", "labels.csv", "split.json")


# ---------------------------------------------------------------------------
# Artifact plumbing
# ---------------------------------------------------------------------------

def _fmt(v) -> str:
    """One CSV cell: strings pass through, None is empty, floats at 17 sig digits."""
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    x = float(v)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


def emit_csv(rows, schema, path) -> bool:
    """Write header + rows with LF endings; returns True when a NaN was written."""
    lines = [",".join(schema)]
    saw_nan = False
    for rownum, row in enumerate(rows, start=1):
        if len(row) != len(schema):
            if len(row) < len(schema):
                raise ValueError(
                    f"row {rownum} has {len(row)} fields; missing column {schema[len(row)]!r}"
                )
            raise ValueError(
                f"row {rownum} has {len(row)} fields; extra value after column {schema[-1]!r}"
            )
        cells = []
        for val in row:
            text = _fmt(val)
            if text == "nan":
                saw_nan = True
            cells.append(text)
        lines.append(",".join(cells))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return saw_nan


def content_hash(path) -> str:
    """Git-style blob hash of a file's bytes."""
    with open(path, "rb") as fh:
        data = fh.read()
    return hashlib.sha1(b"blob %d\x00" % len(data) + data).hexdigest()


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    return v


def write_manifest(
    path,
    args,
    constants=None,
    g_lambda=None,
    lam_max=None,
    seeds=(),
    inputs=(),
    outputs=(),
    extra=None,
):
    flags = {k: _jsonable(v) for k, v in sorted(vars(args).items()) if k != "func"}
    manifest = {
        "subcommand": args.subcommand,
        "flags": flags,
        "constants": _jsonable(constants),
        "g_lambda": _jsonable(g_lambda),
        "lambda_max": _jsonable(lam_max),
        "seeds": [_jsonable(s) for s in seeds],
        "input_hashes": {os.path.basename(str(p)): content_hash(p) for p in inputs},
        "outputs": [str(p) for p in outputs],
        "output_hashes": {
            os.path.basename(str(p)): content_hash(p) for p in outputs if os.path.exists(p)
        },
    }
    if extra:
        manifest.update(_jsonable(extra))
    with open(path, "w", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _dataset_paths(data_dir):
    return [os.path.join(data_dir, name) for name in DATASET_FILES]


def _print_json(payload) -> str:
    text = json.dumps(_jsonable(payload), indent=2, sort_keys=True)
    print(text)
    return text


# ---------------------------------------------------------------------------
# Dataset-to-samples glue
# ---------------------------------------------------------------------------

def coerce_labels(labels, loss) -> np.ndarray:
    """Map between the {-1,+1} and {0,1} encodings to fit the loss domain."""
    vals = np.asarray(labels)
    if loss.label_domain == (0, 1):
        return np.where(vals > 0, 1, 0)
    return np.where(vals > 0, 1, -1)


def make_samples(ds, filter_name: str, loss):
    """Build the filter and the (ego, label) sample lists for both splits."""
    filt = build_filter(ds.graph, FILTER_KINDS[filter_name])
    labels = coerce_labels(ds.labels, loss)

    def pairs(idx):
        return [(extract_ego(filt, ds.features, int(i)), int(labels[i])) for i in idx]

    return filt, pairs(ds.train_idx), pairs(ds.test_idx)


def resolve_lambda(filt, features, source: str):
    """Pick the bound constant: empirical aggregate sup or spectral norm."""
    gl = g_lambda_empirical(filt, features)
    lam = gl.value if source == "g_lambda" else gl.lambda_max
    return lam, gl


def _constants_dict(act, loss, M=None):
    d = {
        "alpha_sigma": act.alpha_sigma,
        "nu_sigma": act.nu_sigma,
        "alpha_ell": loss.alpha_ell,
        "nu_ell": loss.nu_ell,
        "assumption_ok": loss.assumption_ok,
    }
    if M is not None:
        d["M"] = M
    return d


def _sgd_config(args) -> SgdConfig:
    return SgdConfig(
        eta=args.eta,
        epochs=args.epochs,
        seed=args.seed,
        sequence_mode=SequenceMode(args.sequence),
    )


# ---------------------------------------------------------------------------
# Subcommand handlers (each returns the process exit code)
# ---------------------------------------------------------------------------

def cmd_synth(args) -> int:
    ds = generate_synthetic(
        args.kind,
        args.n,
        args.d,
        args.seed,
        p=args.p,
        teacher_noise=args.teacher_noise,
        train_fraction=args.train_fraction,
    )
    save_canonical(ds, args.out)
    outputs = _dataset_paths(args.out)
    write_manifest(
        os.path.join(args.out, "manifest.json"),
        args,
        seeds=[args.seed],
        outputs=outputs,
        extra={"n": ds.n, "edges": ds.graph.edge_count, "train_size": len(ds.train_idx)},
    )
    return 0


def cmd_spectra(args) -> int:
    ds = load_canonical(args.data, normalize=args.normalize == "on")
    kinds = [args.filter] if args.filter else ["unnorm", "symnorm", "rw"]
    rows = []
    extra = {}
    for name in kinds:
        filt = build_filter(ds.graph, FILTER_KINDS[name])
        res = lambda_max(filt, tol=args.tol, max_iters=args.max_iters, seed=args.seed)
        rows.append((name, res.lambda_max, res.method, res.iterations, res.residual))
        if name == "rw":
            extra["rw_spectral_radius"] = random_walk_spectral_radius(
                ds.graph, tol=args.tol, max_iters=args.max_iters, seed=args.seed
            )
    saw_nan = emit_csv(rows, SPECTRA_SCHEMA, args.out)
    write_manifest(
        args.out + ".manifest.json",
        args,
        seeds=[args.seed],
        inputs=_dataset_paths(args.data),
        outputs=[args.out],
        extra=extra,
    )
    return 2 if saw_nan else 0


def cmd_interlace(args) -> int:
    ds = load_canonical(args.data, normalize=args.normalize == "on")
    filt = build_filter(ds.graph, FILTER_KINDS[args.filter])
    rep = interlacing_check(ds.graph, filt, tol=args.tol)
    payload = {
        "filter": args.filter,
        "n": ds.n,
        "lambda_full": rep.lambda_full,
        "max_ratio": rep.max_ratio,
        "max_ego_size": int(rep.ego_sizes.max()) if rep.ego_sizes.size else 0,
        "ok": rep.ok,
        "violations": [
            {"node": int(x), "lambda_ego": le, "lambda_full": lf}
            for x, le, lf in rep.violations
        ],
    }
    text = _print_json(payload)
    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            fh.write(text + "\n")
        write_manifest(
            args.out + ".manifest.json",
            args,
            lam_max=rep.lambda_full,
            inputs=_dataset_paths(args.data),
            outputs=[args.out],
        )
    return 0


def cmd_train(args) -> int:
    ds = load_canonical(args.data, normalize=args.normalize == "on")
    act = ACTIVATIONS[args.act]
    loss = get_loss(args.loss)
    filt, train_s, test_s = make_samples(ds, args.filter, loss)
    if not train_s:
        raise ValueError("training split is empty")
    cfg = _sgd_config(args)
    result = sgd_train(train_s, cfg, np.zeros(ds.features.d_in), act, loss)

    if test_s:
        a_te = np.stack([e.aggregate() for e, _ in test_s])
        y_te = np.asarray([y for _, y in test_s], dtype=np.float64)
    rows = []
    for ep, (tr, theta) in enumerate(zip(result.epoch_losses, result.theta_per_epoch), start=1):
        te = float(np.mean(loss.fn(act.fn(a_te @ theta), y_te))) if test_s else None
        rows.append((ep, tr, te))
    saw_nan = emit_csv(rows, TRAIN_SCHEMA, args.out)

    lam, gl = resolve_lambda(filt, ds.features, "g_lambda")
    write_manifest(
        args.out + ".manifest.json",
        args,
        constants=_constants_dict(act, loss),
        g_lambda=gl.value,
        lam_max=gl.lambda_max,
        seeds=[args.seed],
        inputs=_dataset_paths(args.data),
        outputs=[args.out],
        extra={"aborted": result.aborted, "abort_step": result.abort_step},
    )
    return 2 if result.aborted or saw_nan else 0


def cmd_twin(args) -> int:
    ds = load_canonical(args.data, normalize=args.normalize == "on")
    act = ACTIVATIONS[args.act]
    loss = get_loss(args.loss)
    filt, train_s, test_s = make_samples(ds, args.filter, loss)
    if not train_s:
        raise ValueError("training split is empty")
    if not test_s:
        raise ValueError("twin needs a held-out test sample as the replacement")
    repl_ego, repl_y = test_s[0]
    pert = Perturbation(index=args.perturb_index, label=repl_y, replacement_ego=repl_ego)
    cfg = _sgd_config(args)
    trace = twin_train(train_s, pert, cfg, np.zeros(ds.features.d_in), act, loss)

    rows = []
    for t in range(len(trace.steps)):
        same = trace.branch[t] == "same"
        rows.append(
            (
                int(trace.steps[t]),
                trace.branch[t],
                trace.delta_theta[t],
                trace.lemma_same_lhs[t] if same else None,
                trace.lemma_same_rhs[t] if same else None,
                trace.lemma_diff_lhs[t] if not same else None,
                trace.lemma_diff_rhs[t] if not same else None,
                trace.envelope[t],
            )
        )
    saw_nan = emit_csv(rows, TWIN_SCHEMA, args.out)

    lam_spec = lambda_max(filt).lambda_max
    write_manifest(
        args.out + ".manifest.json",
        args,
        constants=_constants_dict(act, loss),
        g_lambda=trace.g_lambda,
        lam_max=lam_spec,
        seeds=[args.seed],
        inputs=_dataset_paths(args.data),
        outputs=[args.out],
        extra={
            "aborted": trace.aborted,
            "abort_step": trace.abort_step,
            "final_delta_theta": trace.final_delta_theta,
        },
    )
    return 2 if trace.aborted or saw_nan else 0


def cmd_gap(args) -> int:
    ds = load_canonical(args.data, normalize=args.normalize == "on")
    act = ACTIVATIONS[args.act]
    loss = get_loss(args.loss)
    filt, train_s, test_s = make_samples(ds, args.filter, loss)
    if not train_s or not test_s:
        raise ValueError("gap needs nonempty train and test splits")
    cfg = _sgd_config(args)
    result = sgd_train(train_s, cfg, np.zeros(ds.features.d_in), act, loss)

    lam, gl = resolve_lambda(filt, ds.features, args.lambda_source)
    bounds = BoundInputs(
        eta=args.eta,
        alpha_ell=loss.alpha_ell,
        nu_ell=loss.nu_ell,
        alpha_sigma=act.alpha_sigma,
        nu_sigma=act.nu_sigma,
        lam=lam,
        T=cfg.epochs * len(train_s),
        m=len(train_s),
        delta=args.delta,
        lambda_source=args.lambda_source,
    )
    report = empirical_gap(result, train_s, test_s, act, loss, bounds, M=args.M)

    rows = list(
        zip(
            (int(e) for e in report.epochs),
            report.train_loss,
            report.test_loss,
            report.gap,
            report.train_err01,
            report.test_err01,
        )
    )
    saw_nan = emit_csv(rows, GAP_SCHEMA, args.out)
    _print_json(
        {
            "beta_m": report.beta_m,
            "gap_bound": report.gap_bound,
            "final_gap": report.final_gap,
            "ratio": report.ratio,
            "lambda": report.lambda_value,
            "lambda_source": report.lambda_source,
            "M": report.M,
            "aborted": report.aborted,
        }
    )
    write_manifest(
        args.out + ".manifest.json",
        args,
        constants=_constants_dict(act, loss, M=report.M),
        g_lambda=gl.value,
        lam_max=gl.lambda_max,
        seeds=[args.seed],
        inputs=_dataset_paths(args.data),
        outputs=[args.out],
        extra={
            "beta_m": report.beta_m,
            "gap_bound": report.gap_bound,
            "aborted": report.aborted,
        },
    )
    return 2 if result.aborted or saw_nan else 0


def cmd_bound(args) -> int:
    ds = load_canonical(args.data, normalize=args.normalize == "on")
    act = ACTIVATIONS[args.act]
    loss = get_loss(args.loss)
    filt = build_filter(ds.graph, FILTER_KINDS[args.filter])
    lam, gl = resolve_lambda(filt, ds.features, args.lambda_source)
    m = args.m if args.m is not None else len(ds.train_idx)
    if m < 1:
        raise ValueError("m must be at least 1 (empty training split and no --m)")
    T = args.steps if args.steps is not None else args.epochs * m
    bounds = BoundInputs(
        eta=args.eta,
        alpha_ell=loss.alpha_ell,
        nu_ell=loss.nu_ell,
        alpha_sigma=act.alpha_sigma,
        nu_sigma=act.nu_sigma,
        lam=lam,
        T=T,
        m=m,
        M=args.M,
        delta=args.delta,
        lambda_source=args.lambda_source,
    )
    beta = beta_bound(bounds)
    payload = {
        "beta_m": beta,
        "gap_bound": gen_gap_bound(beta, m, args.M, args.delta),
        "lambda_source": args.lambda_source,
        "g_lambda": gl.value,
        "lambda_max": gl.lambda_max,
        "T": T,
        "m": m,
        "M": args.M,
        "delta": args.delta,
        "constants": _constants_dict(act, loss),
    }
    text = _print_json(payload)
    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            fh.write(text + "\n")
        write_manifest(
            args.out + ".manifest.json",
            args,
            constants=_constants_dict(act, loss, M=args.M),
            g_lambda=gl.value,
            lam_max=gl.lambda_max,
            inputs=_dataset_paths(args.data),
            outputs=[args.out],
        )
    return 0


def cmd_stability(args) -> int:
    ds = load_canonical(args.data, normalize=args.normalize == "on")
    act = ACTIVATIONS[args.act]
    loss = get_loss(args.loss)
    filt, train_s, test_s = make_samples(ds, args.filter, loss)
    if not train_s:
        raise ValueError("training split is empty")
    if not test_s:
        raise ValueError("held-out pool is empty")
    cfg = _sgd_config(args)
    lam, gl = resolve_lambda(filt, ds.features, args.lambda_source)
    bounds = BoundInputs(
        eta=args.eta,
        alpha_ell=loss.alpha_ell,
        nu_ell=loss.nu_ell,
        alpha_sigma=act.alpha_sigma,
        nu_sigma=act.nu_sigma,
        lam=lam,
        T=cfg.epochs * len(train_s),
        m=len(train_s),
        M=args.M,
        delta=args.delta,
        lambda_source=args.lambda_source,
    )
    est = empirical_stability(
        train_s,
        test_s,
        test_s,
        cfg,
        np.zeros(ds.features.d_in),
        act,
        loss,
        bounds,
        perturbations=args.perturbations,
        repeats=args.repeats,
        g_lambda=lam,
    )
    payload = {
        "beta_hat": est.beta_hat,
        "two_beta_bound": est.two_beta_bound,
        "ratio": est.ratio,
        "per_perturbation": est.per_perturbation,
        "perturbations": est.perturbations,
        "repeats": est.repeats,
        "lambda": lam,
        "lambda_source": args.lambda_source,
        "T": bounds.T,
        "m": bounds.m,
    }
    text = _print_json(payload)
    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            fh.write(text + "\n")
        write_manifest(
            args.out + ".manifest.json",
            args,
            constants=_constants_dict(act, loss, M=args.M),
            g_lambda=gl.value,
            lam_max=gl.lambda_max,
            seeds=[args.seed],
            inputs=_dataset_paths(args.data),
            outputs=[args.out],
        )
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad flags; reserve 2 for divergence and use 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _add_data_flags(p, filter_required=True):
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument(
        "--filter",
        choices=sorted(FILTER_KINDS),
        required=filter_required,
        help="graph filter kind",
    )
    p.add_argument(
        "--normalize",
        choices=["on", "off"],
        default="on",
        help="row-normalize features on load (default on)",
    )


def _add_model_flags(p):
    p.add_argument("--act", choices=sorted(ACTIVATIONS), default="elu")
    p.add_argument("--loss", choices=["logistic", "xent"], default="logistic")


def _add_sgd_flags(p):
    p.add_argument("--eta", type=float, default=1.0, help="learning rate")
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--sequence",
        choices=[m.value for m in SequenceMode],
        default=SequenceMode.UNIFORM_WITH_REPLACEMENT.value,
        help="sample-index sequence mode",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gcnstab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic dataset directory")
    p.add_argument("--kind", choices=["er", "star", "complete", "cycle"], required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True, help="feature dimension")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--p", type=float, default=0.1, help="edge probability (er only)")
    p.add_argument("--teacher-noise", type=float, default=0.0)
    p.add_argument("--train-fraction", type=float, default=0.6)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("spectra", help="extremal filter values as CSV")
    _add_data_flags(p, filter_required=False)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--max-iters", type=int, default=DEFAULT_MAX_ITERS)
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_spectra)

    p = sub.add_parser("interlace", help="ego-block spectral check as JSON")
    _add_data_flags(p)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--out", help="optional JSON output path")
    p.set_defaults(func=cmd_interlace)

    p = sub.add_parser("train", help="single SGD run, per-epoch loss CSV")
    _add_data_flags(p)
    _add_model_flags(p)
    _add_sgd_flags(p)
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("twin", help="coupled perturbed pair, per-step CSV")
    _add_data_flags(p)
    _add_model_flags(p)
    _add_sgd_flags(p)
    p.add_argument("--perturb-index", type=int, default=0)
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_twin)

    p = sub.add_parser("gap", help="per-epoch generalization gap CSV + bound")
    _add_data_flags(p)
    _add_model_flags(p)
    _add_sgd_flags(p)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--M", type=float, default=None, help="loss cap (default from run)")
    p.add_argument("--lambda-source", choices=["g_lambda", "lambda_max"], default="g_lambda")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_gap)

    p = sub.add_parser("bound", help="closed-form bound as JSON")
    _add_data_flags(p)
    _add_model_flags(p)
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--steps", type=int, default=None, help="override T (default epochs*m)")
    p.add_argument("--m", type=int, default=None, help="override m (default train size)")
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--M", type=float, default=1.0, help="loss cap")
    p.add_argument("--lambda-source", choices=["g_lambda", "lambda_max"], default="g_lambda")
    p.add_argument("--out", help="optional JSON output path")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("stability", help="sampled stability estimate vs. bound")
    _add_data_flags(p)
    _add_model_flags(p)
    _add_sgd_flags(p)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--M", type=float, default=1.0, help="loss cap")
    p.add_argument("--perturbations", type=int, default=1)
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--lambda-source", choices=["g_lambda", "lambda_max"], default="g_lambda")
    p.add_argument("--out", help="optional JSON output path")
    p.set_defaults(func=cmd_stability)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as err:
        print(f"gcnstab: error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
