"""The single-layer model: activations, losses, forward pass, and gradient.

Output at node x is act(a(x) @ theta) with a(x) the aggregated feature
vector; the exact parameter gradient of the per-sample loss is

    grad = loss'(f, y) * act'(u) * a,   u = a @ theta, f = act(u).

Each activation and loss carries two certified constants: alpha bounds the
first derivative, nu bounds the Lipschitz modulus of the first derivative
(i.e. the second derivative where it exists). Certification is by dense
grid maximization over [-50, 50] at step 1e-4 with the result rounded up
at the sixth decimal, so the published constant is never below the grid
supremum. ReLU is deliberately not offered: its derivative has no
Lipschitz modulus, which is exactly the regime the bounds exclude.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .ego import EgoGraph, FeatureMatrix
from .graphs import FilterMatrix

GRID_LO, GRID_HI, GRID_POINTS = -50.0, 50.0, 1_000_001


def _round_up_6(v: float) -> float:
    return math.ceil(v * 1e6 - 1e-9) / 1e6


def certify_bounds(d1: Callable, d2: Callable) -> tuple[float, float]:
    """Grid-maximize |d1| and |d2| over [-50, 50], rounding up at 1e-6."""
    grid = np.linspace(GRID_LO, GRID_HI, GRID_POINTS)
    alpha = _round_up_6(float(np.max(np.abs(d1(grid)))))
    nu = _round_up_6(float(np.max(np.abs(d2(grid)))))
    return alpha, nu


def _sigmoid(x):
    z = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + z), z / (1.0 + z))


def _elu(x):
    return np.where(x >= 0, x, np.expm1(np.minimum(x, 0.0)))


def _elu_d1(x):
    return np.where(x >= 0, 1.0, np.exp(np.minimum(x, 0.0)))


def _elu_d2(x):
    # The kink at 0 is scored with its left limit so the certified constant
    # covers pairs straddling it.
    return np.where(x <= 0, np.exp(np.minimum(x, 0.0)), 0.0)


def _sigmoid_d1(x):
    s = _sigmoid(x)
    return s * (1.0 - s)


def _sigmoid_d2(x):
    s = _sigmoid(x)
    return s * (1.0 - s) * (1.0 - 2.0 * s)


def _tanh_d1(x):
    t = np.tanh(x)
    return 1.0 - t * t


def _tanh_d2(x):
    t = np.tanh(x)
    return -2.0 * t * (1.0 - t * t)


@dataclass(frozen=True)
class Activation:
    name: str
    fn: Callable
    d1: Callable
    d2: Callable

    @property
    def alpha_sigma(self) -> float:
        return _activation_constants(self.name)[0]

    @property
    def nu_sigma(self) -> float:
        return _activation_constants(self.name)[1]


ACTIVATIONS: dict[str, Activation] = {
    "elu": Activation("elu", _elu, _elu_d1, _elu_d2),
    "sigmoid": Activation("sigmoid", _sigmoid, _sigmoid_d1, _sigmoid_d2),
    "tanh": Activation("tanh", np.tanh, _tanh_d1, _tanh_d2),
}

_CONSTANT_CACHE: dict[str, tuple[float, float]] = {}


def _activation_constants(name: str) -> tuple[float, float]:
    if name not in _CONSTANT_CACHE:
        act = ACTIVATIONS[name]
        _CONSTANT_CACHE[name] = certify_bounds(act.d1, act.d2)
    return _CONSTANT_CACHE[name]


def _logistic_loss(f, y):
    z = np.multiply(y, f)
    return np.maximum(0.0, -z) + np.log1p(np.exp(-np.abs(z)))


def _logistic_d1(f, y):
    return -y * _sigmoid(-np.multiply(y, f))


def _logistic_curv(z):
    # Second derivative of log(1 + exp(-z)) in z; used only for certification.
    s = _sigmoid(z)
    return s * (1.0 - s)


@dataclass(frozen=True)
class Loss:
    """Per-sample loss with certified slope/smoothness constants.

    assumption_ok is False when the constants technically exist (from a
    clamp) but are too large for the bounds to mean anything; reports carry
    the flag through.
    """

    name: str
    fn: Callable          # fn(f, y) -> loss value
    d1: Callable          # d/df
    alpha_ell: float
    nu_ell: float
    label_domain: tuple
    assumption_ok: bool

    def check_label(self, y) -> None:
        if y not in self.label_domain:
            raise ValueError(f"label {y!r} outside domain {self.label_domain} for {self.name}")


def _make_logistic() -> Loss:
    d1_in_z = lambda z: -_sigmoid(-z)
    alpha, nu = certify_bounds(d1_in_z, _logistic_curv)
    return Loss(
        name="logistic",
        fn=_logistic_loss,
        d1=_logistic_d1,
        alpha_ell=alpha,
        nu_ell=nu,
        label_domain=(-1, 1),
        assumption_ok=True,
    )


XENT_EPS = 1e-6


def _make_xent(eps: float = XENT_EPS) -> Loss:
    def fn(f, y):
        p = np.clip(f, eps, 1.0 - eps)
        return -(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))

    def d1(f, y):
        inside = (f > eps) & (f < 1.0 - eps)
        p = np.clip(f, eps, 1.0 - eps)
        return np.where(inside, (p - y) / (p * (1.0 - p)), 0.0)

    # Slope/curvature maxima sit at the clamp edge; closed forms, no grid.
    return Loss(
        name="xent",
        fn=fn,
        d1=d1,
        alpha_ell=1.0 / eps,
        nu_ell=1.0 / eps**2,
        label_domain=(0, 1),
        assumption_ok=False,
    )


_LOSS_CACHE: dict[str, Loss] = {}


def get_loss(name: str) -> Loss:
    if name not in _LOSS_CACHE:
        if name == "logistic":
            _LOSS_CACHE[name] = _make_logistic()
        elif name == "xent":
            _LOSS_CACHE[name] = _make_xent()
        else:
            raise ValueError(f"unknown loss {name!r}")
    return _LOSS_CACHE[name]


def derive_constants(kind: str) -> tuple[float, float]:
    """Certified (alpha, nu) for an activation name or loss name."""
    if kind in ACTIVATIONS:
        return _activation_constants(kind)
    loss = get_loss(kind)
    return loss.alpha_ell, loss.nu_ell


@dataclass
class ModelState:
    theta: np.ndarray
    act: Activation
    loss: Loss
    filter_ref: FilterMatrix | None = None

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=np.float64)
        if not np.all(np.isfinite(self.theta)):
            raise ValueError("theta must be finite")


def forward_full(f: FilterMatrix, x: FeatureMatrix, theta: np.ndarray, act: Activation) -> np.ndarray:
    """Per-node outputs act(g(L) X theta) via sparse products."""
    theta = np.asarray(theta, dtype=np.float64)
    if x.n != f.n:
        raise ValueError("feature row count does not match filter dimension")
    if theta.shape != (x.d_in,):
        raise ValueError("theta dimension does not match features")
    return act.fn(f.csr.matvec(x.values @ theta))


def grad_from_aggregate(a: np.ndarray, theta: np.ndarray, act: Activation, loss: Loss, y) -> np.ndarray:
    """Closed-form parameter gradient of the per-sample loss."""
    u = float(a @ theta)
    fval = float(act.fn(u))
    return float(loss.d1(fval, y)) * float(act.d1(u)) * a


def node_loss_grad(e: EgoGraph, theta: np.ndarray, act: Activation, loss: Loss, y) -> np.ndarray:
    loss.check_label(y)
    theta = np.asarray(theta, dtype=np.float64)
    return grad_from_aggregate(e.aggregate(), theta, act, loss, y)


def default_loss_bound(g_lambda: float, theta_norm: float) -> float:
    """Default cap M = log(1 + exp(g_lambda * ||theta||)) from Cauchy-Schwarz
    on the pre-activation."""
    z = g_lambda * theta_norm
    return float(np.maximum(0.0, z) + np.log1p(np.exp(-np.abs(z))))
