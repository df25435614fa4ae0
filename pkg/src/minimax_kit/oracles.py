"""Analysis-object oracles: y*(x), the envelope value and gradient, the proximal
gradient mapping, and the Lyapunov function.

``phi_value`` always evaluates f(x, y*(x)) - h(y*(x)); problems that also carry
a closed-form envelope keep it as an independent cross-check route, never as a
substitute. The y*(x) computation itself has two modes: ``closed_form`` defers
to the problem, ``iterative`` runs Nesterov-accelerated proximal ascent on the
strongly concave inner problem and certifies its accuracy from the stopping
residual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    ContractError,
    IndicatorInfeasibleError,
    NonconvergenceError,
    ValidationError,
    dot,
    norm2,
)

__all__ = [
    "AscentReport",
    "YStarOracle",
    "y_star",
    "phi_value",
    "grad_phi",
    "grad_mapping",
    "lyapunov",
    "fd_grad_phi",
    "ascent_distances",
]

MODES = ("closed_form", "iterative")


@dataclass(frozen=True)
class AscentReport:
    """Outcome of one inner ascent solve."""

    iters: int
    achieved: float  # last ||y_{k+1} - y_k||
    distance_bound: float  # kappa * achieved, from the geometric-rate stopping bound
    warm_started: bool


@dataclass
class YStarOracle:
    """Inner-maximizer oracle.

    The iterative mode warm-starts from the previous solve on the same problem
    (traces call it once per iteration, so this keeps the inner loop short) and
    records an AscentReport for the last solve. One instance must not be shared
    across threads; closed-form mode is pure.
    """

    mode: str = "closed_form"
    inner_tol: float = 1e-12
    inner_max_iters: int = 100000
    last_report: AscentReport | None = field(default=None, repr=False)
    _warm_key: int | None = field(default=None, repr=False)
    _warm_y: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValidationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not (math.isfinite(self.inner_tol) and self.inner_tol > 0):
            raise ValidationError(f"inner_tol must be a positive real, got {self.inner_tol!r}")
        if self.inner_max_iters < 1:
            raise ValidationError(f"inner_max_iters must be >= 1, got {self.inner_max_iters}")

    def reset_warm_start(self) -> None:
        self._warm_key = None
        self._warm_y = None


def _check_x(p, x: np.ndarray) -> None:
    if x.ndim != 1 or x.size != p.dim_x:
        raise ContractError(f"x has shape {x.shape}, problem expects ({p.dim_x},)")


def y_star(p, x: np.ndarray, oracle: YStarOracle) -> np.ndarray:
    """argmax_y f(x,y) - h(y), unique by strong concavity."""
    _check_x(p, x)
    if oracle.mode == "closed_form":
        closed = getattr(p, "closed_form_y_star", None)
        if closed is None:
            raise ContractError("problem has no closed-form y*; use an iterative oracle")
        return closed(x)
    return _ascend(p, x, oracle)


def _ascend(p, x: np.ndarray, oracle: YStarOracle) -> np.ndarray:
    """Nesterov-accelerated proximal ascent on y -> f(x,y) - h(y).

    Steps eta = 1/L with momentum gamma = (sqrt(kappa)-1)/(sqrt(kappa)+1); stops
    on ||y_{k+1} - y_k|| <= inner_tol. The returned point lies within
    kappa * achieved of the exact maximizer: the plain ascent map contracts at
    factor 1 - 1/kappa, so a fixed-point residual r certifies a distance of at
    most r / (1 - (1 - 1/kappa)) = kappa * r, and near convergence the stopping
    difference dominates the residual. The bound is stored in last_report.
    """
    eta = 1.0 / p.L
    sqk = math.sqrt(p.kappa)
    gamma = (sqk - 1.0) / (sqk + 1.0)

    warm = oracle._warm_key == id(p) and oracle._warm_y is not None and oracle._warm_y.size == p.dim_y
    y = oracle._warm_y.copy() if warm else np.zeros(p.dim_y)
    y_prev = y.copy()
    achieved = math.inf
    for k in range(oracle.inner_max_iters):
        v = y + gamma * (y - y_prev)
        y_next = p.h.prox(v + eta * p.grad2(x, v), eta)
        achieved = norm2(y_next - y)
        y_prev, y = y, y_next
        if achieved <= oracle.inner_tol:
            oracle.last_report = AscentReport(
                iters=k + 1,
                achieved=achieved,
                distance_bound=p.kappa * achieved,
                warm_started=warm,
            )
            oracle._warm_key = id(p)
            oracle._warm_y = y.copy()
            return y
    raise NonconvergenceError(
        f"inner ascent did not reach tol={oracle.inner_tol} within "
        f"{oracle.inner_max_iters} iterations (achieved {achieved:.3e})",
        last=y,
        achieved=achieved,
    )


def phi_value(p, x: np.ndarray, oracle: YStarOracle) -> float:
    """Envelope value f(x, y*(x)) - h(y*(x))."""
    ys = y_star(p, x, oracle)
    return p.f(x, ys) - p.h.evaluate(ys)


def grad_phi(p, x: np.ndarray, oracle: YStarOracle) -> np.ndarray:
    """Envelope gradient, grad1 f at (x, y*(x))."""
    ys = y_star(p, x, oracle)
    return p.grad1(x, ys)


def grad_mapping(p, x: np.ndarray, eta_x: float, oracle: YStarOracle) -> np.ndarray:
    """G(x) = (x - prox_{eta_x g}(x - eta_x grad_phi(x))) / eta_x.

    Zero exactly at critical points of the envelope objective; its norm is the
    convergence criterion everywhere downstream.
    """
    if not (math.isfinite(eta_x) and eta_x > 0):
        raise ContractError(f"eta_x must be a positive real, got {eta_x!r}")
    gp = grad_phi(p, x, oracle)
    moved = p.g.prox(x - eta_x * gp, eta_x)
    return (x - moved) / eta_x


def lyapunov(p, state, config, oracle: YStarOracle) -> float:
    """H(z_t) = Phi(x_t) + g(x_t) + 2 mu ||y_t - y*(x_t)||^2
    + (beta/eta_x) ||x_t - x_{t-1}||^2."""
    gval = p.g.evaluate(state.x)
    if gval == math.inf:
        raise IndicatorInfeasibleError("g(x_t) is infinite; the Lyapunov value is undefined here")
    phi = phi_value(p, state.x, oracle)
    obj = phi + gval
    dy = state.y - y_star(p, state.x, oracle)
    dx = state.x - state.x_prev
    return obj + 2.0 * p.mu * dot(dy, dy) + (config.beta / config.eta_x) * dot(dx, dx)


def fd_grad_phi(p, x: np.ndarray, oracle: YStarOracle, step: float = 1e-5) -> np.ndarray:
    """Central finite differences of phi_value, coordinate step step*max(1,|x_i|)."""
    _check_x(p, x)
    out = np.empty(p.dim_x)
    for i in range(p.dim_x):
        h = step * max(1.0, abs(float(x[i])))
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        out[i] = (phi_value(p, xp, oracle) - phi_value(p, xm, oracle)) / (2.0 * h)
    return out


def ascent_distances(p, x: np.ndarray, oracle: YStarOracle, num_iters: int) -> np.ndarray:
    """Distances ||y_k - y*(x)|| of the inner Nesterov ascent from a cold start,
    for k = 0..num_iters, measured against the closed form.

    Feeds the geometric-rate fit; does not touch the warm-start cache.
    """
    _check_x(p, x)
    closed = getattr(p, "closed_form_y_star", None)
    if closed is None:
        raise ContractError("rate measurement needs a closed-form y* as ground truth")
    if num_iters < 1:
        raise ContractError(f"num_iters must be >= 1, got {num_iters}")
    exact = closed(x)
    eta = 1.0 / p.L
    sqk = math.sqrt(p.kappa)
    gamma = (sqk - 1.0) / (sqk + 1.0)
    y = np.zeros(p.dim_y)
    y_prev = y.copy()
    dist = np.empty(num_iters + 1)
    dist[0] = norm2(y - exact)
    for k in range(num_iters):
        v = y + gamma * (y - y_prev)
        y_next = p.h.prox(v + eta * p.grad2(x, v), eta)
        y_prev, y = y, y_next
        dist[k + 1] = norm2(y - exact)
    return dist
