"""One-step update rules and configuration for the three single-loop algorithms.

All three share the proximal descent step on x and differ in where the ascent
gradient lives:

* ``prox_gda``: both gradients at the stale point (x_t, y_t).
* ``prox_altgda``: ascent gradient at (x_{t+1}, y_t), the fresh x.
* ``prox_altgdam``: heavy-ball extrapolation on x, Nesterov extrapolation on
  y; the ascent gradient is evaluated at (x_{t+1}, ytilde_t), i.e. the fresh x
  and the extrapolated y.

Step functions are pure (state in, state out) and abort with a structured
DivergenceError on the first non-finite coordinate, so stepsizes above the
stability range fail loudly instead of propagating NaN into traces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ContractError, DivergenceError, ValidationError, as_vector

__all__ = [
    "ALGORITHMS",
    "SolverConfig",
    "SolverState",
    "default_config",
    "step",
    "step_gda",
    "step_altgda",
    "step_altgdam",
]

ALGORITHMS = ("prox_gda", "prox_altgda", "prox_altgdam")


@dataclass(frozen=True)
class SolverConfig:
    algorithm: str
    eta_x: float
    eta_y: float
    beta: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValidationError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        for name in ("eta_x", "eta_y"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValidationError(f"{name} must be a positive finite real, got {v!r}")
        for name in ("beta", "gamma"):
            v = getattr(self, name)
            if not (math.isfinite(v) and 0 <= v < 1):
                raise ValidationError(f"{name} must lie in [0, 1), got {v!r}")
        if self.algorithm != "prox_altgdam" and (self.beta != 0.0 or self.gamma != 0.0):
            raise ValidationError(f"{self.algorithm} has no momentum; beta and gamma must be 0")


def default_config(p, algorithm: str) -> SolverConfig:
    """Stepsizes/momenta each algorithm's guarantee is stated for.

    * prox_altgdam: eta_x = 1/(56 L kappa^1.5) (the admissible bound, taken
      with equality to maximize progress), eta_y = 1/L, beta = 1/4,
      gamma = (sqrt(kappa)-1)/(sqrt(kappa)+1).
    * prox_altgda: same stepsizes as a conservative common choice, no momentum.
    * prox_gda: eta_x = 1/(kappa^3 (L+3)^2), the baseline's maximum stepsize;
      eta_y = 1/L to match the others (its own analysis does not pin eta_y).
    """
    kappa = p.kappa
    if algorithm == "prox_gda":
        return SolverConfig(
            algorithm="prox_gda",
            eta_x=1.0 / (kappa**3 * (p.L + 3.0) ** 2),
            eta_y=1.0 / p.L,
        )
    if algorithm == "prox_altgda":
        return SolverConfig(
            algorithm="prox_altgda",
            eta_x=1.0 / (56.0 * p.L * kappa**1.5),
            eta_y=1.0 / p.L,
        )
    if algorithm == "prox_altgdam":
        sqk = math.sqrt(kappa)
        return SolverConfig(
            algorithm="prox_altgdam",
            eta_x=1.0 / (56.0 * p.L * kappa**1.5),
            eta_y=1.0 / p.L,
            beta=0.25,
            gamma=(sqk - 1.0) / (sqk + 1.0),
        )
    raise ValidationError(f"algorithm must be one of {ALGORITHMS}, got {algorithm!r}")


@dataclass
class SolverState:
    """z_t = (x_t, y_t, x_{t-1}) plus y_{t-1}, which the Nesterov step needs."""

    x: np.ndarray
    y: np.ndarray
    x_prev: np.ndarray
    y_prev: np.ndarray
    t: int

    @classmethod
    def initial(cls, x0, y0) -> "SolverState":
        """State at t=0 with x_{-1} = x_0 and y_{-1} = y_0."""
        x0 = as_vector(x0, "x0")
        y0 = as_vector(y0, "y0")
        return cls(x=x0, y=y0, x_prev=x0.copy(), y_prev=y0.copy(), t=0)


def _check_dims(p, s: SolverState) -> None:
    if s.x.size != p.dim_x or s.x_prev.size != p.dim_x:
        raise ContractError(f"state x has dim {s.x.size}, problem expects {p.dim_x}")
    if s.y.size != p.dim_y or s.y_prev.size != p.dim_y:
        raise ContractError(f"state y has dim {s.y.size}, problem expects {p.dim_y}")


def _check_finite(v: np.ndarray, quantity: str, t: int) -> None:
    if not np.all(np.isfinite(v)):
        raise DivergenceError(t, quantity)


def step_gda(p, s: SolverState, c: SolverConfig) -> SolverState:
    """Simultaneous update: both gradients at (x_t, y_t), with prox wrappers."""
    if c.algorithm != "prox_gda":
        raise ContractError(f"config is for {c.algorithm}, not prox_gda")
    _check_dims(p, s)
    g1 = p.grad1(s.x, s.y)
    g2 = p.grad2(s.x, s.y)
    x_new = p.g.prox(s.x - c.eta_x * g1, c.eta_x)
    _check_finite(x_new, "x", s.t)
    y_new = p.h.prox(s.y + c.eta_y * g2, c.eta_y)
    _check_finite(y_new, "y", s.t)
    return SolverState(x=x_new, y=y_new, x_prev=s.x, y_prev=s.y, t=s.t + 1)


def step_altgda(p, s: SolverState, c: SolverConfig) -> SolverState:
    """Alternating update: the ascent gradient sees the fresh x_{t+1}."""
    if c.algorithm != "prox_altgda":
        raise ContractError(f"config is for {c.algorithm}, not prox_altgda")
    _check_dims(p, s)
    x_new = p.g.prox(s.x - c.eta_x * p.grad1(s.x, s.y), c.eta_x)
    _check_finite(x_new, "x", s.t)
    y_new = p.h.prox(s.y + c.eta_y * p.grad2(x_new, s.y), c.eta_y)
    _check_finite(y_new, "y", s.t)
    return SolverState(x=x_new, y=y_new, x_prev=s.x, y_prev=s.y, t=s.t + 1)


def step_altgdam(p, s: SolverState, c: SolverConfig) -> SolverState:
    """Momentum update:

        x~_t    = x_t + beta (x_t - x_{t-1})
        x_{t+1} = prox_{eta_x g}(x~_t - eta_x grad1 f(x_t, y_t))
        y~_t    = y_t + gamma (y_t - y_{t-1})
        y_{t+1} = prox_{eta_y h}(y~_t + eta_y grad2 f(x_{t+1}, y~_t))

    The descent gradient stays at x_t (heavy ball); the ascent gradient is
    taken at the extrapolated y~_t (Nesterov), not at y_t.
    """
    if c.algorithm != "prox_altgdam":
        raise ContractError(f"config is for {c.algorithm}, not prox_altgdam")
    _check_dims(p, s)
    x_ex = s.x + c.beta * (s.x - s.x_prev)
    x_new = p.g.prox(x_ex - c.eta_x * p.grad1(s.x, s.y), c.eta_x)
    _check_finite(x_new, "x", s.t)
    y_ex = s.y + c.gamma * (s.y - s.y_prev)
    y_new = p.h.prox(y_ex + c.eta_y * p.grad2(x_new, y_ex), c.eta_y)
    _check_finite(y_new, "y", s.t)
    return SolverState(x=x_new, y=y_new, x_prev=s.x, y_prev=s.y, t=s.t + 1)


_STEPS = {
    "prox_gda": step_gda,
    "prox_altgda": step_altgda,
    "prox_altgdam": step_altgdam,
}


def step(p, s: SolverState, c: SolverConfig) -> SolverState:
    """Advance one iteration of the configured algorithm."""
    return _STEPS[c.algorithm](p, s, c)
