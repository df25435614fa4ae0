"""Proximal operators for the supported regularizers.

Every regularizer here is proper convex, so ``prox(v, step)`` is the unique
minimizer of ``r(u) + ||u - v||^2 / (2*step)`` and is nonexpansive in ``v``.
Free functions implement the closed forms; the operator classes bundle them
with ``evaluate`` for use as the ``g``/``h`` slots of a problem. Operators are
frozen value objects, so calls are pure and thread-safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ContractError, dot

__all__ = [
    "prox_zero",
    "prox_l1",
    "prox_sq_l2",
    "prox_box",
    "ProxOperator",
    "ZeroProx",
    "L1Prox",
    "SqL2Prox",
    "BoxProx",
    "make_prox",
]


def _check_step(step: float) -> None:
    if not (isinstance(step, (int, float)) and math.isfinite(step) and step > 0):
        raise ContractError(f"prox step must be a positive finite real, got {step!r}")


def _check_weight(weight: float) -> None:
    if not (math.isfinite(weight) and weight >= 0):
        raise ContractError(f"regularizer weight must be nonnegative and finite, got {weight!r}")


def prox_zero(v: np.ndarray, step: float) -> np.ndarray:
    """prox of r = 0: the identity."""
    _check_step(step)
    return v.copy()


def prox_l1(v: np.ndarray, step: float, weight: float) -> np.ndarray:
    """Soft threshold: sign(v_i) * max(|v_i| - step*weight, 0).

    At the boundary |v_i| == step*weight the result is exactly 0 (the unique
    minimizer).
    """
    _check_step(step)
    _check_weight(weight)
    tau = step * weight
    return np.sign(v) * np.maximum(np.abs(v) - tau, 0.0)


def prox_sq_l2(v: np.ndarray, step: float, weight: float) -> np.ndarray:
    """prox of r(u) = (weight/2) ||u||^2: shrink by 1/(1 + step*weight)."""
    _check_step(step)
    _check_weight(weight)
    return v / (1.0 + step * weight)


def prox_box(v: np.ndarray, step: float, lo: float, hi: float) -> np.ndarray:
    """Projection onto [lo, hi]^dim (step accepted for interface uniformity)."""
    _check_step(step)
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ContractError("box bounds must be finite")
    if lo > hi:
        raise ContractError(f"box requires lo <= hi, got lo={lo!r} hi={hi!r}")
    return np.clip(v, lo, hi)


class ProxOperator:
    """Interface: ``evaluate(v) -> real`` (possibly +inf for indicators) and
    ``prox(v, step) -> vector``."""

    kind: str = ""

    def evaluate(self, v: np.ndarray) -> float:
        raise NotImplementedError

    def prox(self, v: np.ndarray, step: float) -> np.ndarray:
        raise NotImplementedError

    def params(self) -> dict[str, float]:
        """Scalar parameters, for serialization."""
        return {}


@dataclass(frozen=True)
class ZeroProx(ProxOperator):
    kind: str = "zero"

    def evaluate(self, v: np.ndarray) -> float:
        return 0.0

    def prox(self, v: np.ndarray, step: float) -> np.ndarray:
        return prox_zero(v, step)


@dataclass(frozen=True)
class L1Prox(ProxOperator):
    """r(u) = weight * ||u||_1."""

    weight: float
    kind: str = "l1"

    def __post_init__(self):
        _check_weight(self.weight)

    def evaluate(self, v: np.ndarray) -> float:
        acc = 0.0
        for u in v.tolist():
            acc += abs(u)
        return self.weight * acc

    def prox(self, v: np.ndarray, step: float) -> np.ndarray:
        return prox_l1(v, step, self.weight)

    def params(self) -> dict[str, float]:
        return {"weight": self.weight}


@dataclass(frozen=True)
class SqL2Prox(ProxOperator):
    """r(u) = (weight/2) * ||u||^2."""

    weight: float
    kind: str = "sq_l2"

    def __post_init__(self):
        _check_weight(self.weight)

    def evaluate(self, v: np.ndarray) -> float:
        return 0.5 * self.weight * dot(v, v)

    def prox(self, v: np.ndarray, step: float) -> np.ndarray:
        return prox_sq_l2(v, step, self.weight)

    def params(self) -> dict[str, float]:
        return {"weight": self.weight}


@dataclass(frozen=True)
class BoxProx(ProxOperator):
    """Indicator of [lo, hi]^dim; evaluate is 0 inside, +inf outside."""

    lo: float
    hi: float
    kind: str = "box"

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ContractError("box bounds must be finite")
        if self.lo > self.hi:
            raise ContractError(f"box requires lo <= hi, got lo={self.lo!r} hi={self.hi!r}")

    def evaluate(self, v: np.ndarray) -> float:
        if np.all(v >= self.lo) and np.all(v <= self.hi):
            return 0.0
        return math.inf

    def prox(self, v: np.ndarray, step: float) -> np.ndarray:
        return prox_box(v, step, self.lo, self.hi)

    def params(self) -> dict[str, float]:
        return {"lo": self.lo, "hi": self.hi}


def make_prox(kind: str, **params: float) -> ProxOperator:
    """Construct an operator from its serialized form."""
    if kind == "zero":
        return ZeroProx()
    if kind == "l1":
        return L1Prox(weight=float(params["weight"]))
    if kind == "sq_l2":
        return SqL2Prox(weight=float(params["weight"]))
    if kind == "box":
        return BoxProx(lo=float(params["lo"]), hi=float(params["hi"]))
    raise ContractError(f"unknown prox kind {kind!r}")
