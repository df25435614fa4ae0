"""Shared numeric primitives: validated vectors, deterministic reductions, seeded
generators, and the trace record types the rest of the package emits.

Vectors are one-dimensional float64 numpy arrays. Constructors validate
finiteness; operations are pure and allocate fresh outputs. Reductions (``dot``,
``norm2``) accumulate strictly left to right in index order, so identical inputs
give bit-identical results on one platform. Cross-platform agreement is expected
to within 1 ulp per elementary operation (IEEE-754 doubles throughout) but is
documented here rather than asserted in tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ContractError",
    "ValidationError",
    "DivergenceError",
    "NonconvergenceError",
    "IndicatorInfeasibleError",
    "InapplicableConfigError",
    "InvariantViolation",
    "as_vector",
    "dot",
    "norm2",
    "axpy",
    "make_rng",
    "child_seed",
    "TraceRow",
    "RunTrace",
    "TRACE_COLUMNS",
    "MONOTONE_SLACK_REL",
]

# Absolute slack attached to every Lyapunov monotonicity assertion:
# slack(H) = MONOTONE_SLACK_REL * max(1, |H|). The decrease guarantees are
# exact-arithmetic statements; the slack absorbs double-precision drift only.
MONOTONE_SLACK_REL = 1e-9


class ContractError(ValueError):
    """An operation was called with arguments that violate its contract."""


class ValidationError(ValueError):
    """A spec or config object holds an invalid field value."""


class DivergenceError(RuntimeError):
    """A solver step produced a non-finite coordinate."""

    def __init__(self, t: int, quantity: str):
        super().__init__(f"non-finite {quantity} produced by the step at t={t}")
        self.t = t
        self.quantity = quantity


class NonconvergenceError(RuntimeError):
    """An iterative oracle hit its iteration cap before reaching tolerance."""

    def __init__(self, message: str, last: np.ndarray, achieved: float):
        super().__init__(message)
        self.last = last
        self.achieved = achieved


class IndicatorInfeasibleError(ValueError):
    """An indicator regularizer evaluates to +inf at the point in question."""


class InapplicableConfigError(ValueError):
    """A theory-bound check was requested for a config it does not cover."""


class InvariantViolation(RuntimeError):
    """A statistically checked invariant failed; carries the check's report."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


def as_vector(values, name: str = "vector") -> np.ndarray:
    """Copy ``values`` into a fresh finite 1-D float64 array."""
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ContractError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise ContractError(f"{name} must have positive dimension")
    if not np.all(np.isfinite(arr)):
        raise ContractError(f"{name} contains non-finite entries")
    return arr


def dot(a: np.ndarray, b: np.ndarray) -> float:
    """Inner product with strict left-to-right accumulation.

    Deliberately not ``np.dot``: numpy reduces pairwise/SIMD, which changes
    rounding and would break bit-exact trace reproduction.
    """
    _check_same_dim(a, b)
    acc = 0.0
    for u, v in zip(a.tolist(), b.tolist()):
        acc += u * v
    return acc


def norm2(a: np.ndarray) -> float:
    """Euclidean norm, sqrt(dot(a, a))."""
    return math.sqrt(dot(a, a))


def axpy(alpha: float, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """alpha*x + y, freshly allocated."""
    _check_same_dim(x, y)
    return alpha * x + y


def _check_same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.ndim != 1 or b.ndim != 1:
        raise ContractError("vectors must be one-dimensional")
    if a.size != b.size:
        raise ContractError(f"dimension mismatch: {a.size} vs {b.size}")


def make_rng(seed: int) -> np.random.Generator:
    """Seeded generator (numpy PCG64): identical stream for identical seed on
    every platform."""
    if not isinstance(seed, (int, np.integer)):
        raise ValidationError(f"seed must be an integer, got {type(seed).__name__}")
    if seed < 0 or seed > 2**64 - 1:
        raise ValidationError(f"seed must fit in an unsigned 64-bit integer, got {seed}")
    return np.random.default_rng(int(seed))


def child_seed(seed: int, *path: int) -> int:
    """Derive a deterministic sub-seed from a root seed and an index path.

    Used by sweeps so each (kappa, instance) cell gets an independent stream
    regardless of execution order.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


TRACE_COLUMNS = ("t", "lyapunov", "objective", "grad_map_norm", "dx_norm", "dy_norm", "y_gap")


@dataclass(frozen=True)
class TraceRow:
    """One diagnostic record: the Lyapunov value, objective, gradient-mapping
    norm, increment norms, and distance to the inner maximizer at iteration t."""

    t: int
    lyapunov: float
    objective: float
    grad_map_norm: float
    dx_norm: float
    dy_norm: float
    y_gap: float

    def validate(self) -> None:
        if self.t < 0:
            raise ContractError(f"row index must be >= 0, got {self.t}")
        for name in ("lyapunov", "objective"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ContractError(f"row t={self.t}: {name} must be finite, got {v!r}")
        for name in ("grad_map_norm", "dx_norm", "dy_norm", "y_gap"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ContractError(
                    f"row t={self.t}: {name} must be finite and nonnegative, got {v!r}"
                )


@dataclass
class RunTrace:
    """Diagnostic rows plus run metadata.

    Meta values are stored as strings (floats via ``repr``, which is
    shortest-round-trip) so the in-memory dict and the sidecar file carry
    exactly the same information.
    """

    rows: list[TraceRow]
    meta: dict[str, str]

    def validate(self) -> None:
        prev_t = -1
        for row in self.rows:
            row.validate()
            if row.t <= prev_t:
                raise ContractError(f"row indices must increase strictly: {row.t} after {prev_t}")
            prev_t = row.t

    def column(self, name: str) -> list[float]:
        if name not in TRACE_COLUMNS:
            raise ContractError(f"unknown trace column {name!r}")
        return [getattr(row, name) for row in self.rows]

    def meta_str(self, key: str) -> str:
        try:
            return self.meta[key]
        except KeyError:
            raise ContractError(f"meta key {key!r} missing") from None

    def meta_int(self, key: str) -> int:
        return int(self.meta_str(key))

    def meta_float(self, key: str) -> float:
        return float(self.meta_str(key))

    def meta_bool(self, key: str) -> bool:
        value = self.meta_str(key)
        if value not in ("true", "false"):
            raise ContractError(f"meta key {key!r} is not a boolean: {value!r}")
        return value == "true"
