"""Synthetic minimax families with exact constants and closed-form oracles.

Both families are built from diagonal spectra so every constant is exact with
no eigensolver: Q is an m x m diagonal matrix (stored as its diagonal ``q``),
the coupling matrix is diagonal-rectangular (stored as its min(m,n) singular
values ``a``), and

    f(x, y) = 0.5 x^T Q x + <y, w(x)> - (mu/2) ||y||^2

where ``w(x)`` collects the coupling and the linear term:

* ``QuadCoupledProblem``:     w(x) = A^T x + b  (h = 0)
* ``SparseAdversarialProblem``: w(x) = A x - b  (h = lambda_y * l1)

The smoothness constant is L = max(||Q||, ||A||, mu): the largest of the
per-block gradient Lipschitz constants (each gradient block, one argument
varied at a time), which is exactly what every stepsize rule and bound in this
package consumes. The joint Hessian's spectral norm can exceed this value for
coupled quadratics, so `check_smoothness` checks the block ratios.

A problem object is any duck-typed value with the `MinimaxProblem` attributes;
the two families additionally provide `closed_form_y_star`/`closed_form_phi`
and an analytic lower bound of Phi + g. Problems are immutable after
construction (arrays are frozen), so all oracle calls are pure and thread-safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol, runtime_checkable

import numpy as np

from . import configdoc
from .core import ContractError, InvariantViolation, ValidationError, as_vector, dot, make_rng
from .prox import L1Prox, ProxOperator, ZeroProx, make_prox

__all__ = [
    "MinimaxProblem",
    "QuadCoupledProblem",
    "SparseAdversarialProblem",
    "ProblemSpec",
    "FAMILIES",
    "SAMPLE_RADIUS",
    "CURV_FLOOR",
    "generate",
    "check_smoothness",
    "SmoothnessReport",
    "problem_to_entries",
    "problem_from_entries",
    "save_problem",
    "load_problem",
]

FAMILIES = ("quad_coupled", "sparse_adversarial")

# Box for statistical property checks: quadratic structure makes the measured
# ratios position-independent, the box only bounds trace magnitudes.
SAMPLE_RADIUS = 10.0

# Generated problems satisfy Q + A A^T / mu >= CURV_FLOOR * L * I. Anything
# >= 0.01 L keeps Phi + g coercive with a quantifiable buffer; 0.25 also keeps
# iteration counts desk-scale since the envelope's slowest mode is ~1/(eta_x h_min).
CURV_FLOOR = 0.25


@runtime_checkable
class MinimaxProblem(Protocol):
    """What the solvers and oracles require of a problem."""

    mu: float
    g: ProxOperator
    h: ProxOperator

    @property
    def L(self) -> float: ...

    @property
    def kappa(self) -> float: ...

    @property
    def dim_x(self) -> int: ...

    @property
    def dim_y(self) -> int: ...

    def f(self, x: np.ndarray, y: np.ndarray) -> float: ...

    def grad1(self, x: np.ndarray, y: np.ndarray) -> np.ndarray: ...

    def grad2(self, x: np.ndarray, y: np.ndarray) -> np.ndarray: ...


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


class _DiagonalFamily:
    """Shared implementation: everything except the sign of b in w(x) and the
    inner regularizer h."""

    # subclasses set: family (str), b_sign (+1.0 or -1.0)
    family = ""
    b_sign = 0.0

    def __init__(self, q, a, b, mu, g, seed=None):
        self.q = _freeze(as_vector(q, "q"))
        self.b = _freeze(as_vector(b, "b"))
        k0 = min(self.q.size, self.b.size)
        a = np.array(a, dtype=np.float64)
        if a.ndim != 1 or a.size != k0:
            raise ContractError(f"a must hold the min(dim_x, dim_y)={k0} singular values")
        if not np.all(np.isfinite(a)) or np.any(a < 0):
            raise ContractError("singular values must be finite and nonnegative")
        self.a = _freeze(a)
        if not (isinstance(mu, (int, float)) and math.isfinite(mu) and mu > 0):
            raise ContractError(f"mu must be a positive finite real, got {mu!r}")
        self.mu = float(mu)
        if not isinstance(g, ProxOperator):
            raise ContractError("g must be a ProxOperator")
        self.g = g
        self.seed = None if seed is None else int(seed)
        a_max = float(self.a.max()) if self.a.size else 0.0
        q_max = float(np.abs(self.q).max())
        self._L = max(q_max, a_max, self.mu)

    @property
    def dim_x(self) -> int:
        return self.q.size

    @property
    def dim_y(self) -> int:
        return self.b.size

    @property
    def L(self) -> float:
        return self._L

    @property
    def kappa(self) -> float:
        return self._L / self.mu

    def _w(self, x: np.ndarray) -> np.ndarray:
        """w(x) = (coupling applied to x) + b_sign * b, in y-space."""
        k0 = self.a.size
        w = self.b_sign * self.b
        w[:k0] = self.a * x[:k0] + self.b_sign * self.b[:k0]
        return w

    def f(self, x: np.ndarray, y: np.ndarray) -> float:
        w = self._w(x)
        return 0.5 * dot(self.q * x, x) + dot(y, w) - 0.5 * self.mu * dot(y, y)

    def grad1(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        k0 = self.a.size
        lift = np.zeros(self.q.size)
        lift[:k0] = self.a * y[:k0]
        return self.q * x + lift

    def grad2(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return self._w(x) - self.mu * y

    def closed_form_y_star(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def closed_form_phi(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def __eq__(self, other) -> bool:
        return (
            type(other) is type(self)
            and np.array_equal(self.q, other.q)
            and np.array_equal(self.a, other.a)
            and np.array_equal(self.b, other.b)
            and self.mu == other.mu
            and self.g == other.g
            and self.h == other.h
        )

    def __repr__(self) -> str:
        return (
            f"{type(self).__name__}(dim_x={self.dim_x}, dim_y={self.dim_y}, "
            f"kappa={self.kappa:g}, mu={self.mu:g}, seed={self.seed})"
        )


class QuadCoupledProblem(_DiagonalFamily):
    """f(x,y) = 0.5 x^T Q x + x^T A y + b^T y - (mu/2)||y||^2 with h = 0.

    The inner maximizer is linear in x: y*(x) = (A^T x + b)/mu, so
    Phi(x) = 0.5 x^T Q x + ||A^T x + b||^2/(2 mu). Accepts any g.
    """

    family = "quad_coupled"
    b_sign = 1.0

    def __init__(self, q, a, b, mu, g=None, seed=None):
        super().__init__(q, a, b, mu, ZeroProx() if g is None else g, seed)
        self.h: ProxOperator = ZeroProx()

    def closed_form_y_star(self, x: np.ndarray) -> np.ndarray:
        return self._w(x) / self.mu

    def closed_form_phi(self, x: np.ndarray) -> float:
        # Accumulation order mirrored by the compiled loop for bitwise traces.
        w = self._w(x)
        return 0.5 * dot(self.q * x, x) + dot(w, w) / (2.0 * self.mu)

    def objective_lower_bound(self) -> float:
        """Exact inf of Phi + g, coordinatewise from the spectra.

        -inf when the problem violates the generator's curvature margin and is
        genuinely unbounded below.
        """
        k0 = self.a.size
        total = 0.0
        kind, params = self.g.kind, self.g.params()
        for i in range(self.dim_x):
            a_i = self.a[i] if i < k0 else 0.0
            b_i = self.b[i] if i < k0 else 0.0
            h_i = self.q[i] + a_i * a_i / self.mu
            c_i = a_i * b_i / self.mu
            const = b_i * b_i / (2.0 * self.mu)
            total += _min_scalar_quad(h_i, c_i, kind, params) + const
            if total == -math.inf:
                return -math.inf
        for j in range(k0, self.dim_y):
            total += self.b[j] * self.b[j] / (2.0 * self.mu)
        return float(total)


class SparseAdversarialProblem(_DiagonalFamily):
    """f(x,y) = 0.5 x^T Q x + <y, Ax - b> - (mu/2)||y||^2 with l1 on both sides.

    The inner l1 makes the maximizer a soft threshold:
    y*(x) = soft(Ax - b, lambda_y)/mu, and the envelope piecewise quadratic:
    Phi(x) = 0.5 x^T Q x + sum_i max(|(Ax-b)_i| - lambda_y, 0)^2/(2 mu), still
    smooth, but genuinely nonconvex wherever the threshold is inactive.
    """

    family = "sparse_adversarial"
    b_sign = -1.0

    def __init__(self, q, a, b, mu, g, lambda_y, seed=None):
        if not isinstance(g, L1Prox):
            raise ContractError("sparse_adversarial requires an l1 regularizer g")
        if not (math.isfinite(lambda_y) and lambda_y > 0):
            raise ContractError(f"lambda_y must be positive, got {lambda_y!r}")
        super().__init__(q, a, b, mu, g, seed)
        self.lambda_y = float(lambda_y)
        self.h: ProxOperator = L1Prox(weight=self.lambda_y)

    def closed_form_y_star(self, x: np.ndarray) -> np.ndarray:
        w = self._w(x)
        return np.sign(w) * np.maximum(np.abs(w) - self.lambda_y, 0.0) / self.mu

    def closed_form_phi(self, x: np.ndarray) -> float:
        w = self._w(x)
        r = np.maximum(np.abs(w) - self.lambda_y, 0.0)
        return 0.5 * dot(self.q * x, x) + dot(r, r) / (2.0 * self.mu)

    def objective_lower_bound(self) -> float:
        """Exact inf of Phi + g via per-coordinate piecewise-quadratic minimization."""
        k0 = self.a.size
        w_g = self.g.weight
        total = 0.0
        for i in range(self.dim_x):
            a_i = self.a[i] if i < k0 else 0.0
            b_i = self.b[i] if i < k0 else 0.0
            total += _min_sparse_coord(self.q[i], a_i, b_i, self.mu, self.lambda_y, w_g)
            if total == -math.inf:
                return -math.inf
        for j in range(k0, self.dim_y):
            edge = max(abs(self.b[j]) - self.lambda_y, 0.0)
            total += edge * edge / (2.0 * self.mu)
        return float(total)


def _min_scalar_quad(h: float, c: float, g_kind: str, g_params: dict[str, float]) -> float:
    """min over t of 0.5*h*t^2 + c*t + r(t) for the supported scalar regularizers."""
    if g_kind == "sq_l2":
        return _min_scalar_quad(h + g_params["weight"], c, "zero", {})
    if g_kind == "box":
        lo, hi = g_params["lo"], g_params["hi"]
        cands = [lo, hi]
        if h > 0:
            cands.append(min(max(-c / h, lo), hi))
        return min(0.5 * h * t * t + c * t for t in cands)
    if g_kind == "l1":
        w = g_params["weight"]
        if h <= 0:
            return 0.0 if (h == 0 and abs(c) <= w) else -math.inf
        shrunk = max(abs(c) - w, 0.0)
        return -shrunk * shrunk / (2.0 * h)
    if g_kind == "zero":
        if h <= 0:
            return 0.0 if (h == 0 and c == 0) else -math.inf
        return -c * c / (2.0 * h)
    raise ContractError(f"no analytic lower bound for regularizer kind {g_kind!r}")


def _min_sparse_coord(q: float, a: float, b: float, mu: float, lam: float, w_g: float) -> float:
    """min over t of psi(t) = 0.5 q t^2 + max(|a t - b| - lam, 0)^2/(2 mu) + w_g |t|."""
    if a == 0.0:
        edge = max(abs(b) - lam, 0.0)
        return _min_scalar_quad(q, 0.0, "l1", {"weight": w_g}) + edge * edge / (2.0 * mu)

    def psi(t: float) -> float:
        edge = max(abs(a * t - b) - lam, 0.0)
        return 0.5 * q * t * t + edge * edge / (2.0 * mu) + w_g * abs(t)

    t1 = (b - lam) / a  # below t1: a t - b <= -lam
    t2 = (b + lam) / a  # above t2: a t - b >= +lam
    qa = q + a * a / mu  # tail curvature where the threshold is active
    if qa < 0:
        return -math.inf

    cands = sorted({t1, t2, 0.0})
    # Vertices of each quadratic piece, kept only if they land in their piece.
    # Pieces are indexed by (threshold mode, sign of t); a > 0 so t1 < t2.
    for mode_lo, mode_hi, alpha, beta0 in (
        (-math.inf, t1, 0.5 * qa, a * (lam - b) / mu),
        (t1, t2, 0.5 * q, 0.0),
        (t2, math.inf, 0.5 * qa, -a * (b + lam) / mu),
    ):
        for sgn, s_lo, s_hi in ((-1.0, -math.inf, 0.0), (1.0, 0.0, math.inf)):
            lo, hi = max(mode_lo, s_lo), min(mode_hi, s_hi)
            if lo >= hi:
                continue
            alpha2, beta = 2.0 * alpha, beta0 + sgn * w_g
            if alpha2 > 0:
                t = -beta / alpha2
                if lo <= t <= hi:
                    cands.append(t)
            elif (hi == math.inf and (alpha2 < 0 or beta < 0)) or (
                lo == -math.inf and (alpha2 < 0 or beta > 0)
            ):
                return -math.inf
    return min(psi(t) for t in cands)


@dataclass(frozen=True)
class ProblemSpec:
    """Seeded recipe for `generate`."""

    family: str = "quad_coupled"
    dim_x: int = 8
    dim_y: int = 8
    kappa_target: float = 16.0
    mu: float = 1.0
    g_weight: float = 0.0
    lambda_y: float = 0.1
    seed: int = 0

    def validate(self) -> None:
        if self.family not in FAMILIES:
            raise ValidationError(f"family must be one of {FAMILIES}, got {self.family!r}")
        for name in ("dim_x", "dim_y"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ValidationError(f"{name} must be a positive integer, got {v!r}")
        if not (math.isfinite(self.kappa_target) and self.kappa_target >= 1):
            raise ValidationError(f"kappa_target must be >= 1, got {self.kappa_target!r}")
        if not (math.isfinite(self.mu) and self.mu > 0):
            raise ValidationError(f"mu must be positive, got {self.mu!r}")
        if not (math.isfinite(self.g_weight) and self.g_weight >= 0):
            raise ValidationError(f"g_weight must be nonnegative, got {self.g_weight!r}")
        if self.family == "sparse_adversarial" and not (
            math.isfinite(self.lambda_y) and self.lambda_y > 0
        ):
            raise ValidationError(f"lambda_y must be positive, got {self.lambda_y!r}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ValidationError(f"seed must be a nonnegative integer, got {self.seed!r}")


def generate(spec: ProblemSpec, rng: np.random.Generator | None = None):
    """Draw a problem that hits kappa_target exactly.

    Construction: the top singular value is pinned to L = kappa_target * mu and
    Q's diagonal stays inside (-L/2, L/2) with coordinate 0 forced negative, so
    L = max(||Q||, ||A||, mu) holds exactly and f is nonconvex in x. Remaining
    singular values are chosen so every envelope curvature q_i + a_i^2/mu lands
    in [CURV_FLOOR*L, 4L] (clipped to a_i <= L), keeping Phi + g coercive.
    """
    spec.validate()
    if rng is None:
        rng = make_rng(spec.seed)
    L = spec.kappa_target * spec.mu
    m, n = spec.dim_x, spec.dim_y
    k0 = min(m, n)

    q = rng.uniform(-0.5 * L, 0.5 * L, size=m)
    q[0] = -L * rng.uniform(0.3, 0.5)
    if m > n:
        # Uncoupled x coordinates have no a_i^2/mu term; they need q_i > 0 alone.
        q[k0:] = L * np.exp(rng.uniform(math.log(CURV_FLOOR), math.log(0.5), size=m - k0))

    a = np.zeros(k0)
    a[0] = L
    if k0 > 1:
        h_target = L * np.exp(rng.uniform(math.log(CURV_FLOOR), math.log(4.0), size=k0 - 1))
        a[1:] = np.minimum(np.sqrt(np.maximum(h_target - q[1:k0], 0.0) * spec.mu), L)

    b = rng.uniform(-1.0, 1.0, size=n)

    if spec.family == "quad_coupled":
        g = ZeroProx() if spec.g_weight == 0 else L1Prox(weight=spec.g_weight)
        return QuadCoupledProblem(q, a, b, spec.mu, g, seed=spec.seed)
    return SparseAdversarialProblem(
        q, a, b, spec.mu, L1Prox(weight=spec.g_weight), spec.lambda_y, seed=spec.seed
    )


@dataclass
class SmoothnessReport:
    trials: int
    radius: float
    max_grad_ratio: float
    block_ratios: dict[str, float]
    min_concavity_modulus: float
    L: float
    mu: float

    @property
    def passed(self) -> bool:
        return self.max_grad_ratio <= self.L * (1.0 + 1e-9) and (
            self.min_concavity_modulus >= self.mu * (1.0 - 1e-9)
        )


def check_smoothness(p: MinimaxProblem, rng: np.random.Generator, trials: int) -> SmoothnessReport:
    """Statistically verify the gradient regularity constants on random pairs.

    Ratios are measured block-wise (each gradient block, one argument varied at
    a time): those per-block constants are what the stepsize rules and bounds
    consume, and for the diagonal families the max block ratio equals
    max(||Q||, ||A||, mu) exactly. Raises InvariantViolation naming the sampled
    pair on the first violation.
    """
    if not isinstance(trials, int) or trials < 1:
        raise ContractError(f"trials must be a positive integer, got {trials!r}")
    ratios = {"grad1_dx": 0.0, "grad1_dy": 0.0, "grad2_dx": 0.0, "grad2_dy": 0.0}
    min_modulus = math.inf
    tol_up = p.L * (1.0 + 1e-9)
    for k in range(trials):
        x = rng.uniform(-SAMPLE_RADIUS, SAMPLE_RADIUS, p.dim_x)
        x2 = rng.uniform(-SAMPLE_RADIUS, SAMPLE_RADIUS, p.dim_x)
        y = rng.uniform(-SAMPLE_RADIUS, SAMPLE_RADIUS, p.dim_y)
        y2 = rng.uniform(-SAMPLE_RADIUS, SAMPLE_RADIUS, p.dim_y)
        ndx = float(np.linalg.norm(x - x2))
        ndy = float(np.linalg.norm(y - y2))
        if ndx == 0.0 or ndy == 0.0:
            continue
        obs = {
            "grad1_dx": float(np.linalg.norm(p.grad1(x, y) - p.grad1(x2, y))) / ndx,
            "grad1_dy": float(np.linalg.norm(p.grad1(x, y) - p.grad1(x, y2))) / ndy,
            "grad2_dx": float(np.linalg.norm(p.grad2(x, y) - p.grad2(x2, y))) / ndx,
            "grad2_dy": float(np.linalg.norm(p.grad2(x, y) - p.grad2(x, y2))) / ndy,
        }
        for name, r in obs.items():
            ratios[name] = max(ratios[name], r)
            if r > tol_up:
                raise InvariantViolation(
                    f"gradient Lipschitz ratio {name}={r!r} exceeds L={p.L!r} "
                    f"at trial {k}: x={x.tolist()} y={y.tolist()} "
                    f"x'={x2.tolist()} y'={y2.tolist()}"
                )
        inner = dot(p.grad2(x, y) - p.grad2(x, y2), y - y2)
        modulus = -inner / (ndy * ndy)
        min_modulus = min(min_modulus, modulus)
        if modulus < p.mu * (1.0 - 1e-9):
            raise InvariantViolation(
                f"strong-concavity modulus {modulus!r} below mu={p.mu!r} at trial {k}: "
                f"x={x.tolist()} y={y.tolist()} y'={y2.tolist()}"
            )
    return SmoothnessReport(
        trials=trials,
        radius=SAMPLE_RADIUS,
        max_grad_ratio=max(ratios.values()),
        block_ratios=ratios,
        min_concavity_modulus=min_modulus,
        L=p.L,
        mu=p.mu,
    )


def _fmt_floats(arr: np.ndarray) -> str:
    return ",".join(repr(float(v)) for v in arr.tolist())


def _parse_floats(text: str, name: str) -> np.ndarray:
    try:
        return np.array([float(tok) for tok in text.split(",") if tok != ""], dtype=np.float64)
    except ValueError as exc:
        raise ValidationError(f"bad float list for {name!r}: {exc}") from None


def problem_to_entries(p) -> dict[str, str]:
    """Serialize a family problem to a key=value document (exact round trip)."""
    if not isinstance(p, _DiagonalFamily):
        raise ContractError(f"cannot serialize problems of type {type(p).__name__}")
    entries = {
        "family": p.family,
        "mu": repr(p.mu),
        "q": _fmt_floats(p.q),
        "a": _fmt_floats(p.a),
        "b": _fmt_floats(p.b),
        "g.kind": p.g.kind,
    }
    for key, value in p.g.params().items():
        entries[f"g.{key}"] = repr(float(value))
    entries["h.kind"] = p.h.kind
    for key, value in p.h.params().items():
        entries[f"h.{key}"] = repr(float(value))
    if p.seed is not None:
        entries["seed"] = str(p.seed)
    return entries


def problem_from_entries(entries: dict[str, str]):
    family = entries.get("family")
    if family not in FAMILIES:
        raise ValidationError(f"unknown problem family {family!r}")
    try:
        mu = float(entries["mu"])
        q = _parse_floats(entries["q"], "q")
        a = _parse_floats(entries["a"], "a")
        b = _parse_floats(entries["b"], "b")
        g_kind = entries["g.kind"]
    except KeyError as exc:
        raise ValidationError(f"problem document missing key {exc.args[0]!r}") from None
    g_params = {k.split(".", 1)[1]: float(v) for k, v in entries.items()
                if k.startswith("g.") and k != "g.kind"}
    g = make_prox(g_kind, **g_params)
    seed = int(entries["seed"]) if "seed" in entries else None
    if family == "quad_coupled":
        if entries.get("h.kind", "zero") != "zero":
            raise ValidationError("quad_coupled problems have h.kind=zero")
        return QuadCoupledProblem(q, a, b, mu, g, seed=seed)
    if entries.get("h.kind") != "l1":
        raise ValidationError("sparse_adversarial problems have h.kind=l1")
    return SparseAdversarialProblem(q, a, b, mu, g, float(entries["h.weight"]), seed=seed)


def save_problem(p, path) -> None:
    configdoc.save(problem_to_entries(p), path)


def load_problem(path):
    return problem_from_entries(configdoc.load(path))
