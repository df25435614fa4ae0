"""Problem families: generator guarantees, constants, serialization, and the
statistical smoothness check."""

import math

import numpy as np
import pytest

from minimax_kit.core import ContractError, InvariantViolation, ValidationError, make_rng
from minimax_kit.problems import (
    CURV_FLOOR,
    ProblemSpec,
    QuadCoupledProblem,
    SparseAdversarialProblem,
    check_smoothness,
    generate,
    load_problem,
    problem_from_entries,
    problem_to_entries,
    save_problem,
)
from minimax_kit.prox import BoxProx, L1Prox, SqL2Prox, ZeroProx


# generator guarantees
# ---------------------------------------------------------------------------

SPECS = [
    ProblemSpec(family="quad_coupled", dim_x=8, dim_y=8, kappa_target=16.0, seed=0),
    ProblemSpec(family="quad_coupled", dim_x=12, dim_y=5, kappa_target=4.0, seed=1),
    ProblemSpec(family="quad_coupled", dim_x=3, dim_y=9, kappa_target=64.0,
                g_weight=0.1, seed=2),
    ProblemSpec(family="sparse_adversarial", dim_x=8, dim_y=8, kappa_target=16.0,
                g_weight=0.05, seed=3),
    ProblemSpec(family="sparse_adversarial", dim_x=6, dim_y=10, kappa_target=32.0,
                mu=0.5, seed=4),
]


@pytest.mark.parametrize("spec", SPECS, ids=range(len(SPECS)))
def test_generate_hits_constants_exactly(spec):
    p = generate(spec)
    assert p.L == spec.kappa_target * spec.mu
    assert math.isclose(p.kappa, spec.kappa_target, rel_tol=1e-12)
    assert p.mu == spec.mu
    assert p.dim_x == spec.dim_x and p.dim_y == spec.dim_y

    k0 = min(spec.dim_x, spec.dim_y)
    assert p.a[0] == p.L  # top singular value pinned to L
    assert np.all(p.a >= 0.0) and np.all(p.a <= p.L)
    assert p.q[0] < 0.0  # nonconvex direction in x
    assert np.max(np.abs(p.q)) <= 0.5 * p.L

    # envelope curvature floor that keeps Phi + g bounded below
    curv = p.q.copy()
    curv[:k0] += p.a**2 / p.mu
    assert np.min(curv) >= CURV_FLOOR * p.L * (1.0 - 1e-12)


def test_generate_deterministic_per_seed():
    spec = SPECS[0]
    assert generate(spec) == generate(spec)
    other = generate(ProblemSpec(family=spec.family, seed=spec.seed + 1))
    assert generate(spec) != other


def test_generate_smallest_case():
    p = generate(ProblemSpec(dim_x=1, dim_y=1, kappa_target=1.0, seed=0))
    assert p.kappa == 1.0 and p.L == 1.0
    assert p.q[0] < 0.0
    assert p.q[0] + p.a[0] ** 2 / p.mu >= CURV_FLOOR * p.L


def test_generate_regularizer_wiring():
    assert isinstance(generate(SPECS[0]).g, ZeroProx)
    p = generate(SPECS[2])
    assert p.g == L1Prox(weight=0.1)
    assert isinstance(p.h, ZeroProx)
    s = generate(SPECS[3])
    assert s.g == L1Prox(weight=0.05)
    assert s.h == L1Prox(weight=s.lambda_y)


def test_spec_validation():
    with pytest.raises(ValidationError):
        ProblemSpec(family="bilinear").validate()
    with pytest.raises(ValidationError):
        ProblemSpec(dim_x=0).validate()
    with pytest.raises(ValidationError):
        ProblemSpec(kappa_target=0.5).validate()
    with pytest.raises(ValidationError):
        ProblemSpec(mu=0.0).validate()
    with pytest.raises(ValidationError):
        ProblemSpec(g_weight=-0.1).validate()
    with pytest.raises(ValidationError):
        ProblemSpec(family="sparse_adversarial", lambda_y=0.0).validate()
    with pytest.raises(ValidationError):
        ProblemSpec(seed=-1).validate()


def test_constructor_contracts():
    with pytest.raises(ContractError):
        QuadCoupledProblem(q=[1.0], a=[1.0, 2.0], b=[0.0], mu=1.0)
    with pytest.raises(ContractError):
        QuadCoupledProblem(q=[1.0], a=[-1.0], b=[0.0], mu=1.0)
    with pytest.raises(ContractError):
        QuadCoupledProblem(q=[1.0], a=[1.0], b=[0.0], mu=0.0)
    with pytest.raises(ContractError):
        SparseAdversarialProblem(q=[1.0], a=[1.0], b=[0.0], mu=1.0,
                                 g=ZeroProx(), lambda_y=0.1)
    with pytest.raises(ContractError):
        SparseAdversarialProblem(q=[1.0], a=[1.0], b=[0.0], mu=1.0,
                                 g=L1Prox(weight=0.1), lambda_y=0.0)


def test_arrays_frozen():
    p = generate(SPECS[0])
    with pytest.raises(ValueError):
        p.q[0] = 0.0


# values and gradients
# ---------------------------------------------------------------------------


def test_coupling_sign_convention():
    b = np.array([0.5, -1.5])
    q = np.array([1.0, 1.0])
    a = np.array([1.0, 1.0])
    zx, zy = np.zeros(2), np.zeros(2)
    pq = QuadCoupledProblem(q, a, b, mu=1.0)
    ps = SparseAdversarialProblem(q, a, b, mu=1.0, g=L1Prox(weight=0.1), lambda_y=0.1)
    assert np.array_equal(pq.grad2(zx, zy), b)
    assert np.array_equal(ps.grad2(zx, zy), -b)


def test_f_and_grads_hand_values():
    p = QuadCoupledProblem(q=[-0.5], a=[1.0], b=[0.5], mu=2.0)
    x, y = np.array([2.0]), np.array([3.0])
    # f = 0.5*(-0.5)*4 + 3*(2 + 0.5) - 1.0*9
    assert p.f(x, y) == -1.0 + 7.5 - 9.0
    assert np.array_equal(p.grad1(x, y), np.array([-0.5 * 2.0 + 3.0]))
    assert np.array_equal(p.grad2(x, y), np.array([2.5 - 6.0]))


def test_rectangular_shapes():
    p = generate(SPECS[1])  # dim_x > dim_y
    x = np.ones(p.dim_x)
    y = np.ones(p.dim_y)
    assert p.grad1(x, y).shape == (p.dim_x,)
    assert p.grad2(x, y).shape == (p.dim_y,)
    wide = generate(SPECS[2])  # dim_y > dim_x
    assert wide.grad2(np.ones(wide.dim_x), np.ones(wide.dim_y)).shape == (wide.dim_y,)


# analytic lower bound of Phi + g
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("spec", SPECS, ids=range(len(SPECS)))
def test_lower_bound_holds_at_random_points(spec):
    p = generate(spec)
    lb = p.objective_lower_bound()
    assert math.isfinite(lb)
    rng = make_rng(99)
    for _ in range(300):
        x = rng.uniform(-20.0, 20.0, size=p.dim_x)
        assert p.closed_form_phi(x) + p.g.evaluate(x) >= lb


@pytest.mark.parametrize(
    "g",
    [ZeroProx(), L1Prox(weight=0.4), SqL2Prox(weight=0.3), BoxProx(lo=-1.0, hi=2.0)],
    ids=["zero", "l1", "sq_l2", "box"],
)
def test_lower_bound_tight_on_grid_quad(g):
    p = QuadCoupledProblem(q=[-0.6], a=[1.5], b=[0.7], mu=1.3, g=g)
    lb = p.objective_lower_bound()
    grid = np.linspace(-25.0, 25.0, 50001)
    vals = [p.closed_form_phi(np.array([t])) + p.g.evaluate(np.array([t])) for t in grid]
    best = min(vals)
    assert best >= lb
    assert best - lb <= 1e-4  # grid minimum approaches the analytic infimum


def test_lower_bound_tight_on_grid_sparse():
    p = SparseAdversarialProblem(
        q=[-0.6], a=[1.5], b=[0.7], mu=1.3, g=L1Prox(weight=0.2), lambda_y=0.5
    )
    lb = p.objective_lower_bound()
    grid = np.linspace(-25.0, 25.0, 50001)
    vals = [p.closed_form_phi(np.array([t])) + p.g.evaluate(np.array([t])) for t in grid]
    best = min(vals)
    assert best >= lb
    assert best - lb <= 1e-4


def test_lower_bound_unbounded_detected():
    # negative envelope curvature with no coupling: Phi decreases without bound
    p = QuadCoupledProblem(q=[-1.0], a=[0.0], b=[0.0], mu=1.0)
    assert p.objective_lower_bound() == -math.inf
    # a box regularizer restores a finite infimum at an endpoint
    boxed = QuadCoupledProblem(q=[-1.0], a=[0.0], b=[0.0], mu=1.0, g=BoxProx(lo=-1.0, hi=1.0))
    assert boxed.objective_lower_bound() == -0.5


# serialization
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("spec", SPECS, ids=range(len(SPECS)))
def test_entries_round_trip_exact(spec, tmp_path):
    p = generate(spec)
    clone = problem_from_entries(problem_to_entries(p))
    assert clone == p
    assert clone.seed == p.seed
    assert clone.g == p.g and clone.h == p.h

    path = tmp_path / "problem.txt"
    save_problem(p, path)
    assert load_problem(path) == p


def test_entries_validation():
    entries = problem_to_entries(generate(SPECS[0]))
    bad = dict(entries)
    bad["family"] = "mystery"
    with pytest.raises(ValidationError):
        problem_from_entries(bad)
    missing = dict(entries)
    del missing["q"]
    with pytest.raises(ValidationError):
        problem_from_entries(missing)
    wrong_h = dict(entries)
    wrong_h["h.kind"] = "l1"
    with pytest.raises(ValidationError):
        problem_from_entries(wrong_h)
    garbled = dict(entries)
    garbled["q"] = "1.0,abc"
    with pytest.raises(ValidationError):
        problem_from_entries(garbled)


def test_serialize_rejects_foreign_problems():
    with pytest.raises(ContractError):
        problem_to_entries(object())


# statistical smoothness check
# ---------------------------------------------------------------------------


def test_check_smoothness_exact_scalar_case():
    # ratios are position-independent here: |q|=0.5, coupling 1, concavity
    # exactly mu, up to one rounded addition inside each gradient
    p = QuadCoupledProblem(q=[-0.5], a=[1.0], b=[0.0], mu=1.0)
    rep = check_smoothness(p, make_rng(0), trials=50)
    assert rep.passed
    assert math.isclose(rep.block_ratios["grad1_dx"], 0.5, rel_tol=1e-12)
    assert math.isclose(rep.block_ratios["grad1_dy"], 1.0, rel_tol=1e-12)
    assert math.isclose(rep.block_ratios["grad2_dx"], 1.0, rel_tol=1e-12)
    assert math.isclose(rep.block_ratios["grad2_dy"], 1.0, rel_tol=1e-12)
    assert math.isclose(rep.max_grad_ratio, p.L, rel_tol=1e-12)
    assert math.isclose(rep.min_concavity_modulus, 1.0, rel_tol=1e-12)
    assert rep.trials == 50


@pytest.mark.parametrize("spec", SPECS[:3], ids=range(3))
def test_check_smoothness_generated(spec):
    p = generate(spec)
    rep = check_smoothness(p, make_rng(1), trials=200)
    assert rep.passed
    assert rep.max_grad_ratio <= p.L * (1.0 + 1e-9)
    assert rep.min_concavity_modulus >= p.mu * (1.0 - 1e-9)


class _Understated:
    """Wrapper that claims a smaller L than the wrapped problem obeys."""

    def __init__(self, p, L_claim=None, mu_claim=None):
        self._p = p
        self._L = p.L if L_claim is None else L_claim
        self.mu = p.mu if mu_claim is None else mu_claim
        self.g = p.g
        self.h = p.h

    @property
    def L(self):
        return self._L

    @property
    def dim_x(self):
        return self._p.dim_x

    @property
    def dim_y(self):
        return self._p.dim_y

    def f(self, x, y):
        return self._p.f(x, y)

    def grad1(self, x, y):
        return self._p.grad1(x, y)

    def grad2(self, x, y):
        return self._p.grad2(x, y)


def test_check_smoothness_raises_on_violation():
    base = generate(SPECS[0])
    with pytest.raises(InvariantViolation, match="ratio"):
        check_smoothness(_Understated(base, L_claim=base.L / 2.0), make_rng(2), trials=100)
    with pytest.raises(InvariantViolation, match="concavity"):
        check_smoothness(_Understated(base, mu_claim=base.mu * 2.0), make_rng(2), trials=100)


def test_check_smoothness_rejects_bad_trials():
    p = generate(SPECS[0])
    with pytest.raises(ContractError):
        check_smoothness(p, make_rng(0), trials=0)
    with pytest.raises(ContractError):
        check_smoothness(p, make_rng(0), trials=2.5)
