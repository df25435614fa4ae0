"""Inner-maximizer, envelope, gradient-mapping, and Lyapunov oracles."""

import math

import numpy as np
import pytest

from minimax_kit.core import (
    ContractError,
    IndicatorInfeasibleError,
    NonconvergenceError,
    ValidationError,
    dot,
    make_rng,
    norm2,
)
from minimax_kit.oracles import (
    YStarOracle,
    ascent_distances,
    fd_grad_phi,
    grad_mapping,
    grad_phi,
    lyapunov,
    phi_value,
    y_star,
)
from minimax_kit.problems import (
    ProblemSpec,
    QuadCoupledProblem,
    SparseAdversarialProblem,
    generate,
)
from minimax_kit.prox import BoxProx, L1Prox
from minimax_kit.solvers import SolverConfig, SolverState


CLOSED = YStarOracle()


def quad1d():
    # y*(x) = x, Phi(x) = -x^2/4 + x^2/2 = x^2/4
    return QuadCoupledProblem(q=[-0.5], a=[1.0], b=[0.0], mu=1.0)


def sparse1d():
    # w(x) = 2x, threshold 2: y*(x) = soft(2x, 2), Phi = max(|2x|-2, 0)^2/2
    return SparseAdversarialProblem(
        q=[0.0], a=[2.0], b=[0.0], mu=1.0, g=L1Prox(weight=0.5), lambda_y=2.0
    )


def test_y_star_closed_form_values():
    p = QuadCoupledProblem(q=[-0.5], a=[1.0], b=[0.0], mu=2.0)
    assert np.array_equal(y_star(p, np.array([4.0]), CLOSED), np.array([2.0]))
    assert np.array_equal(y_star(quad1d(), np.zeros(1), CLOSED), np.zeros(1))

    s = sparse1d()
    assert np.array_equal(y_star(s, np.array([2.0]), CLOSED), np.array([2.0]))
    # inside the soft threshold the maximizer collapses to zero
    assert np.array_equal(y_star(s, np.array([0.5]), CLOSED), np.zeros(1))


def test_phi_values():
    p = quad1d()
    assert phi_value(p, np.array([2.0]), CLOSED) == 1.0
    assert phi_value(p, np.zeros(1), CLOSED) == 0.0
    s = sparse1d()
    assert phi_value(s, np.array([2.0]), CLOSED) == 2.0
    assert phi_value(s, np.array([0.5]), CLOSED) == 0.0


def test_phi_matches_closed_form_everywhere():
    rng = make_rng(3)
    for spec in (
        ProblemSpec(family="quad_coupled", kappa_target=4.0, g_weight=0.1, seed=5),
        ProblemSpec(family="sparse_adversarial", kappa_target=16.0, dim_x=6, dim_y=9,
                    g_weight=0.05, seed=6),
    ):
        p = generate(spec)
        for _ in range(50):
            x = rng.uniform(-10.0, 10.0, p.dim_x)
            assert abs(phi_value(p, x, CLOSED) - p.closed_form_phi(x)) <= 1e-10


def test_grad_phi_values():
    p = quad1d()
    assert np.array_equal(grad_phi(p, np.array([2.0]), CLOSED), np.array([1.0]))
    assert np.array_equal(grad_phi(p, np.zeros(1), CLOSED), np.zeros(1))


def test_grad_phi_finite_difference_agreement():
    rng = make_rng(4)
    for spec in (
        ProblemSpec(family="quad_coupled", kappa_target=4.0, seed=7),
        ProblemSpec(family="sparse_adversarial", kappa_target=4.0, seed=8),
    ):
        p = generate(spec)
        for _ in range(5):
            x = rng.uniform(-5.0, 5.0, p.dim_x)
            gp = grad_phi(p, x, CLOSED)
            rel = norm2(gp - fd_grad_phi(p, x, CLOSED)) / max(1.0, norm2(gp))
            assert rel <= 1e-5


def test_lipschitz_invariants_sampled():
    # moduli kappa for y* and L(1+kappa) for grad Phi; the full 500-pair check
    # runs in the acceptance suite
    rng = make_rng(5)
    p = generate(ProblemSpec(family="sparse_adversarial", kappa_target=16.0, seed=9))
    cap_y = p.kappa * (1.0 + 1e-9)
    cap_g = p.L * (1.0 + p.kappa) * (1.0 + 1e-9)
    for _ in range(60):
        x1 = rng.uniform(-10.0, 10.0, p.dim_x)
        x2 = rng.uniform(-10.0, 10.0, p.dim_x)
        dx = norm2(x1 - x2)
        assert norm2(y_star(p, x1, CLOSED) - y_star(p, x2, CLOSED)) <= cap_y * dx
        assert norm2(grad_phi(p, x1, CLOSED) - grad_phi(p, x2, CLOSED)) <= cap_g * dx


# gradient mapping
# ---------------------------------------------------------------------------


def test_grad_mapping_equals_grad_phi_without_regularizer():
    # binary-exact stepsize and gradient make the identity exact
    p = quad1d()
    g = grad_mapping(p, np.array([2.0]), 0.25, CLOSED)
    assert np.array_equal(g, np.array([1.0]))
    assert np.array_equal(g, grad_phi(p, np.array([2.0]), CLOSED))


def test_grad_mapping_zero_at_critical_point():
    # (q + a^2/mu) xbar = -a b / mu  =>  xbar = -1/2, and grad Phi(xbar) = 0
    p = QuadCoupledProblem(q=[1.0], a=[1.0], b=[1.0], mu=1.0)
    g = grad_mapping(p, np.array([-0.5]), 0.125, CLOSED)
    assert norm2(g) <= 1e-10


def test_grad_mapping_zero_inside_l1_subdifferential():
    # |grad Phi(0)| = 1 <= weight, so x = 0 is stationary for Phi + g
    p = QuadCoupledProblem(q=[1.0], a=[1.0], b=[1.0], mu=1.0, g=L1Prox(weight=2.0))
    assert np.array_equal(grad_mapping(p, np.zeros(1), 0.125, CLOSED), np.zeros(1))


def test_grad_mapping_validation():
    p = quad1d()
    with pytest.raises(ContractError):
        grad_mapping(p, np.zeros(1), 0.0, CLOSED)
    with pytest.raises(ContractError):
        grad_mapping(p, np.zeros(1), math.inf, CLOSED)
    with pytest.raises(ContractError):
        grad_mapping(p, np.zeros(2), 0.1, CLOSED)


# Lyapunov function
# ---------------------------------------------------------------------------


def _state(x, y, x_prev=None, y_prev=None):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return SolverState(
        x=x, y=y,
        x_prev=x.copy() if x_prev is None else np.asarray(x_prev, dtype=float),
        y_prev=y.copy() if y_prev is None else np.asarray(y_prev, dtype=float),
        t=0,
    )


def test_lyapunov_hand_value():
    p = quad1d()
    cfg = SolverConfig(algorithm="prox_altgdam", eta_x=0.25, eta_y=1.0, beta=0.25, gamma=0.0)
    # Phi(2) = 1, y* = 2: H = 1 + 0 + 2*1*|0-2|^2 + 0 = 9
    assert lyapunov(p, _state([2.0], [0.0]), cfg, CLOSED) == 9.0
    # moving x_prev one unit away adds (beta/eta_x) * 1 = 1
    assert lyapunov(p, _state([2.0], [0.0], x_prev=[1.0]), cfg, CLOSED) == 10.0


def test_lyapunov_reductions():
    p = generate(ProblemSpec(family="quad_coupled", kappa_target=4.0, g_weight=0.1, seed=10))
    cfg = SolverConfig(algorithm="prox_altgdam", eta_x=0.5, eta_y=1.0, beta=0.25, gamma=0.5)
    rng = make_rng(11)
    x = rng.uniform(-3.0, 3.0, p.dim_x)
    ys = y_star(p, x, CLOSED)
    # at (x, y*(x)) with x_prev = x both penalty terms vanish exactly
    h = lyapunov(p, _state(x, ys), cfg, CLOSED)
    assert h == phi_value(p, x, CLOSED) + p.g.evaluate(x)
    # beta = 0 drops the increment penalty regardless of x_prev
    cfg0 = SolverConfig(algorithm="prox_altgdam", eta_x=0.5, eta_y=1.0, beta=0.0, gamma=0.5)
    y = rng.uniform(-3.0, 3.0, p.dim_y)
    h0 = lyapunov(p, _state(x, y, x_prev=x + 1.0), cfg0, CLOSED)
    dy = y - ys
    assert h0 == phi_value(p, x, CLOSED) + p.g.evaluate(x) + 2.0 * p.mu * dot(dy, dy)


def test_lyapunov_infeasible_x_raises():
    p = QuadCoupledProblem(q=[-0.5], a=[1.0], b=[0.0], mu=1.0, g=BoxProx(lo=0.0, hi=1.0))
    cfg = SolverConfig(algorithm="prox_altgdam", eta_x=0.25, eta_y=1.0, beta=0.25, gamma=0.0)
    with pytest.raises(IndicatorInfeasibleError):
        lyapunov(p, _state([2.0], [0.0]), cfg, CLOSED)


# iterative oracle
# ---------------------------------------------------------------------------


def _bigger_sparse():
    return generate(
        ProblemSpec(family="sparse_adversarial", dim_x=6, dim_y=8, kappa_target=16.0,
                    g_weight=0.05, seed=12)
    )


def test_iterative_matches_closed_form():
    p = _bigger_sparse()
    it = YStarOracle(mode="iterative")
    rng = make_rng(13)
    for _ in range(20):
        x = rng.uniform(-10.0, 10.0, p.dim_x)
        assert norm2(y_star(p, x, it) - p.closed_form_y_star(x)) <= 1e-8


def test_iterative_report_and_warm_start():
    p = _bigger_sparse()
    it = YStarOracle(mode="iterative")
    x = np.linspace(-3.0, 3.0, p.dim_x)

    y1 = y_star(p, x, it)
    cold = it.last_report
    assert not cold.warm_started
    assert cold.achieved <= it.inner_tol
    assert cold.distance_bound == p.kappa * cold.achieved
    assert norm2(y1 - p.closed_form_y_star(x)) <= cold.distance_bound

    # a nearby query restarts from the cached solution and finishes faster
    y_star(p, x + 1e-6, it)
    warm = it.last_report
    assert warm.warm_started
    assert warm.iters < cold.iters

    it.reset_warm_start()
    y_star(p, x, it)
    assert not it.last_report.warm_started
    assert it.last_report.iters == cold.iters


def test_iterative_nonconvergence_carries_progress():
    p = _bigger_sparse()
    it = YStarOracle(mode="iterative", inner_max_iters=3)
    with pytest.raises(NonconvergenceError) as err:
        y_star(p, np.full(p.dim_x, 5.0), it)
    assert err.value.achieved > it.inner_tol
    assert err.value.last.shape == (p.dim_y,)


def test_oracle_validation():
    with pytest.raises(ValidationError):
        YStarOracle(mode="newton")
    with pytest.raises(ValidationError):
        YStarOracle(inner_tol=0.0)
    with pytest.raises(ValidationError):
        YStarOracle(inner_max_iters=0)

    class NoClosedForm:
        mu = 1.0
        dim_x = 1
        dim_y = 1

    with pytest.raises(ContractError):
        y_star(NoClosedForm(), np.zeros(1), CLOSED)


# inner ascent rate
# ---------------------------------------------------------------------------


def test_ascent_distances_decay():
    p = generate(ProblemSpec(family="quad_coupled", kappa_target=4.0, seed=14))
    x = make_rng(15).uniform(-5.0, 5.0, p.dim_x)
    dist = ascent_distances(p, x, YStarOracle(mode="iterative"), 80)
    assert dist.shape == (81,)
    assert dist[0] == norm2(p.closed_form_y_star(x))  # cold start at y = 0
    assert dist[80] < 1e-6 * dist[0]
    with pytest.raises(ContractError):
        ascent_distances(p, x, CLOSED, 0)


@pytest.mark.parametrize("kappa", [4.0, 64.0])
def test_geometric_rate_constant(kappa):
    from minimax_kit.checks import fit_ascent_constant

    p = generate(ProblemSpec(family="quad_coupled", kappa_target=kappa, seed=16))
    x = make_rng(17).uniform(-5.0, 5.0, p.dim_x)
    c = fit_ascent_constant(p, x)
    assert 0.0 < c <= 10.0


def test_rate_fit_guards():
    from minimax_kit.checks import fit_ascent_constant

    flat = generate(ProblemSpec(family="quad_coupled", kappa_target=1.0, seed=18))
    with pytest.raises(ContractError):
        fit_ascent_constant(flat, np.zeros(flat.dim_x))
    # y*(x) = 0 gives a zero baseline distance
    p = QuadCoupledProblem(q=[1.0], a=[1.0], b=[0.0], mu=0.5)
    with pytest.raises(ContractError):
        fit_ascent_constant(p, np.zeros(1))
