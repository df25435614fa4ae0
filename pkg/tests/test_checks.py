"""Verification suites: every scope green at stock settings, and the eta_x
override reproduction that breaks the quantified drop."""

import math

import pytest

from minimax_kit import configdoc
from minimax_kit.checks import (
    SCOPES,
    bound_suite,
    lyapunov_suite,
    monotone_margin,
    prox_suite,
    quantified_drop_margin,
    regularity_suite,
    run_scope,
)
from minimax_kit.core import ContractError, ValidationError
from minimax_kit.harness import RunSpec, run
from minimax_kit.problems import (
    ProblemSpec,
    QuadCoupledProblem,
    generate,
    problem_from_entries,
)
from minimax_kit.solvers import default_config


def names(results):
    return [r.name for r in results]


def failing(results):
    return [r for r in results if not r.passed]


# every scope green at stock settings
# ---------------------------------------------------------------------------


def test_prox_scope_green():
    results = prox_suite(seed=0, trials=200)
    assert len(results) == 14
    assert failing(results) == []
    assert all(r.replay is None for r in results)


def test_regularity_scope_green():
    results = regularity_suite(seed=0, pairs=40, fd_points=12)
    assert failing(results) == []
    kinds = {n.split("[")[0] for n in names(results)}
    assert kinds == {
        "regularity.smoothness",
        "regularity.ystar_lipschitz",
        "regularity.grad_phi_lipschitz",
        "regularity.grad_phi_fd",
        "regularity.phi_closed_form",
        "regularity.inner_optimality",
        "regularity.objective_lower_bound",
        "regularity.ystar_modes",
        "regularity.grad_mapping_modes",
        "regularity.ascent_rate",
    }
    # the geometric-rate fit only applies where the closed form is quadratic
    rate_rows = [n for n in names(results) if n.startswith("regularity.ascent_rate")]
    assert all("quad_coupled" in n for n in rate_rows)


def test_lyapunov_scope_green():
    results = lyapunov_suite()
    assert len(results) == 8
    assert failing(results) == []
    assert len(set(names(results))) == 8


def test_bound_scope_green():
    results = bound_suite()
    assert len(results) == 4
    assert failing(results) == []
    for r in results:
        assert r.name.startswith("bound.aggregate[")
        assert -1.0 <= r.worst <= 0.0  # worst is ratio - 1


# the documented reproduction: eta_x ten times above its ceiling
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def scaled_results():
    return lyapunov_suite(iters=2000, eta_x_scale=10.0)


def test_eta_x_override_breaks_only_the_kappa16_drop(scaled_results):
    bad = failing(scaled_results)
    assert sorted(names(bad)) == [
        "lyapunov.drop[quad_coupled,kappa=16,seed=2]",
        "lyapunov.drop[sparse_adversarial,kappa=16,seed=2]",
    ]
    for r in bad:
        assert 1e-4 < r.worst < 1e-2
    # plain monotonicity survives the override
    mono = [r for r in scaled_results if ".monotone" in r.name]
    assert all(r.passed for r in mono)


def test_failing_rows_carry_replay_files(scaled_results):
    bad = failing(scaled_results)
    assert bad
    for r in bad:
        assert set(r.replay) == {"failing_problem.txt", "failing_config.txt"}
    ok = [r for r in scaled_results if r.passed]
    assert all(r.replay is None for r in ok)


def test_replay_payload_roundtrips(scaled_results):
    bad = [r for r in failing(scaled_results) if "quad_coupled" in r.name][0]
    p = problem_from_entries(configdoc.parse_text(bad.replay["failing_problem.txt"]))
    pinned = generate(ProblemSpec(family="quad_coupled", kappa_target=16.0, seed=2))
    assert p == pinned
    cfg = configdoc.parse_text(bad.replay["failing_config.txt"])
    assert cfg["algorithm"] == "prox_altgdam"
    stock = default_config(pinned, "prox_altgdam")
    assert float(cfg["eta_x"]) == 10.0 * stock.eta_x
    assert float(cfg["gamma"]) == stock.gamma


# margins as standalone functions
# ---------------------------------------------------------------------------


def test_margins_match_run_metadata():
    p = generate(ProblemSpec(kappa_target=4.0, dim_x=5, dim_y=4, seed=9))
    cfg = default_config(p, "prox_altgdam")
    tr = run(RunSpec(problem=p, config=cfg, eps=1e-300, max_iters=300, diag_every=1))
    worst, at = monotone_margin(tr)
    assert worst == tr.meta_float("lyapunov_mono_worst")
    assert worst <= 0.0
    assert tr.rows[0].t <= at < tr.rows[-1].t
    worst_d, _ = quantified_drop_margin(tr, p, cfg)
    assert worst_d <= 0.0
    assert worst_d >= worst  # the drop requirement is the stronger inequality


def test_margins_require_dense_rows():
    p = generate(ProblemSpec(kappa_target=4.0, dim_x=5, dim_y=4, seed=9))
    cfg = default_config(p, "prox_altgdam")
    strided = run(RunSpec(problem=p, config=cfg, eps=1e-300, max_iters=300, diag_every=50))
    with pytest.raises(ContractError):
        monotone_margin(strided)
    with pytest.raises(ContractError):
        quantified_drop_margin(strided, p, cfg)

    saddle = QuadCoupledProblem(q=[1.0], a=[1.0], b=[1.0], mu=1.0)
    import numpy as np

    single = run(
        RunSpec(problem=saddle, x0=np.array([-0.5]), y0=np.array([0.5]), eps=1e-6, max_iters=10)
    )
    assert len(single.rows) == 1
    with pytest.raises(ContractError):
        monotone_margin(single)


# dispatch and argument validation
# ---------------------------------------------------------------------------


def test_run_scope_dispatch():
    assert set(SCOPES) == {"prox", "regularity", "lyapunov", "bound"}
    rows = run_scope("prox", trials=50)
    assert len(rows) == 14 and failing(rows) == []
    with pytest.raises(ValidationError):
        run_scope("nope")


def test_suite_argument_validation():
    with pytest.raises(ValidationError):
        lyapunov_suite(iters=1)
    with pytest.raises(ValidationError):
        lyapunov_suite(eta_x_scale=0.0)
    with pytest.raises(ValidationError):
        bound_suite(eps=-1.0)
    with pytest.raises(ValidationError):
        regularity_suite(pairs=0)
    with pytest.raises(ValidationError):
        prox_suite(trials=0)
