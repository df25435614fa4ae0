"""Solvers, oracles, and benchmarks for regularized nonconvex-strongly-concave
minimax problems

    min_x max_y  f(x, y) + g(x) - h(y)

with three single-loop algorithms (proximal GDA, proximal alternating GDA, and
its momentum-accelerated variant), exact diagnostic oracles on two synthetic
problem families, and a condition-number benchmark harness.
"""

from .complexity import (
    AGG_BOUND_CONST,
    BoundReport,
    DEFAULT_KAPPA_GRID,
    ITER_CAP,
    SweepCell,
    SweepReport,
    SweepSpec,
    check_aggregate_bound,
    fit_exponent,
    parse_summary_csv,
    parse_sweep_csv,
    resolve_threads,
    summary_csv_text,
    sweep,
    sweep_csv_text,
)
from .core import (
    ContractError,
    DivergenceError,
    IndicatorInfeasibleError,
    InapplicableConfigError,
    InvariantViolation,
    NonconvergenceError,
    RunTrace,
    TRACE_COLUMNS,
    TraceRow,
    ValidationError,
    as_vector,
    axpy,
    child_seed,
    dot,
    make_rng,
    norm2,
)
from .checks import (
    CheckResult,
    SCOPES,
    bound_suite,
    fit_ascent_constant,
    lyapunov_suite,
    monotone_margin,
    prox_suite,
    quantified_drop_margin,
    regularity_suite,
    run_scope,
)
from .harness import (
    ENGINES,
    MONOTONE_SLACK_REL,
    RunSpec,
    STAB_THRESHOLD,
    format_trace_csv,
    iterations_to_eps,
    load_trace,
    parse_trace_csv,
    run,
    save_trace,
)
from .oracles import (
    AscentReport,
    YStarOracle,
    ascent_distances,
    fd_grad_phi,
    grad_mapping,
    grad_phi,
    lyapunov,
    phi_value,
    y_star,
)
from .problems import (
    FAMILIES,
    MinimaxProblem,
    ProblemSpec,
    QuadCoupledProblem,
    SmoothnessReport,
    SparseAdversarialProblem,
    check_smoothness,
    generate,
    load_problem,
    problem_from_entries,
    problem_to_entries,
    save_problem,
)
from .prox import (
    BoxProx,
    L1Prox,
    ProxOperator,
    SqL2Prox,
    ZeroProx,
    make_prox,
    prox_box,
    prox_l1,
    prox_sq_l2,
    prox_zero,
)
from .solvers import (
    ALGORITHMS,
    SolverConfig,
    SolverState,
    default_config,
    step,
    step_altgda,
    step_altgdam,
    step_gda,
)

__version__ = "0.1.0"

__all__ = [
    "AGG_BOUND_CONST",
    "ALGORITHMS",
    "AscentReport",
    "BoundReport",
    "BoxProx",
    "CheckResult",
    "ContractError",
    "DEFAULT_KAPPA_GRID",
    "DivergenceError",
    "ENGINES",
    "FAMILIES",
    "ITER_CAP",
    "IndicatorInfeasibleError",
    "InapplicableConfigError",
    "InvariantViolation",
    "L1Prox",
    "MONOTONE_SLACK_REL",
    "MinimaxProblem",
    "NonconvergenceError",
    "ProblemSpec",
    "ProxOperator",
    "QuadCoupledProblem",
    "RunSpec",
    "RunTrace",
    "SCOPES",
    "STAB_THRESHOLD",
    "SmoothnessReport",
    "SolverConfig",
    "SolverState",
    "SparseAdversarialProblem",
    "SqL2Prox",
    "SweepCell",
    "SweepReport",
    "SweepSpec",
    "TRACE_COLUMNS",
    "TraceRow",
    "ValidationError",
    "YStarOracle",
    "ZeroProx",
    "as_vector",
    "ascent_distances",
    "axpy",
    "bound_suite",
    "check_aggregate_bound",
    "check_smoothness",
    "child_seed",
    "default_config",
    "dot",
    "fd_grad_phi",
    "fit_ascent_constant",
    "fit_exponent",
    "format_trace_csv",
    "generate",
    "grad_mapping",
    "grad_phi",
    "iterations_to_eps",
    "load_problem",
    "load_trace",
    "lyapunov",
    "lyapunov_suite",
    "make_prox",
    "make_rng",
    "monotone_margin",
    "norm2",
    "parse_summary_csv",
    "parse_sweep_csv",
    "parse_trace_csv",
    "phi_value",
    "problem_from_entries",
    "problem_to_entries",
    "prox_box",
    "prox_l1",
    "prox_sq_l2",
    "prox_suite",
    "prox_zero",
    "quantified_drop_margin",
    "regularity_suite",
    "resolve_threads",
    "run",
    "run_scope",
    "save_problem",
    "save_trace",
    "step",
    "step_altgda",
    "step_altgdam",
    "step_gda",
    "summary_csv_text",
    "sweep",
    "sweep_csv_text",
    "y_star",
]
