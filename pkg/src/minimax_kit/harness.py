"""Run driver: iterate a solver with per-iteration diagnostics, stopping rules,
and trace persistence.

Two interchangeable engines produce identical traces: ``python`` composes the
contract operations (``solvers.step_*``, ``oracles.*``) directly and is the
reference; ``fast`` is the compiled mirror in ``_fastloop`` for long runs.
Diagnostics (including the stopping quantity ||G(x_t)||) are evaluated at every
iteration regardless of ``diag_every``; the stride only controls which rows are
recorded. Stopping follows the min-so-far criterion, which equals stopping at
the first iterate with ||G(x_t)|| <= eps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import configdoc
from .core import (
    ContractError,
    DivergenceError,
    IndicatorInfeasibleError,
    NonconvergenceError,
    TRACE_COLUMNS,
    TraceRow,
    RunTrace,
    ValidationError,
    as_vector,
    norm2,
)
from .oracles import YStarOracle, grad_mapping, lyapunov, phi_value, y_star
from .problems import ProblemSpec, generate, load_problem, problem_to_entries
from .solvers import ALGORITHMS, SolverConfig, SolverState, default_config, step

__all__ = [
    "ENGINES",
    "STAB_THRESHOLD",
    "RunSpec",
    "run",
    "iterations_to_eps",
    "format_trace_csv",
    "parse_trace_csv",
    "save_trace",
    "load_trace",
]

ENGINES = ("auto", "python", "fast")

# Vanishing-increment threshold: dx_norm/dy_norm/y_gap are "stable" once below
# this, and the trace meta records the last iteration at or above it.
STAB_THRESHOLD = 1e-6

MONOTONE_SLACK_REL = 1e-9

_STATUS_NAMES = {
    0: "eps",
    1: "max_iters",
    2: "diverged",
    3: "diverged",
    4: "nonfinite_diagnostics",
    5: "oracle_nonconvergence",
}


@dataclass
class RunSpec:
    """Everything `run` needs. ``problem`` is a ProblemSpec recipe, a problem
    file path, or a constructed problem object; seed (when given) replaces the
    recipe's seed. x0/y0 default to zero vectors per the initialization rule."""

    problem: object
    algorithm: str = "prox_altgdam"
    config: SolverConfig | None = None
    max_iters: int = 2000
    eps: float = 1e-6
    diag_every: int = 1
    seed: int | None = None
    x0: np.ndarray | None = None
    y0: np.ndarray | None = None
    engine: str = "auto"
    ystar_mode: str = "auto"
    inner_tol: float = 1e-12
    inner_max_iters: int = 100000

    def validate(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ValidationError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if not isinstance(self.max_iters, int) or self.max_iters < 1:
            raise ValidationError(f"max_iters must be a positive integer, got {self.max_iters!r}")
        if not (isinstance(self.eps, (int, float)) and math.isfinite(self.eps) and self.eps > 0):
            raise ValidationError(f"eps must be a positive real, got {self.eps!r}")
        if not isinstance(self.diag_every, int) or self.diag_every < 1:
            raise ValidationError(f"diag_every must be a positive integer, got {self.diag_every!r}")
        if self.engine not in ENGINES:
            raise ValidationError(f"engine must be one of {ENGINES}, got {self.engine!r}")
        if self.ystar_mode not in ("auto", "closed_form", "iterative"):
            raise ValidationError(f"ystar_mode must be auto, closed_form, or iterative")
        if self.config is not None and self.config.algorithm != self.algorithm:
            raise ValidationError(
                f"config is for {self.config.algorithm}, spec asks for {self.algorithm}"
            )

    def resolve_problem(self):
        src = self.problem
        if isinstance(src, ProblemSpec):
            if self.seed is not None:
                src = replace(src, seed=self.seed)
            return generate(src)
        if isinstance(src, (str, bytes)) or hasattr(src, "__fspath__"):
            return load_problem(src)
        return src


def _resolve_ystar_mode(spec: RunSpec, p) -> str:
    if spec.ystar_mode != "auto":
        return spec.ystar_mode
    return "closed_form" if getattr(p, "closed_form_y_star", None) is not None else "iterative"


def _fast_supported(p, ystar_mode: str) -> bool:
    from .problems import QuadCoupledProblem, SparseAdversarialProblem
    from ._fastloop import REG_CODES

    if ystar_mode != "closed_form":
        return False
    if not isinstance(p, (QuadCoupledProblem, SparseAdversarialProblem)):
        return False
    return p.g.kind in REG_CODES and p.h.kind in ("zero", "l1")


def run(spec: RunSpec) -> RunTrace:
    """Iterate until min-so-far ||G(x_t)|| <= eps or t == max_iters.

    Solver divergence and non-finite diagnostics do not raise: the partial rows
    are preserved and the failure is recorded in meta (keys ``error``,
    ``error_quantity``, ``error_t``). Config errors raise before any iteration.
    """
    spec.validate()
    p = spec.resolve_problem()
    config = spec.config if spec.config is not None else default_config(p, spec.algorithm)
    if config.algorithm != spec.algorithm:
        raise ContractError(f"config algorithm {config.algorithm} != spec {spec.algorithm}")

    x0 = np.zeros(p.dim_x) if spec.x0 is None else as_vector(spec.x0, "x0")
    y0 = np.zeros(p.dim_y) if spec.y0 is None else as_vector(spec.y0, "y0")
    if x0.size != p.dim_x or y0.size != p.dim_y:
        raise ContractError(
            f"initial point dims ({x0.size},{y0.size}) do not match problem "
            f"({p.dim_x},{p.dim_y})"
        )
    if p.g.evaluate(x0) == math.inf:
        raise IndicatorInfeasibleError("x0 is infeasible for the indicator regularizer g")

    ystar_mode = _resolve_ystar_mode(spec, p)
    engine = spec.engine
    if engine == "auto":
        engine = "fast" if _fast_supported(p, ystar_mode) else "python"
    elif engine == "fast" and not _fast_supported(p, ystar_mode):
        raise ContractError("fast engine requires a generated family problem and closed-form y*")

    if engine == "fast":
        result = _fast_loop(p, config, x0, y0, spec)
    else:
        result = _python_loop(p, config, x0, y0, spec, ystar_mode)
    rows, counters = result

    meta = _base_meta(p, config, spec, engine, ystar_mode, x0, y0)
    (n_rows, status, err_t, hit, final_t, min_g, sum_gsq, mono_worst,
     last_dx, last_dy, last_gap) = counters
    status, err_t, hit, final_t = int(status), int(err_t), int(hit), int(final_t)
    last_dx, last_dy, last_gap = int(last_dx), int(last_dy), int(last_gap)
    min_g, sum_gsq, mono_worst = float(min_g), float(sum_gsq), float(mono_worst)
    meta["status"] = _STATUS_NAMES[status]
    meta["converged"] = "true" if status == 0 else "false"
    meta["hit_iter"] = str(hit)
    meta["final_t"] = str(final_t)
    meta["rows"] = str(len(rows))
    meta["min_grad_map_norm"] = repr(min_g)
    meta["grad_map_sq_sum_from_t2"] = repr(sum_gsq)
    meta["lyapunov_mono_worst"] = repr(mono_worst)
    meta["lyapunov_monotone"] = "true" if mono_worst <= 0.0 else "false"
    meta["last_above_threshold_dx"] = str(last_dx)
    meta["last_above_threshold_dy"] = str(last_dy)
    meta["last_above_threshold_ygap"] = str(last_gap)
    if status == 2:
        meta["error"] = "divergence"
        meta["error_quantity"] = "x"
        meta["error_t"] = str(err_t)
    elif status == 3:
        meta["error"] = "divergence"
        meta["error_quantity"] = "y"
        meta["error_t"] = str(err_t)
    elif status == 4:
        meta["error"] = "nonfinite_diagnostics"
        meta["error_t"] = str(err_t)
    elif status == 5:
        meta["error"] = "oracle_nonconvergence"
        meta["error_t"] = str(err_t)

    trace = RunTrace(rows=rows, meta=meta)
    trace.validate()
    return trace


def _base_meta(p, config, spec, engine, ystar_mode, x0, y0) -> dict[str, str]:
    meta = {
        "version": "1",
        "family": getattr(p, "family", type(p).__name__),
        "dim_x": str(p.dim_x),
        "dim_y": str(p.dim_y),
        "mu": repr(p.mu),
        "L": repr(p.L),
        "kappa": repr(p.kappa),
        "algorithm": config.algorithm,
        "eta_x": repr(config.eta_x),
        "eta_y": repr(config.eta_y),
        "beta": repr(config.beta),
        "gamma": repr(config.gamma),
        "eps": repr(float(spec.eps)),
        "max_iters": str(spec.max_iters),
        "diag_every": str(spec.diag_every),
        "engine": engine,
        "ystar_mode": ystar_mode,
        "stab_threshold": repr(STAB_THRESHOLD),
        "slack_rel": repr(MONOTONE_SLACK_REL),
        "x0": "zero" if not np.any(x0) else ",".join(repr(v) for v in x0.tolist()),
        "y0": "zero" if not np.any(y0) else ",".join(repr(v) for v in y0.tolist()),
    }
    if getattr(p, "seed", None) is not None:
        meta["problem_seed"] = str(p.seed)
    return meta


def _python_loop(p, config, x0, y0, spec: RunSpec, ystar_mode: str):
    """Reference engine: contract operations composed directly.

    The control flow (accumulators, recording, stopping) matches
    ``_fastloop.run_loop`` statement for statement.
    """
    oracle = YStarOracle(
        mode=ystar_mode, inner_tol=spec.inner_tol, inner_max_iters=spec.inner_max_iters
    )
    state = SolverState.initial(x0, y0)
    rows: list[TraceRow] = []

    n_rows = 0
    status = 1
    err_t = -1
    hit = -1
    min_g = math.inf
    sum_gsq = 0.0
    mono_worst = -math.inf
    h_last = 0.0
    last_dx = -1
    last_dy = -1
    last_gap = -1

    while True:
        t = state.t
        try:
            ys = y_star(p, state.x, oracle)
            grad_map = grad_mapping(p, state.x, config.eta_x, oracle)
            g_norm = norm2(grad_map)
            phi = phi_value(p, state.x, oracle)
            gval = p.g.evaluate(state.x)
            obj = phi + gval
            lyap = lyapunov(p, state, config, oracle)
        except NonconvergenceError:
            status = 5
            err_t = t
            break
        y_gap = norm2(state.y - ys)
        dx_norm = norm2(state.x - state.x_prev)
        dy_norm = norm2(state.y - state.y_prev)

        if not (math.isfinite(lyap) and math.isfinite(obj) and math.isfinite(g_norm)
                and math.isfinite(dx_norm) and math.isfinite(dy_norm)
                and math.isfinite(y_gap)):
            status = 4
            err_t = t
            break

        if t > 0:
            ah = abs(h_last)
            base = 1.0 if ah < 1.0 else ah
            sl = MONOTONE_SLACK_REL * base
            d_h = lyap - h_last
            margin = d_h - sl
            if margin > mono_worst:
                mono_worst = margin
        h_last = lyap
        if t >= 2:
            g2 = g_norm * g_norm
            sum_gsq += g2
        if dx_norm >= STAB_THRESHOLD:
            last_dx = t
        if dy_norm >= STAB_THRESHOLD:
            last_dy = t
        if y_gap >= STAB_THRESHOLD:
            last_gap = t
        if g_norm < min_g:
            min_g = g_norm

        stop_eps = g_norm <= spec.eps
        stop_cap = t == spec.max_iters
        if (t % spec.diag_every == 0) or stop_eps or stop_cap:
            rows.append(TraceRow(
                t=t, lyapunov=lyap, objective=obj, grad_map_norm=g_norm,
                dx_norm=dx_norm, dy_norm=dy_norm, y_gap=y_gap,
            ))
            n_rows += 1
        if stop_eps:
            status = 0
            hit = t
            break
        if stop_cap:
            status = 1
            break

        try:
            state = step(p, state, config)
        except DivergenceError as exc:
            status = 2 if exc.quantity == "x" else 3
            err_t = exc.t
            break

    counters = (n_rows, status, err_t, hit, state.t, min_g, sum_gsq, mono_worst,
                last_dx, last_dy, last_gap)
    return rows, counters


def _fast_loop(p, config, x0, y0, spec: RunSpec):
    from . import _fastloop

    g_params = p.g.params()
    g_p1 = float(g_params.get("weight", g_params.get("lo", 0.0)))
    g_p2 = float(g_params.get("hi", 0.0))
    h_params = p.h.params()
    h_p1 = float(h_params.get("weight", 0.0))

    cap = spec.max_iters // spec.diag_every + 2
    buf = np.empty((cap, 7))
    counters = _fastloop.run_loop(
        p.q, p.a, p.b, p.b_sign, p.mu,
        _fastloop.REG_CODES[p.g.kind], g_p1, g_p2,
        _fastloop.REG_CODES[p.h.kind], h_p1,
        _fastloop.ALG_CODES[config.algorithm],
        config.eta_x, config.eta_y, config.beta, config.gamma,
        x0, y0, spec.max_iters, float(spec.eps), spec.diag_every,
        STAB_THRESHOLD, MONOTONE_SLACK_REL, buf,
    )
    n_rows = int(counters[0])
    rows = [
        TraceRow(
            t=int(buf[i, 0]), lyapunov=float(buf[i, 1]), objective=float(buf[i, 2]),
            grad_map_norm=float(buf[i, 3]), dx_norm=float(buf[i, 4]),
            dy_norm=float(buf[i, 5]), y_gap=float(buf[i, 6]),
        )
        for i in range(n_rows)
    ]
    return rows, counters


def iterations_to_eps(trace: RunTrace, eps: float):
    """Smallest recorded t with grad_map_norm <= eps, or None if never."""
    if not trace.rows:
        raise ContractError("iterations_to_eps needs a nonempty trace")
    for row in trace.rows:
        if row.grad_map_norm <= eps:
            return row.t
    return None


def format_trace_csv(trace: RunTrace) -> str:
    """Exact trace format: fixed header, repr (shortest round-trip) floats,
    LF endings, no trailing delimiter."""
    lines = [",".join(TRACE_COLUMNS)]
    for row in trace.rows:
        lines.append(
            f"{row.t},{row.lyapunov!r},{row.objective!r},{row.grad_map_norm!r},"
            f"{row.dx_norm!r},{row.dy_norm!r},{row.y_gap!r}"
        )
    return "\n".join(lines) + "\n"


def parse_trace_csv(text: str) -> RunTrace:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0] != ",".join(TRACE_COLUMNS):
        raise ValidationError(f"bad trace header: {lines[0] if lines else ''!r}")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != len(TRACE_COLUMNS):
            raise ValidationError(f"trace line {lineno}: expected {len(TRACE_COLUMNS)} fields")
        try:
            rows.append(TraceRow(
                t=int(parts[0]), lyapunov=float(parts[1]), objective=float(parts[2]),
                grad_map_norm=float(parts[3]), dx_norm=float(parts[4]),
                dy_norm=float(parts[5]), y_gap=float(parts[6]),
            ))
        except ValueError as exc:
            raise ValidationError(f"trace line {lineno}: {exc}") from None
    trace = RunTrace(rows=rows, meta={})
    trace.validate()
    return trace


def save_trace(trace: RunTrace, csv_path, meta_path=None) -> None:
    with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_trace_csv(trace))
    if meta_path is not None:
        configdoc.save(trace.meta, meta_path)


def load_trace(csv_path, meta_path=None) -> RunTrace:
    with open(csv_path, "r", encoding="utf-8") as fh:
        trace = parse_trace_csv(fh.read())
    if meta_path is not None:
        trace.meta = configdoc.load(meta_path)
    return trace
