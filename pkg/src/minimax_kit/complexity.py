"""Condition-number sweeps, the log-log exponent fit, and the aggregate
gradient-mapping bound check.

A sweep varies kappa by scaling the coupling block's top singular value with mu
fixed (the generator pins L = kappa*mu exactly and ties Q's spectrum radius to
0.5*L), runs each algorithm on the same seeded instances, and reports the
median iterations-to-eps per (kappa, algorithm) cell. Runs that miss eps within
the 1e7-iteration cap are censored: they enter the median as +inf, a cell is
censored when its median is +inf, and fits exclude censored cells and say so.
"""

from __future__ import annotations

import math
import os
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .core import ContractError, InapplicableConfigError, ValidationError, child_seed
from .harness import RunSpec, run
from .problems import ProblemSpec, generate
from .solvers import ALGORITHMS, SolverConfig

__all__ = [
    "ITER_CAP",
    "SweepSpec",
    "SweepCell",
    "SweepReport",
    "BoundReport",
    "sweep",
    "fit_exponent",
    "check_aggregate_bound",
    "resolve_threads",
    "sweep_csv_text",
    "summary_csv_text",
    "parse_sweep_csv",
    "parse_summary_csv",
]

# Iteration budget per sweep run; beyond it the cell is censored.
ITER_CAP = 10**7

DEFAULT_KAPPA_GRID = (2.0, 4.0, 8.0, 16.0, 32.0, 64.0)

# Proof constant of the aggregate bound sum_{t>=1} ||G(x_{t+1})||^2
# <= AGG_BOUND_CONST * L * kappa^1.5 * (H(z_0) - lower bound).
AGG_BOUND_CONST = 10092.0


@dataclass(frozen=True)
class SweepSpec:
    kappa_grid: tuple[float, ...] = DEFAULT_KAPPA_GRID
    eps: float = 1e-4
    problems_per_kappa: int = 3
    algorithms: tuple[str, ...] = ("prox_altgdam", "prox_gda")
    template: ProblemSpec = field(default_factory=ProblemSpec)
    seed: int = 0

    def validate(self) -> None:
        grid = self.kappa_grid
        if len(grid) < 4:
            raise ValidationError(f"kappa_grid needs >= 4 points for the fit, got {len(grid)}")
        for v in grid:
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v >= 2):
                raise ValidationError(f"kappa_grid values must be reals >= 2, got {v!r}")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValidationError("kappa_grid must be strictly increasing")
        if grid[-1] / grid[0] < 10:
            raise ValidationError("kappa_grid must span at least one decade")
        if not (math.isfinite(self.eps) and self.eps > 0):
            raise ValidationError(f"eps must be a positive real, got {self.eps!r}")
        if not isinstance(self.problems_per_kappa, int) or self.problems_per_kappa < 3:
            raise ValidationError(
                f"problems_per_kappa must be an integer >= 3, got {self.problems_per_kappa!r}"
            )
        if not self.algorithms:
            raise ValidationError("algorithms must be a nonempty subset of the solvers")
        if len(set(self.algorithms)) != len(self.algorithms):
            raise ValidationError("algorithms must not repeat")
        for alg in self.algorithms:
            if alg not in ALGORITHMS:
                raise ValidationError(f"unknown algorithm {alg!r}")
        if not isinstance(self.template, ProblemSpec):
            raise ValidationError("template must be a ProblemSpec")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ValidationError(f"seed must be a nonnegative integer, got {self.seed!r}")


@dataclass(frozen=True)
class SweepCell:
    algorithm: str
    kappa: float
    instance: int
    iterations: int  # executed iterations; equals the cap when censored
    censored: bool


@dataclass
class SweepReport:
    spec: SweepSpec
    cells: list[SweepCell]
    medians: dict[tuple[str, float], float]  # +inf marks a censored cell
    fits: dict[str, tuple[float, float, float] | None]  # exponent, intercept, r2
    flags: dict[str, str]  # ok | censored_cells_excluded | too_few_points | all_censored


def resolve_threads(threads: int | None = None) -> int:
    """Explicit argument, else MINIMAX_KIT_THREADS, else one per CPU (0 = auto)."""
    if threads is None:
        raw = os.environ.get("MINIMAX_KIT_THREADS", "0")
        try:
            threads = int(raw)
        except ValueError:
            raise ValidationError(f"MINIMAX_KIT_THREADS must be an integer, got {raw!r}") from None
    if threads < 0:
        raise ValidationError(f"thread count must be >= 0, got {threads}")
    return threads if threads > 0 else (os.cpu_count() or 1)


def sweep(spec: SweepSpec, threads: int | None = None) -> SweepReport:
    """Run the grid, aggregate medians, fit exponents.

    Cells are independent runs fanned out over a thread pool (the compiled loop
    releases the GIL); aggregation orders results by (algorithm, kappa,
    instance), so the report does not depend on scheduling.
    """
    spec.validate()
    problems = {}
    for ki, kappa in enumerate(spec.kappa_grid):
        for inst in range(spec.problems_per_kappa):
            pspec = replace(
                spec.template,
                kappa_target=float(kappa),
                seed=child_seed(spec.seed, ki, inst),
            )
            problems[(ki, inst)] = generate(pspec)

    tasks = [
        (alg, ki, kappa, inst)
        for alg in spec.algorithms
        for ki, kappa in enumerate(spec.kappa_grid)
        for inst in range(spec.problems_per_kappa)
    ]

    def run_cell(task):
        alg, ki, kappa, inst = task
        trace = run(RunSpec(
            problem=problems[(ki, inst)],
            algorithm=alg,
            max_iters=ITER_CAP,
            eps=spec.eps,
            diag_every=ITER_CAP,
        ))
        hit = trace.meta_int("hit_iter")
        if trace.meta_bool("converged"):
            return SweepCell(alg, float(kappa), inst, hit, False)
        return SweepCell(alg, float(kappa), inst, trace.meta_int("final_t"), True)

    n_workers = min(resolve_threads(threads), len(tasks))
    if n_workers <= 1:
        cells = [run_cell(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            cells = list(pool.map(run_cell, tasks))
    cells.sort(key=lambda c: (spec.algorithms.index(c.algorithm), c.kappa, c.instance))

    medians: dict[tuple[str, float], float] = {}
    for alg in spec.algorithms:
        for kappa in spec.kappa_grid:
            vals = [
                math.inf if c.censored else float(c.iterations)
                for c in cells
                if c.algorithm == alg and c.kappa == kappa
            ]
            medians[(alg, float(kappa))] = statistics.median(vals)

    fits: dict[str, tuple[float, float, float] | None] = {}
    flags: dict[str, str] = {}
    for alg in spec.algorithms:
        points = [
            (kappa, medians[(alg, float(kappa))])
            for kappa in spec.kappa_grid
            if math.isfinite(medians[(alg, float(kappa))])
        ]
        n_censored = len(spec.kappa_grid) - len(points)
        if not points:
            fits[alg] = None
            flags[alg] = "all_censored"
        elif len(points) < 4:
            fits[alg] = None
            flags[alg] = "too_few_points"
        else:
            fits[alg] = fit_exponent(points)
            flags[alg] = "censored_cells_excluded" if n_censored else "ok"
    return SweepReport(spec=spec, cells=cells, medians=medians, fits=fits, flags=flags)


def fit_exponent(points) -> tuple[float, float, float]:
    """Ordinary least squares of log T on log kappa.

    Returns (slope, intercept, r2); r2 is 1 when the data is exactly
    log-linear, including the constant-T case.
    """
    pts = [(float(k), float(t)) for k, t in points]
    if len(pts) < 4:
        raise ValidationError(f"exponent fit needs >= 4 points, got {len(pts)}")
    for k, t in pts:
        if not (math.isfinite(k) and k > 0 and math.isfinite(t) and t > 0):
            raise ValidationError(f"exponent fit needs positive finite points, got ({k!r}, {t!r})")
    lx = np.array([math.log(k) for k, _ in pts])
    ly = np.array([math.log(t) for _, t in pts])
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_res = float(np.dot(resid, resid))
    centered = ly - ly.mean()
    ss_tot = float(np.dot(centered, centered))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), float(r2)


@dataclass(frozen=True)
class BoundReport:
    lhs: float  # sum_{t>=2 rows} ||G(x_t)||^2
    rhs: float  # AGG_BOUND_CONST * L * kappa^1.5 * (H(z_0) - lower_bound)
    ratio: float
    passed: bool
    impossible_input: bool  # lower_bound above H(z_0)


def check_aggregate_bound(trace, p, config: SolverConfig, lower_bound: float) -> BoundReport:
    """Check the aggregate gradient-mapping bound on a finished AltGDAm trace.

    Only applicable at the stock stepsizes (eta_x at its ceiling, beta <= 1/4,
    gamma at its formula): the constant is derived for those choices.
    """
    _require_stock_stepsizes(p, config)
    if not trace.rows:
        raise ContractError("aggregate bound needs a nonempty trace")
    if not (isinstance(lower_bound, (int, float)) and math.isfinite(lower_bound)):
        raise ContractError(f"lower_bound must be finite, got {lower_bound!r}")
    if "grad_map_sq_sum_from_t2" in trace.meta:
        lhs = trace.meta_float("grad_map_sq_sum_from_t2")
    else:
        ts = [r.t for r in trace.rows]
        if any(b - a != 1 for a, b in zip(ts, ts[1:])):
            raise ContractError(
                "trace lacks the gradient-map sum and its rows are strided; rerun with diag_every=1"
            )
        lhs = sum(r.grad_map_norm**2 for r in trace.rows if r.t >= 2)
    h0 = trace.rows[0].lyapunov
    if trace.rows[0].t != 0:
        raise ContractError("trace does not start at t=0")
    rhs = float(AGG_BOUND_CONST * p.L * p.kappa**1.5 * (h0 - lower_bound))
    impossible = bool(lower_bound > h0)
    ratio = math.inf if rhs <= 0 else lhs / rhs
    if lhs == 0.0 and rhs >= 0.0:
        ratio = 0.0
    return BoundReport(
        lhs=float(lhs), rhs=rhs, ratio=float(ratio),
        passed=bool((not impossible) and lhs <= rhs),
        impossible_input=impossible,
    )


def _require_stock_stepsizes(p, config: SolverConfig) -> None:
    if config.algorithm != "prox_altgdam":
        raise InapplicableConfigError(
            f"aggregate bound applies to prox_altgdam, not {config.algorithm}"
        )
    eta_ref = 1.0 / (56.0 * p.L * p.kappa**1.5)
    if not math.isclose(config.eta_x, eta_ref, rel_tol=1e-12):
        raise InapplicableConfigError(
            f"aggregate bound needs eta_x at its ceiling {eta_ref!r}, got {config.eta_x!r}"
        )
    if config.beta > 0.25:
        raise InapplicableConfigError(f"aggregate bound needs beta <= 1/4, got {config.beta!r}")
    sqk = math.sqrt(p.kappa)
    gamma_ref = (sqk - 1.0) / (sqk + 1.0)
    if not math.isclose(config.gamma, gamma_ref, rel_tol=1e-12, abs_tol=1e-15):
        raise InapplicableConfigError(
            f"aggregate bound needs gamma at its formula value {gamma_ref!r}, got {config.gamma!r}"
        )


def sweep_csv_text(report: SweepReport) -> str:
    lines = ["algorithm,kappa,instance,iterations,censored"]
    for c in report.cells:
        lines.append(
            f"{c.algorithm},{c.kappa!r},{c.instance},{c.iterations},"
            f"{'true' if c.censored else 'false'}"
        )
    return "\n".join(lines) + "\n"


def summary_csv_text(report: SweepReport) -> str:
    lines = ["algorithm,exponent,intercept,r2"]
    for alg in report.spec.algorithms:
        fit = report.fits.get(alg)
        if fit is None:
            continue
        exponent, intercept, r2 = fit
        lines.append(f"{alg},{exponent!r},{intercept!r},{r2!r}")
    return "\n".join(lines) + "\n"


def parse_sweep_csv(text: str) -> list[SweepCell]:
    lines = [ln for ln in text.split("\n") if ln != ""]
    if not lines or lines[0] != "algorithm,kappa,instance,iterations,censored":
        raise ValidationError("bad sweep csv header")
    cells = []
    for ln in lines[1:]:
        alg, kappa, inst, iters, cens = ln.split(",")
        if cens not in ("true", "false"):
            raise ValidationError(f"bad censored flag {cens!r}")
        cells.append(SweepCell(alg, float(kappa), int(inst), int(iters), cens == "true"))
    return cells


def parse_summary_csv(text: str) -> dict[str, tuple[float, float, float]]:
    lines = [ln for ln in text.split("\n") if ln != ""]
    if not lines or lines[0] != "algorithm,exponent,intercept,r2":
        raise ValidationError("bad summary csv header")
    out = {}
    for ln in lines[1:]:
        alg, exponent, intercept, r2 = ln.split(",")
        out[alg] = (float(exponent), float(intercept), float(r2))
    return out
