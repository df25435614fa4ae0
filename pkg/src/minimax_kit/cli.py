"""Command-line entry point: ``run``, ``sweep``, ``verify``, ``prox-check``.

Configuration comes from a flat key=value document (``#`` comments, dots as
section separators) merged with repeatable ``--set key=value`` overrides.
Every key has a default and is listed in the command's ``--help``; unknown
keys are rejected naming the nearest valid one.

Exit codes: 0 success, 1 usage or config error, 2 finished without reaching
eps, 3 invariant failure.
"""

from __future__ import annotations

import argparse
import difflib
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable

import numpy as np

from . import configdoc
from .checks import SCOPES, CheckResult, prox_suite, run_scope
from .complexity import SweepSpec, summary_csv_text, sweep, sweep_csv_text
from .core import (
    ContractError,
    IndicatorInfeasibleError,
    InapplicableConfigError,
    InvariantViolation,
    NonconvergenceError,
    ValidationError,
)
from .harness import ENGINES, RunSpec, run, save_trace
from .problems import FAMILIES, ProblemSpec, load_problem
from .solvers import ALGORITHMS, default_config


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage; the exit-code contract
    # reserves 2 for "finished without reaching eps", so route usage errors
    # through the normal error path instead.
    def error(self, message):
        raise _UsageError(message)


@dataclass(frozen=True)
class KeySpec:
    """One config key: textual default (as it appears in a document), a parser
    from text to value, and a help line."""

    default: str
    parse: Callable[[str], object]
    help: str


def _int_key(key: str) -> Callable[[str], int]:
    def parse(text: str) -> int:
        try:
            return int(text)
        except ValueError:
            raise ValidationError(f"{key} expects an integer, got {text!r}") from None

    return parse


def _float_key(key: str) -> Callable[[str], float]:
    def parse(text: str) -> float:
        try:
            return float(text)
        except ValueError:
            raise ValidationError(f"{key} expects a real number, got {text!r}") from None

    return parse


def _choice_key(key: str, options: tuple[str, ...]) -> Callable[[str], str]:
    def parse(text: str) -> str:
        if text not in options:
            raise ValidationError(f"{key} must be one of {', '.join(options)}; got {text!r}")
        return text

    return parse


def _floats_key(key: str) -> Callable[[str], tuple[float, ...]]:
    def parse(text: str) -> tuple[float, ...]:
        try:
            return tuple(float(part) for part in text.split(","))
        except ValueError:
            raise ValidationError(
                f"{key} expects comma-separated reals, got {text!r}"
            ) from None

    return parse


def _names_key(key: str) -> Callable[[str], tuple[str, ...]]:
    def parse(text: str) -> tuple[str, ...]:
        return tuple(part.strip() for part in text.split(",") if part.strip())

    return parse


def _vector_key(key: str) -> Callable[[str], "np.ndarray | None"]:
    def parse(text: str) -> "np.ndarray | None":
        if text == "zero":
            return None
        try:
            return np.array([float(part) for part in text.split(",")], dtype=np.float64)
        except ValueError:
            raise ValidationError(
                f"{key} expects 'zero' or comma-separated reals, got {text!r}"
            ) from None

    return parse


def _opt_float_key(key: str) -> Callable[[str], "float | None"]:
    def parse(text: str) -> "float | None":
        if text == "auto":
            return None
        try:
            return float(text)
        except ValueError:
            raise ValidationError(
                f"{key} expects 'auto' or a real number, got {text!r}"
            ) from None

    return parse


def _str_key(text: str) -> str:
    return text


_PROBLEM_KEYS: dict[str, KeySpec] = {
    "problem.file": KeySpec(
        "", _str_key, "path to a serialized problem; excludes the other problem.* keys"
    ),
    "problem.family": KeySpec(
        "quad_coupled", _choice_key("problem.family", FAMILIES), "problem family"
    ),
    "problem.dim_x": KeySpec("8", _int_key("problem.dim_x"), "dimension of x"),
    "problem.dim_y": KeySpec("8", _int_key("problem.dim_y"), "dimension of y"),
    "problem.kappa_target": KeySpec(
        "16.0", _float_key("problem.kappa_target"), "condition number L/mu, hit exactly"
    ),
    "problem.mu": KeySpec("1.0", _float_key("problem.mu"), "strong-concavity modulus"),
    "problem.g_weight": KeySpec(
        "0.0", _float_key("problem.g_weight"), "l1 weight on x (0 disables g)"
    ),
    "problem.lambda_y": KeySpec(
        "0.1", _float_key("problem.lambda_y"), "l1 weight on y (sparse_adversarial only)"
    ),
    "problem.seed": KeySpec("0", _int_key("problem.seed"), "generator seed"),
}

_RUN_KEYS: dict[str, KeySpec] = {
    "run.algorithm": KeySpec(
        "prox_altgdam", _choice_key("run.algorithm", ALGORITHMS), "solver to drive"
    ),
    "run.max_iters": KeySpec("2000", _int_key("run.max_iters"), "iteration cap"),
    "run.eps": KeySpec("1e-6", _float_key("run.eps"), "target on ||G(x_t)||"),
    "run.diag_every": KeySpec(
        "1", _int_key("run.diag_every"), "record every k-th diagnostic row"
    ),
    "run.engine": KeySpec(
        "auto", _choice_key("run.engine", ENGINES), "iteration engine"
    ),
    "run.ystar_mode": KeySpec(
        "auto",
        _choice_key("run.ystar_mode", ("auto", "closed_form", "iterative")),
        "inner-maximizer oracle mode",
    ),
    "run.inner_tol": KeySpec(
        "1e-12", _float_key("run.inner_tol"), "iterative oracle step tolerance"
    ),
    "run.inner_max_iters": KeySpec(
        "100000", _int_key("run.inner_max_iters"), "iterative oracle iteration cap"
    ),
    "run.x0": KeySpec("zero", _vector_key("run.x0"), "initial x ('zero' or comma reals)"),
    "run.y0": KeySpec("zero", _vector_key("run.y0"), "initial y ('zero' or comma reals)"),
}

_CONFIG_KEYS: dict[str, KeySpec] = {
    "config.eta_x": KeySpec(
        "auto", _opt_float_key("config.eta_x"), "descent stepsize ('auto' = stock value)"
    ),
    "config.eta_y": KeySpec(
        "auto", _opt_float_key("config.eta_y"), "ascent stepsize ('auto' = stock value)"
    ),
    "config.beta": KeySpec(
        "auto", _opt_float_key("config.beta"), "heavy-ball momentum ('auto' = stock value)"
    ),
    "config.gamma": KeySpec(
        "auto", _opt_float_key("config.gamma"), "Nesterov momentum ('auto' = stock value)"
    ),
}

_SWEEP_KEYS: dict[str, KeySpec] = {
    "sweep.kappa_grid": KeySpec(
        "2,4,8,16,32,64",
        _floats_key("sweep.kappa_grid"),
        "condition numbers, increasing, >= 4 points spanning a decade",
    ),
    "sweep.eps": KeySpec("1e-4", _float_key("sweep.eps"), "per-run target on ||G||"),
    "sweep.problems_per_kappa": KeySpec(
        "3", _int_key("sweep.problems_per_kappa"), "instances per grid point"
    ),
    "sweep.algorithms": KeySpec(
        "prox_altgdam,prox_gda", _names_key("sweep.algorithms"), "algorithms to compare"
    ),
    "sweep.seed": KeySpec("0", _int_key("sweep.seed"), "root seed for instance draws"),
    # Template keys for the generated instances; kappa and seed come from the
    # grid and the root seed, so problem.kappa_target/problem.seed are not
    # accepted here.
    "problem.family": _PROBLEM_KEYS["problem.family"],
    "problem.dim_x": _PROBLEM_KEYS["problem.dim_x"],
    "problem.dim_y": _PROBLEM_KEYS["problem.dim_y"],
    "problem.mu": _PROBLEM_KEYS["problem.mu"],
    "problem.g_weight": _PROBLEM_KEYS["problem.g_weight"],
    "problem.lambda_y": _PROBLEM_KEYS["problem.lambda_y"],
}

_VERIFY_KEYS: dict[str, KeySpec] = {
    "verify.scope": KeySpec(
        ",".join(SCOPES),
        _str_key,
        "comma-separated subset of: " + ", ".join(SCOPES),
    ),
    "verify.seed": KeySpec("0", _int_key("verify.seed"), "suite seed"),
    "verify.trials": KeySpec(
        "1000", _int_key("verify.trials"), "random trials per proximal operator"
    ),
    "verify.pairs": KeySpec(
        "500", _int_key("verify.pairs"), "random pairs per Lipschitz check"
    ),
    "verify.fd_points": KeySpec(
        "100", _int_key("verify.fd_points"), "finite-difference sample points"
    ),
    "verify.iters": KeySpec(
        "2000", _int_key("verify.iters"), "iterations per Lyapunov run"
    ),
    "verify.eta_x_scale": KeySpec(
        "1.0",
        _float_key("verify.eta_x_scale"),
        "multiplier on the stock eta_x in the lyapunov scope (>1 probes past its ceiling)",
    ),
    "verify.eps": KeySpec(
        "1e-6", _float_key("verify.eps"), "convergence target in the bound scope"
    ),
}

_PROX_CHECK_KEYS: dict[str, KeySpec] = {
    "verify.seed": _VERIFY_KEYS["verify.seed"],
    "verify.trials": _VERIFY_KEYS["verify.trials"],
}

_RUN_REGISTRY = {**_PROBLEM_KEYS, **_RUN_KEYS, **_CONFIG_KEYS}


def _keys_epilog(registry: dict[str, KeySpec]) -> str:
    lines = ["config keys and defaults:"]
    for name, spec in registry.items():
        shown = spec.default if spec.default != "" else "(unset)"
        lines.append(f"  {name}={shown}")
        lines.append(f"      {spec.help}")
    return "\n".join(lines)


def _seed_arg(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise ValueError("seed must fit in an unsigned 64-bit integer")
    return value


def _resolve_settings(
    config_path: "str | None", overrides: list[str], registry: dict[str, KeySpec]
) -> tuple[dict[str, object], dict[str, str]]:
    """Merge config document and --set overrides against the registry.

    Returns (parsed values for every key, the explicitly set textual entries).
    """
    merged: dict[str, str] = {}
    if config_path:
        merged.update(configdoc.load(config_path))
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep:
            raise ValidationError(f"--set expects key=value, got {item!r}")
        merged[key.strip()] = value.strip()
    for key in merged:
        if key not in registry:
            close = difflib.get_close_matches(key, registry.keys(), n=1)
            hint = (
                f"; nearest valid key: {close[0]}"
                if close
                else "; run with --help for the key list"
            )
            raise ValidationError(f"unknown key {key!r}{hint}")
    values = {
        key: spec.parse(merged.get(key, spec.default)) for key, spec in registry.items()
    }
    return values, merged


def _problem_source(values: dict[str, object], explicit: dict[str, str]):
    path = values["problem.file"]
    if path:
        clash = sorted(
            k for k in explicit if k.startswith("problem.") and k != "problem.file"
        )
        if clash:
            raise ValidationError(
                f"problem.file is set; remove the conflicting keys: {', '.join(clash)}"
            )
        return load_problem(path)
    return ProblemSpec(
        family=values["problem.family"],
        dim_x=values["problem.dim_x"],
        dim_y=values["problem.dim_y"],
        kappa_target=values["problem.kappa_target"],
        mu=values["problem.mu"],
        g_weight=values["problem.g_weight"],
        lambda_y=values["problem.lambda_y"],
        seed=values["problem.seed"],
    )


def _out_dir(args) -> Path:
    out = Path(args.out if args.out is not None else ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_run(args) -> int:
    values, explicit = _resolve_settings(args.config, args.overrides, _RUN_REGISTRY)
    algorithm = values["run.algorithm"]
    spec = RunSpec(
        problem=_problem_source(values, explicit),
        algorithm=algorithm,
        max_iters=values["run.max_iters"],
        eps=values["run.eps"],
        diag_every=values["run.diag_every"],
        seed=args.seed,
        x0=values["run.x0"],
        y0=values["run.y0"],
        engine=values["run.engine"],
        ystar_mode=values["run.ystar_mode"],
        inner_tol=values["run.inner_tol"],
        inner_max_iters=values["run.inner_max_iters"],
    )
    spec.validate()
    p = spec.resolve_problem()
    config = default_config(p, algorithm)
    cfg_overrides = {
        key.split(".", 1)[1]: values[key] for key in _CONFIG_KEYS if values[key] is not None
    }
    if cfg_overrides:
        config = replace(config, **cfg_overrides)
    spec.problem = p
    spec.seed = None
    spec.config = config

    trace = run(spec)
    out = _out_dir(args)
    save_trace(trace, out / "trace.csv", out / "meta.txt")

    if trace.rows:
        h_part = f"H={trace.rows[0].lyapunov:.9g} -> {trace.rows[-1].lyapunov:.9g}"
    else:
        h_part = "H=n/a"
    print(
        f"algorithm={algorithm} iterations={trace.meta_int('final_t')} "
        f"min_grad_map_norm={trace.meta_float('min_grad_map_norm'):.6g} {h_part}"
    )
    err = trace.meta.get("error")
    if err is not None:
        print(f"error: {err} at t={trace.meta.get('error_t')}", file=sys.stderr)
        return 1
    return 0 if trace.meta_bool("converged") else 2


def _cmd_sweep(args) -> int:
    values, explicit = _resolve_settings(args.config, args.overrides, _SWEEP_KEYS)
    template = ProblemSpec(
        family=values["problem.family"],
        dim_x=values["problem.dim_x"],
        dim_y=values["problem.dim_y"],
        mu=values["problem.mu"],
        g_weight=values["problem.g_weight"],
        lambda_y=values["problem.lambda_y"],
    )
    seed = args.seed if args.seed is not None else values["sweep.seed"]
    spec = SweepSpec(
        kappa_grid=values["sweep.kappa_grid"],
        eps=values["sweep.eps"],
        problems_per_kappa=values["sweep.problems_per_kappa"],
        algorithms=values["sweep.algorithms"],
        template=template,
        seed=seed,
    )
    report = sweep(spec)

    out = _out_dir(args)
    (out / "sweep.csv").write_text(sweep_csv_text(report), encoding="utf-8")
    (out / "summary.csv").write_text(summary_csv_text(report), encoding="utf-8")
    meta = {key: explicit.get(key, ks.default) for key, ks in _SWEEP_KEYS.items()}
    meta["sweep.seed"] = str(seed)
    for alg in spec.algorithms:
        meta[f"result.{alg}.flag"] = report.flags[alg]
    configdoc.save(meta, out / "meta.txt")

    for alg in spec.algorithms:
        fit = report.fits.get(alg)
        if fit is None:
            print(f"{alg}: no fit ({report.flags[alg]})")
        else:
            exponent, intercept, r2 = fit
            print(
                f"{alg}: exponent={exponent:.4f} intercept={intercept:.4f} "
                f"r2={r2:.4f} ({report.flags[alg]})"
            )
    return 0


def _print_rows(rows: list[CheckResult]) -> list[CheckResult]:
    failures = []
    for row in rows:
        mark = "PASS" if row.passed else "FAIL"
        print(f"{mark} {row.name} worst={row.worst:+.6e} | {row.detail}")
        if not row.passed:
            failures.append(row)
    print(f"{len(rows)} checks, {len(failures)} failed")
    return failures


def _write_replays(failures: list[CheckResult], out: Path) -> None:
    index = 0
    written = []
    for row in failures:
        if not row.replay:
            continue
        for fname, text in sorted(row.replay.items()):
            path = out / f"fail{index:02d}_{fname}"
            path.write_text(text, encoding="utf-8")
            written.append(str(path))
        index += 1
    if written:
        print("failing instances written for replay:", ", ".join(written), file=sys.stderr)


def _cmd_verify(args) -> int:
    values, _ = _resolve_settings(args.config, args.overrides, _VERIFY_KEYS)
    scope_text = values["verify.scope"]
    scopes = []
    for part in str(scope_text).split(","):
        name = part.strip()
        if not name:
            continue
        if name not in SCOPES:
            raise ValidationError(
                f"unknown scope {name!r}; valid scopes: {', '.join(SCOPES)}"
            )
        if name not in scopes:
            scopes.append(name)
    if not scopes:
        raise ValidationError("verify.scope must name at least one of: " + ", ".join(SCOPES))
    seed = args.seed if args.seed is not None else values["verify.seed"]

    rows: list[CheckResult] = []
    for scope in scopes:
        rows.extend(
            run_scope(
                scope,
                seed=seed,
                trials=values["verify.trials"],
                pairs=values["verify.pairs"],
                fd_points=values["verify.fd_points"],
                iters=values["verify.iters"],
                eta_x_scale=values["verify.eta_x_scale"],
                eps=values["verify.eps"],
            )
        )
    failures = _print_rows(rows)
    if failures:
        _write_replays(failures, _out_dir(args))
        return 3
    return 0


def _cmd_prox_check(args) -> int:
    values, _ = _resolve_settings(args.config, args.overrides, _PROX_CHECK_KEYS)
    seed = args.seed if args.seed is not None else values["verify.seed"]
    failures = _print_rows(prox_suite(seed=seed, trials=values["verify.trials"]))
    return 3 if failures else 0


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="minimax-kit",
        description="Solvers, oracles, and benchmarks for regularized "
        "nonconvex-strongly-concave minimax problems.",
    )
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True
    commands = (
        ("run", _cmd_run, _RUN_REGISTRY, True,
         "solve one problem; writes trace.csv and meta.txt"),
        ("sweep", _cmd_sweep, _SWEEP_KEYS, True,
         "condition-number sweep; writes sweep.csv, summary.csv, and meta.txt"),
        ("verify", _cmd_verify, _VERIFY_KEYS, False,
         "run property suites; exit 3 and serialize failing instances on violation"),
        ("prox-check", _cmd_prox_check, _PROX_CHECK_KEYS, False,
         "run only the proximal-operator property suite"),
    )
    for name, fn, registry, out_required, desc in commands:
        cmd = sub.add_parser(
            name,
            help=desc,
            description=desc,
            epilog=_keys_epilog(registry),
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )
        cmd.add_argument("--config", metavar="PATH", help="key=value config document")
        cmd.add_argument(
            "--out",
            metavar="DIR",
            required=out_required,
            help="output directory" + ("" if out_required else " (default: .)"),
        )
        cmd.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override one config key (repeatable)",
        )
        cmd.add_argument(
            "--seed",
            type=_seed_arg,
            default=None,
            help="seed override (unsigned 64-bit); replaces the seed key of the command",
        )
        cmd.set_defaults(fn=fn)
    return parser


def main(argv: "list[str] | None" = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        return args.fn(args)
    except (
        ValidationError,
        ContractError,
        InapplicableConfigError,
        IndicatorInfeasibleError,
        NonconvergenceError,
        OSError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except InvariantViolation as exc:
        print(f"invariant failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
