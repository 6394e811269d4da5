"""Command-line interface.

Subcommands: gen, solve, sweep, converge, probe {hessian,r0,diffineq,derivs},
gradcheck.  Options can also come from a JSON config file (--config) whose
keys mirror the long flag names with underscores; explicit flags override the
file, and the APR_SEED environment variable overrides any configured seed.

Exit codes: 0 success, 1 invalid arguments, 2 probe/acceptance failure (or
degenerate data), 3 I/O error, 4 divergence in a single-solve command.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import (
    AffineprError,
    DivergedError,
)
from .experiments import (
    emit_csv,
    emit_json,
    emit_plot,
    run_convergence_experiment,
    run_success_sweep,
)
from .model import generate_instance, load_instance, save_instance
from .probes import (
    probe_difference_inequality,
    probe_r0_sandwich,
    probe_strong_convexity,
    run_derivative_checks,
)
from .rng import RngSpec, STREAM_INIT, resolve_seed
from .solver import SolverConfig, gradient_descent, parse_step

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PROBE_FAILURE = 2
EXIT_IO = 3
EXIT_DIVERGED = 4


class _Parser(argparse.ArgumentParser):
    """argparse with exit code 1 on usage errors (default would be 2)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_common(p: _Parser, *names: str) -> None:
    if "d" in names:
        p.add_argument("--d", type=int, default=None, help="signal dimension")
    if "m" in names:
        p.add_argument("--m", type=int, default=None, help="number of measurements")
    if "ratio" in names:
        p.add_argument("--ratio", type=float, default=None, help="m/d (used when --m absent)")
    if "bias" in names:
        p.add_argument("--bias-lambda", type=float, default=None, help="bias scale (default 5)")
    if "sigma" in names:
        p.add_argument("--sigma", type=float, default=None, help="noise level (default 0)")
    if "step" in names:
        p.add_argument(
            "--step", type=str, default=None, help="fixed:<mu> | auto[:safety] | backtrack"
        )
    if "iters" in names:
        p.add_argument("--iters", type=int, default=None, help="iteration budget (default 10000)")
    if "tol" in names:
        p.add_argument("--tol", type=float, default=None, help="success tolerance (default 1e-5)")
    if "trials" in names:
        p.add_argument("--trials", type=int, default=None, help="Monte Carlo trials")
    if "seed" in names:
        p.add_argument("--seed", type=int, default=None, help="base seed (APR_SEED overrides)")
    if "jobs" in names:
        p.add_argument("--jobs", type=int, default=None, help="worker threads (output-invariant)")
    if "out" in names:
        p.add_argument("--out", type=str, default=None, help="output path")
    if "format" in names:
        p.add_argument(
            "--format", type=str, default=None, choices=["csv", "json", "svg"], help="output format"
        )
    p.add_argument("--config", type=str, default=None, help="JSON file mirroring the flags")


def build_parser() -> _Parser:
    parser = _Parser(prog="affinepr", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate and save an instance")
    _add_common(p, "d", "m", "ratio", "bias", "sigma", "seed", "out")

    p = sub.add_parser("solve", help="single solve; JSON summary on stdout")
    p.add_argument("--in", dest="infile", type=str, default=None, help="instance file to load")
    _add_common(p, "d", "m", "ratio", "bias", "sigma", "step", "iters", "tol", "seed", "out")

    p = sub.add_parser("sweep", help="success rate vs sampling ratio")
    p.add_argument("--ratios", type=str, default=None, help="comma list, e.g. 3,4,5,6,7,8")
    _add_common(
        p, "d", "bias", "sigma", "step", "iters", "tol", "trials", "seed", "jobs", "out", "format"
    )

    p = sub.add_parser("converge", help="instrumented single solve with full trace")
    _add_common(
        p, "d", "m", "ratio", "bias", "sigma", "step", "iters", "tol", "seed", "jobs",
        "out", "format",
    )

    probe = sub.add_parser("probe", help="landscape probes")
    psub = probe.add_subparsers(dest="probe_kind", required=True)

    p = psub.add_parser("hessian", help="curvature positivity over a large ball")
    p.add_argument("--points", type=int, default=None, help="sample points (default 20)")
    p.add_argument("--mult", type=float, default=None, help="ball radius multiplier (default 10)")
    _add_common(p, "d", "m", "ratio", "bias", "seed", "out")

    p = psub.add_parser("r0", help="norm sandwich of the data-derived radius")
    p.add_argument("--min-fraction", type=float, default=None, help="pass threshold (default 0.99)")
    _add_common(p, "d", "m", "ratio", "bias", "trials", "seed", "out")

    p = psub.add_parser("diffineq", help="averaged intensity-difference inequality")
    p.add_argument("--pairs", type=int, default=None, help="random pairs (default 200)")
    p.add_argument("--min-fraction", type=float, default=None, help="pass threshold (default 1.0)")
    _add_common(p, "d", "m", "ratio", "bias", "seed", "out")

    p = psub.add_parser("derivs", help="derivative cross-checks against oracles")
    p.add_argument("--cases", type=int, default=None, help="random cases (default 100)")
    p.add_argument("--max-d", type=int, default=None, help="largest dimension (default 16)")
    _add_common(p, "seed", "out")

    p = sub.add_parser("gradcheck", help="alias of probe derivs")
    p.add_argument("--cases", type=int, default=None)
    p.add_argument("--max-d", type=int, default=None)
    _add_common(p, "seed", "out")

    return parser


# ---------------------------------------------------------------------------
# Option resolution


def _load_config(path) -> dict:
    if not path:
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    return data


class _Options:
    """Flag > config-file > default resolution for one invocation."""

    def __init__(self, args: argparse.Namespace):
        self.args = vars(args)
        self.config = _load_config(self.args.get("config"))

    def get(self, key: str, default=None):
        v = self.args.get(key)
        if v is not None:
            return v
        if key in self.config:
            return self.config[key]
        return default

    def require(self, key: str):
        v = self.get(key)
        if v is None:
            raise ValueError(f"missing required option --{key.replace('_', '-')}")
        return v

    def seed(self, default: int = 0) -> int:
        raw = self.get("seed")
        return resolve_seed(None if raw is None else int(raw), default=default)

    def size_m(self, d: int):
        m = self.get("m")
        if m is not None:
            return int(m)
        ratio = self.get("ratio")
        if ratio is not None:
            return max(1, round(float(ratio) * d))
        return None


def _solver_config(opt: _Options) -> SolverConfig:
    step = parse_step(str(opt.get("step", "auto")))
    return SolverConfig(
        step=step,
        max_iters=int(opt.get("iters", 10_000)),
        success_tol=float(opt.get("tol", 1e-5)),
    )


def _print_json(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


def _write_result(result, out, fmt: str) -> None:
    if out is None:
        return
    if fmt == "csv":
        emit_csv(result, out)
    elif fmt == "json":
        emit_json(result, out)
    elif fmt == "svg":
        emit_plot(result, out)
    else:
        raise ValueError(f"unknown format {fmt!r}")


# ---------------------------------------------------------------------------
# Commands


def _cmd_gen(opt: _Options) -> int:
    d = int(opt.require("d"))
    m = opt.size_m(d)
    if m is None:
        raise ValueError("need --m or --ratio")
    out = opt.require("out")
    inst = generate_instance(
        d,
        m,
        bias_lambda=float(opt.get("bias_lambda", 5.0)),
        sigma=float(opt.get("sigma", 0.0)),
        rng=RngSpec(opt.seed()),
    )
    path = save_instance(inst, str(out))
    print(path)
    return EXIT_OK


def _cmd_solve(opt: _Options) -> int:
    infile = opt.get("infile")
    if infile:
        inst = load_instance(str(infile))
    else:
        d = int(opt.require("d"))
        m = opt.size_m(d)
        if m is None:
            raise ValueError("need --m or --ratio (or --in)")
        inst = generate_instance(
            d,
            m,
            bias_lambda=float(opt.get("bias_lambda", 5.0)),
            sigma=float(opt.get("sigma", 0.0)),
            rng=RngSpec(opt.seed()),
        )
    config = _solver_config(opt)
    seed_spec = RngSpec(inst.seed if inst.seed is not None else opt.seed())
    try:
        trace = gradient_descent(inst, config, rng=seed_spec.derive(STREAM_INIT))
    except DivergedError as exc:
        trace = exc.trace
        if trace is not None:
            _write_result(trace, opt.get("out"), "csv")
            _print_json(trace.summary())
        print(f"diverged at iteration {exc.iteration}", file=sys.stderr)
        return EXIT_DIVERGED
    _write_result(trace, opt.get("out"), "csv")
    _print_json(trace.summary())
    return EXIT_OK


def _parse_ratios(text: str) -> list:
    try:
        out = [float(tok) for tok in str(text).split(",") if tok.strip()]
    except ValueError as exc:
        raise ValueError(f"cannot parse ratio list {text!r}") from exc
    if not out:
        raise ValueError("empty ratio list")
    return out


def _cmd_sweep(opt: _Options) -> int:
    d = int(opt.require("d"))
    ratios = _parse_ratios(opt.get("ratios", "3,4,5,6,7,8"))
    result = run_success_sweep(
        d,
        ratios,
        trials=int(opt.get("trials", 100)),
        config=_solver_config(opt),
        base_seed=opt.seed(),
        bias_lambda=float(opt.get("bias_lambda", 5.0)),
        sigma=float(opt.get("sigma", 0.0)),
        jobs=int(opt.get("jobs", 1)),
    )
    fmt = str(opt.get("format", "csv"))
    out = opt.get("out")
    if out is None:
        if fmt == "json":
            _print_json(result.to_dict())
        else:
            emit_csv(result, sys.stdout)
    else:
        _write_result(result, str(out), fmt)
    return EXIT_OK


def _cmd_converge(opt: _Options) -> int:
    d = int(opt.require("d"))
    m = opt.size_m(d)
    if m is None:
        m = max(1, round(7.0 * d))
    result = run_convergence_experiment(
        d,
        m,
        sigma=float(opt.get("sigma", 0.0)),
        config=_solver_config(opt),
        seed=opt.seed(),
        bias_lambda=float(opt.get("bias_lambda", 5.0)),
    )
    out = opt.get("out")
    if out is not None:
        _write_result(result, str(out), str(opt.get("format", "csv")))
    _print_json(result.to_dict())
    return EXIT_DIVERGED if result.diverged else EXIT_OK


def _cmd_probe_hessian(opt: _Options) -> int:
    d = int(opt.get("d", 32))
    m = opt.size_m(d) or 3000
    seed = opt.seed()
    inst = generate_instance(d, m, float(opt.get("bias_lambda", 5.0)), 0.0, rng=RngSpec(seed))
    report = probe_strong_convexity(
        inst,
        num_points=int(opt.get("points", 20)),
        ball_radius_mult=float(opt.get("mult", 10.0)),
        rng=RngSpec(seed),
    )
    payload = report.to_dict()
    payload.update({"d": d, "m": m, "seed": seed})
    _maybe_out_json(opt, payload)
    _print_json(payload)
    return EXIT_OK if report.passed else EXIT_PROBE_FAILURE


def _cmd_probe_r0(opt: _Options) -> int:
    d = int(opt.get("d", 64))
    m = opt.size_m(d) or 10 * d
    trials = int(opt.get("trials", 100))
    min_fraction = float(opt.get("min_fraction", 0.99))
    seed = opt.seed()
    fraction = probe_r0_sandwich(d, m, float(opt.get("bias_lambda", 5.0)), trials, RngSpec(seed))
    payload = {
        "d": d,
        "m": m,
        "trials": trials,
        "fraction": fraction,
        "min_fraction": min_fraction,
        "seed": seed,
        "passed": fraction >= min_fraction,
    }
    _maybe_out_json(opt, payload)
    _print_json(payload)
    return EXIT_OK if payload["passed"] else EXIT_PROBE_FAILURE


def _cmd_probe_diffineq(opt: _Options) -> int:
    d = int(opt.get("d", 32))
    m = opt.size_m(d) or 2000
    pairs = int(opt.get("pairs", 200))
    min_fraction = float(opt.get("min_fraction", 1.0))
    seed = opt.seed()
    fraction = probe_difference_inequality(
        d, m, float(opt.get("bias_lambda", 5.0)), pairs, RngSpec(seed)
    )
    payload = {
        "d": d,
        "m": m,
        "pairs": pairs,
        "fraction": fraction,
        "min_fraction": min_fraction,
        "seed": seed,
        "passed": fraction >= min_fraction,
    }
    _maybe_out_json(opt, payload)
    _print_json(payload)
    return EXIT_OK if payload["passed"] else EXIT_PROBE_FAILURE


def _cmd_probe_derivs(opt: _Options) -> int:
    report = run_derivative_checks(
        num_cases=int(opt.get("cases", 100)),
        max_d=int(opt.get("max_d", 16)),
        rng=RngSpec(opt.seed()),
    )
    payload = report.to_dict()
    _maybe_out_json(opt, payload)
    _print_json(payload)
    return EXIT_OK if report.passed else EXIT_PROBE_FAILURE


def _maybe_out_json(opt: _Options, payload: dict) -> None:
    out = opt.get("out")
    if out:
        with open(str(out), "w", encoding="utf-8", newline="\n") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")


_COMMANDS = {
    "gen": _cmd_gen,
    "solve": _cmd_solve,
    "sweep": _cmd_sweep,
    "converge": _cmd_converge,
}

_PROBES = {
    "hessian": _cmd_probe_hessian,
    "r0": _cmd_probe_r0,
    "diffineq": _cmd_probe_diffineq,
    "derivs": _cmd_probe_derivs,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        if args.command == "probe":
            handler = _PROBES[args.probe_kind]
        elif args.command == "gradcheck":
            handler = _cmd_probe_derivs
        else:
            handler = _COMMANDS[args.command]
        return handler(_Options(args))
    except ValueError as exc:
        print(f"affinepr: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DivergedError as exc:
        print(f"affinepr: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except OSError as exc:
        print(f"affinepr: i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except AffineprError as exc:
        print(f"affinepr: {exc}", file=sys.stderr)
        return EXIT_PROBE_FAILURE


if __name__ == "__main__":
    sys.exit(main())
