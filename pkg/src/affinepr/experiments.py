"""Monte Carlo experiments: success-rate sweeps and convergence traces.

Trials are independent given their derived seed, so they may run on any
number of workers: results are gathered by trial index and every emitted
byte depends only on the inputs, never on scheduling.  CSV files carry the
tabular data; run metadata travels in the JSON summaries.
"""

from __future__ import annotations

import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DivergedError, InsufficientDataError
from .model import generate_instance
from .rng import STREAM_INIT, RngSpec
from .solver import (
    SolveTrace,
    SolverConfig,
    contraction_candidates,
    fit_convergence_stats,
    gradient_descent,
)
from .svgplot import polyline_plot


@dataclass
class TrialFailure:
    """Replay handle for one unsuccessful trial."""

    ratio: float
    trial: int
    seed: int
    diverged: bool = False


@dataclass
class SweepResult:
    """Success counts per sampling ratio m/d."""

    d: int
    ratios: list
    trials_per_ratio: int
    successes: list
    bias_lambda: float
    sigma: float
    base_seed: int
    step: str
    failures: list = field(default_factory=list)

    @property
    def success_rates(self) -> list:
        return [s / self.trials_per_ratio for s in self.successes]

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "ratios": list(self.ratios),
            "trials_per_ratio": self.trials_per_ratio,
            "successes": list(self.successes),
            "success_rates": self.success_rates,
            "bias_lambda": self.bias_lambda,
            "sigma": self.sigma,
            "base_seed": self.base_seed,
            "step": self.step,
            "failures": [
                {"ratio": f.ratio, "trial": f.trial, "seed": f.seed, "diverged": f.diverged}
                for f in self.failures
            ],
        }


@dataclass
class ConvergenceResult:
    """One instrumented solve with its recorded error trace."""

    d: int
    m: int
    bias_lambda: float
    sigma: float
    seed: int
    trace: SolveTrace
    diverged: bool = False
    fitted_rate: Optional[float] = None
    r_squared: Optional[float] = None
    plateau: Optional[float] = None
    rate_optimistic: Optional[float] = None
    rate_conservative: Optional[float] = None

    def to_dict(self) -> dict:
        out = {
            "d": self.d,
            "m": self.m,
            "bias_lambda": self.bias_lambda,
            "sigma": self.sigma,
            "seed": self.seed,
            "diverged": self.diverged,
            "fitted_rate": self.fitted_rate,
            "r_squared": self.r_squared,
            "plateau": self.plateau,
            "rate_optimistic": self.rate_optimistic,
            "rate_conservative": self.rate_conservative,
        }
        out.update(self.trace.summary())
        return out


def _run_trial(d, m, bias_lambda, sigma, config, trial_spec: RngSpec):
    """One generate/solve trial; returns (success, diverged)."""
    inst = generate_instance(d, m, bias_lambda, sigma, trial_spec)
    try:
        trace = gradient_descent(inst, config, rng=trial_spec.derive(STREAM_INIT))
    except DivergedError:
        return False, True
    return bool(trace.converged), False


def run_success_sweep(
    d: int,
    ratios,
    trials: int,
    config: Optional[SolverConfig] = None,
    base_seed: int = 0,
    bias_lambda: float = 5.0,
    sigma: float = 0.0,
    jobs: int = 1,
) -> SweepResult:
    """Success rate of descent-from-random-start as m/d grows.

    A trial succeeds when the solve converges to the ground truth at the
    configured tolerance within the iteration budget; divergence is an
    unsuccessful trial, not an error.  Seeds derive from (base_seed, ratio
    index, trial index), so outputs are identical for any ``jobs``.
    """
    ratios = [float(r) for r in ratios]
    if any(r <= 0 for r in ratios):
        raise ValueError("ratios must be positive")
    if trials < 1:
        raise ValueError(f"need trials >= 1, got {trials}")
    if jobs < 1:
        raise ValueError(f"need jobs >= 1, got {jobs}")
    config = config or SolverConfig()
    base = RngSpec(base_seed)

    tasks = []
    for i, r in enumerate(ratios):
        m = max(1, round(r * d))
        ratio_spec = base.derive(i)
        for t in range(trials):
            tasks.append((i, r, m, t, ratio_spec.derive(t)))

    def run(task):
        _i, _r, m, _t, spec = task
        return _run_trial(d, m, bias_lambda, sigma, config, spec)

    if jobs == 1:
        outcomes = [run(task) for task in tasks]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(run, tasks))

    successes = [0] * len(ratios)
    failures = []
    for (i, r, _m, t, spec), (ok, diverged) in zip(tasks, outcomes):
        if ok:
            successes[i] += 1
        else:
            failures.append(TrialFailure(ratio=r, trial=t, seed=spec.seed, diverged=diverged))

    return SweepResult(
        d=d,
        ratios=ratios,
        trials_per_ratio=trials,
        successes=successes,
        bias_lambda=bias_lambda,
        sigma=sigma,
        base_seed=base_seed,
        step=_step_text(config),
        failures=failures,
    )


def _step_text(config: SolverConfig) -> str:
    from .solver import describe_step

    return describe_step(config.step)


def run_convergence_experiment(
    d: int,
    m: int,
    sigma: float = 0.0,
    config: Optional[SolverConfig] = None,
    seed: int = 0,
    bias_lambda: float = 5.0,
) -> ConvergenceResult:
    """Instrumented single solve recording the full error trace.

    With noise the error flattens instead of vanishing; the reported plateau
    is the median relative error over the last tenth of the recorded trace.
    Divergence is recorded in the result (with the partial trace) rather
    than raised.
    """
    spec = RngSpec(seed)
    config = config or SolverConfig()
    inst = generate_instance(d, m, bias_lambda, sigma, spec)
    diverged = False
    try:
        trace = gradient_descent(inst, config, rng=spec.derive(STREAM_INIT))
    except DivergedError as exc:
        trace = exc.trace
        diverged = True

    result = ConvergenceResult(
        d=d,
        m=m,
        bias_lambda=bias_lambda,
        sigma=sigma,
        seed=seed,
        trace=trace,
        diverged=diverged,
    )
    try:
        fit = fit_convergence_stats(trace)
        result.fitted_rate = fit.rate
        result.r_squared = fit.r_squared
        trace.fitted_rate = fit.rate
    except InsufficientDataError:
        pass
    if sigma > 0 and len(trace.rel_errors) > 0:
        tail = max(1, len(trace.rel_errors) // 10)
        result.plateau = float(np.median(trace.rel_errors[-tail:]))
    try:
        cand = contraction_candidates(inst, trace.mu_used)
        result.rate_optimistic = cand.rate_optimistic
        result.rate_conservative = cand.rate_conservative
    except Exception:
        pass
    return result


# ---------------------------------------------------------------------------
# Emission


def emit_csv(result, path_or_file) -> None:
    """Write a result as CSV with full-precision round-tripping floats."""
    own = isinstance(path_or_file, str)
    fh = open(path_or_file, "w", encoding="utf-8", newline="\n") if own else path_or_file
    try:
        if isinstance(result, SweepResult):
            fh.write("ratio,trials,successes,success_rate\n")
            for r, s in zip(result.ratios, result.successes):
                fh.write(f"{float(r)!r},{result.trials_per_ratio},{s},{s / result.trials_per_ratio!r}\n")
        elif isinstance(result, ConvergenceResult):
            result.trace.to_csv(fh)
        elif isinstance(result, SolveTrace):
            result.to_csv(fh)
        else:
            raise ValueError(f"cannot emit CSV for {type(result).__name__}")
    finally:
        if own:
            fh.close()


def csv_bytes(result) -> bytes:
    buf = io.StringIO()
    emit_csv(result, buf)
    return buf.getvalue().encode("utf-8")


def emit_json(result, path_or_file) -> None:
    """Write a result's JSON summary (metadata lives here, not in the CSV)."""
    own = isinstance(path_or_file, str)
    fh = open(path_or_file, "w", encoding="utf-8", newline="\n") if own else path_or_file
    try:
        if isinstance(result, (SweepResult, ConvergenceResult)):
            json.dump(result.to_dict(), fh, indent=2, sort_keys=True)
        elif isinstance(result, SolveTrace):
            json.dump(result.summary(), fh, indent=2, sort_keys=True)
        else:
            raise ValueError(f"cannot emit JSON for {type(result).__name__}")
        fh.write("\n")
    finally:
        if own:
            fh.close()


def emit_plot(result, path: str) -> None:
    """Write a result as a self-contained SVG plot."""
    if isinstance(result, SweepResult):
        polyline_plot(
            result.ratios,
            result.success_rates,
            path,
            title="empirical success rate vs sampling ratio",
            xlabel="m / d",
            ylabel="success rate",
            markers=True,
        )
    elif isinstance(result, (ConvergenceResult, SolveTrace)):
        trace = result.trace if isinstance(result, ConvergenceResult) else result
        polyline_plot(
            trace.iters,
            trace.rel_errors,
            path,
            title="relative error vs iteration",
            xlabel="iteration",
            ylabel="relative error",
            ylog=True,
        )
    else:
        raise ValueError(f"cannot plot {type(result).__name__}")


# ---------------------------------------------------------------------------
# Parsing (round-trip of the tabular fields)


def parse_sweep_csv(path_or_file) -> dict:
    """Read back a sweep CSV into its column arrays."""
    rows = _read_csv(path_or_file, ["ratio", "trials", "successes", "success_rate"])
    return {
        "ratios": [float(r[0]) for r in rows],
        "trials": [int(r[1]) for r in rows],
        "successes": [int(r[2]) for r in rows],
        "success_rates": [float(r[3]) for r in rows],
    }


def parse_trace_csv(path_or_file) -> dict:
    """Read back a trace CSV into its column arrays."""
    rows = _read_csv(path_or_file, ["iter", "rel_error", "loss"])
    return {
        "iters": [int(r[0]) for r in rows],
        "rel_errors": [float(r[1]) for r in rows],
        "losses": [float(r[2]) for r in rows],
    }


def _read_csv(path_or_file, expected_header):
    own = isinstance(path_or_file, str)
    fh = open(path_or_file, "r", encoding="utf-8") if own else path_or_file
    try:
        header = fh.readline().strip()
        if header.split(",") != expected_header:
            raise ValueError(f"unexpected CSV header {header!r}")
        rows = []
        for line in fh:
            line = line.strip()
            if line:
                rows.append(line.split(","))
        return rows
    finally:
        if own:
            fh.close()
