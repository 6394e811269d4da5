"""End-to-end acceptance gate.

One test per criterion, each a single pass/fail line under ``pytest -v``:

1. derivative correctness against finite-difference and dense oracles
2. exact stationarity of the objective at the planted signal
3. positive real-Hessian spectrum over a large ball (strong convexity)
4. the data-derived radius sandwiches the signal norm
5. success-rate phase transition in the sampling ratio
6. linear convergence to 1e-10 from an arbitrary start
7. graceful degradation under additive noise (plateau, not divergence)
8. averaged intensity-difference inequality on random pairs
9. byte-identical experiment outputs across --jobs values

Runtime budgets are part of the contract and asserted alongside correctness.
All seeds are pinned; these tests are deterministic end to end.
"""

import time

import numpy as np
import pytest

from affinepr import (
    SolverConfig,
    generate_instance,
    loss,
    probe_difference_inequality,
    probe_r0_sandwich,
    probe_strong_convexity,
    run_convergence_experiment,
    run_derivative_checks,
    wirtinger_gradient,
)
from affinepr.cli import main as cli_main
from affinepr.experiments import parse_sweep_csv
from affinepr.probes import CURV_TOL, DENSE_TOL, GRAD_TOL
from affinepr.rng import RngSpec
from affinepr.solver import AutoStep

D = 64
CONVERGE_M = 7 * D
SEED_SWEEP = 42
SEED_CONVERGE = 4
SEED_R0 = 11
SEED_DIFFINEQ = 77
SEED_DERIVS = 1
SEED_CONVEXITY = 5

SWEEP_ARGS = [
    "sweep", "--d", str(D), "--ratios", "3,4,5,6,7,8", "--trials", "50",
    "--step", "auto", "--iters", "10000", "--tol", "1e-5", "--seed", str(SEED_SWEEP),
]
CONVERGE_ARGS = [
    "converge", "--d", str(D), "--m", str(CONVERGE_M), "--seed", str(SEED_CONVERGE),
    "--step", "auto", "--iters", "10000", "--tol", "1e-10",
]


def _timed(fn):
    t0 = time.monotonic()
    out = fn()
    return out, time.monotonic() - t0


@pytest.fixture(scope="module")
def accept_dir(tmp_path_factory):
    return tmp_path_factory.mktemp("accept")


@pytest.fixture(scope="module")
def sweep_csv(accept_dir):
    """The criterion-5 sweep, run once through the CLI and shared with 9."""
    out = accept_dir / "sweep_jobs1.csv"
    code, elapsed = _timed(lambda: cli_main(SWEEP_ARGS + ["--jobs", "1", "--out", str(out)]))
    assert code == 0
    return out, elapsed


@pytest.fixture(scope="module")
def converge_noiseless():
    return _timed(
        lambda: run_convergence_experiment(
            D,
            CONVERGE_M,
            sigma=0.0,
            config=SolverConfig(step=AutoStep(), max_iters=10_000, success_tol=1e-10),
            seed=SEED_CONVERGE,
        )
    )


@pytest.fixture(scope="module")
def converge_noisy():
    return _timed(
        lambda: run_convergence_experiment(
            D,
            CONVERGE_M,
            sigma=0.01,
            config=SolverConfig(step=AutoStep(), max_iters=10_000, success_tol=1e-10),
            seed=SEED_CONVERGE,
        )
    )


def test_criterion_1_derivative_correctness():
    report, elapsed = _timed(
        lambda: run_derivative_checks(num_cases=100, max_d=16, rng=RngSpec(SEED_DERIVS))
    )
    assert report.num_cases == 100
    assert report.failures == []
    assert report.max_grad_deviation <= GRAD_TOL == 1e-6
    assert report.max_curv_deviation <= CURV_TOL == 1e-5
    assert report.max_dense_deviation <= DENSE_TOL == 1e-10
    assert report.passed
    assert elapsed < 10.0


def test_criterion_2_exact_stationarity():
    def run():
        worst_f, worst_g = 0.0, 0.0
        for k in range(20):
            inst = generate_instance(48, 300, bias_lambda=4.0, sigma=0.0, rng=RngSpec(100 + k))
            scale2 = float(np.mean(inst.y))  # scale^2
            worst_f = max(worst_f, loss(inst, inst.x) / scale2**2)
            g = float(np.linalg.norm(wirtinger_gradient(inst, inst.x)))
            worst_g = max(worst_g, g / scale2**1.5)
        return worst_f, worst_g

    (worst_f, worst_g), elapsed = _timed(run)
    assert worst_f <= 1e-18
    assert worst_g <= 1e-10
    assert elapsed < 5.0


def test_criterion_3_strong_convexity_on_a_large_ball():
    def run():
        inst = generate_instance(32, 3000, bias_lambda=5.0, rng=RngSpec(SEED_CONVEXITY))
        return probe_strong_convexity(
            inst, num_points=20, ball_radius_mult=10.0, rng=RngSpec(SEED_CONVEXITY)
        )

    report, elapsed = _timed(run)
    assert report.bias_satisfied
    assert report.min_eig > 0.0
    assert report.min_eig >= 0.5 * report.beta_theory
    assert report.passed
    assert elapsed < 120.0


def test_criterion_4_radius_sandwiches_the_signal_norm():
    fraction, elapsed = _timed(lambda: probe_r0_sandwich(64, 640, 5.0, 100, RngSpec(SEED_R0)))
    assert fraction >= 0.99
    assert elapsed < 30.0


def test_criterion_5_success_rate_phase_transition(sweep_csv):
    path, elapsed = sweep_csv
    cols = parse_sweep_csv(str(path))
    rates = cols["success_rates"]
    assert cols["ratios"] == [3.0, 4.0, 5.0, 6.0, 7.0, 8.0]
    assert cols["trials"] == [50] * 6
    # nondecreasing up to a 0.05 sampling wobble
    assert all(b >= a - 0.05 for a, b in zip(rates, rates[1:]))
    assert rates[-1] >= 0.95
    assert elapsed < 300.0


def test_criterion_6_linear_convergence(converge_noiseless):
    res, elapsed = converge_noiseless
    assert not res.diverged
    assert res.trace.converged
    assert res.trace.iters_run <= 10_000
    assert float(np.nanmin(res.trace.rel_errors)) <= 1e-10
    assert res.fitted_rate is not None and 0.0 < res.fitted_rate < 1.0
    assert res.r_squared >= 0.95
    assert elapsed < 30.0


def test_criterion_7_noise_robustness(converge_noisy):
    res, elapsed = converge_noisy
    assert not res.diverged
    assert res.plateau is not None
    first = float(res.trace.rel_errors[0])
    terminal = float(res.trace.rel_errors[-1])
    assert first >= 10.0 * res.plateau  # the error actually decreased...
    assert res.plateau <= 1e-2  # ...and the stall level is small
    assert terminal <= 1e-2
    assert elapsed < 30.0


def test_criterion_8_difference_inequality():
    fraction, elapsed = _timed(
        lambda: probe_difference_inequality(32, 2000, 5.0, 200, RngSpec(SEED_DIFFINEQ))
    )
    assert fraction == 1.0
    assert elapsed < 10.0


def test_criterion_9_outputs_are_job_invariant(accept_dir, sweep_csv):
    sweep_j1, _ = sweep_csv
    sweep_j2 = accept_dir / "sweep_jobs2.csv"
    assert cli_main(SWEEP_ARGS + ["--jobs", "2", "--out", str(sweep_j2)]) == 0
    assert sweep_j1.read_bytes() == sweep_j2.read_bytes()

    for sigma, tag in (("0", "noiseless"), ("0.01", "noisy")):
        traces = []
        for jobs in ("1", "4"):
            out = accept_dir / f"trace_{tag}_j{jobs}.csv"
            code = cli_main(
                CONVERGE_ARGS + ["--sigma", sigma, "--jobs", jobs, "--out", str(out)]
            )
            assert code == 0
            traces.append(out.read_bytes())
        assert traces[0] == traces[1]
