import io
import json

import numpy as np
import pytest

from affinepr import (
    SolverConfig,
    run_convergence_experiment,
    run_success_sweep,
)
from affinepr.experiments import (
    SweepResult,
    csv_bytes,
    emit_csv,
    emit_json,
    emit_plot,
    parse_sweep_csv,
    parse_trace_csv,
)
from affinepr.solver import AutoStep
from affinepr.svgplot import polyline_plot

QUICK = SolverConfig(step=AutoStep(), max_iters=4000, success_tol=1e-4)


@pytest.fixture(scope="module")
def tiny_sweep():
    return run_success_sweep(6, [4.0, 8.0], trials=4, config=QUICK, base_seed=3)


def test_sweep_counts_and_rates(tiny_sweep):
    sw = tiny_sweep
    assert sw.ratios == [4.0, 8.0]
    assert sw.trials_per_ratio == 4
    assert all(0 <= s <= 4 for s in sw.successes)
    assert sw.success_rates == [s / 4 for s in sw.successes]
    assert sw.successes[-1] == 4  # ratio 8 recovers every trial even at d=6


def test_sweep_is_reproducible_and_job_invariant(tiny_sweep):
    again = run_success_sweep(6, [4.0, 8.0], trials=4, config=QUICK, base_seed=3)
    threaded = run_success_sweep(6, [4.0, 8.0], trials=4, config=QUICK, base_seed=3, jobs=3)
    assert csv_bytes(tiny_sweep) == csv_bytes(again) == csv_bytes(threaded)


def test_sweep_csv_round_trip(tiny_sweep):
    buf = io.StringIO()
    emit_csv(tiny_sweep, buf)
    cols = parse_sweep_csv(io.StringIO(buf.getvalue()))
    assert cols["ratios"] == tiny_sweep.ratios
    assert cols["successes"] == tiny_sweep.successes
    assert cols["success_rates"] == tiny_sweep.success_rates


def test_sweep_json_is_valid_and_complete(tiny_sweep):
    buf = io.StringIO()
    emit_json(tiny_sweep, buf)
    data = json.loads(buf.getvalue())
    assert data["d"] == 6
    assert data["ratios"] == [4.0, 8.0]
    assert data["base_seed"] == 3
    assert "success_rates" in data


def test_csv_parser_rejects_foreign_headers():
    with pytest.raises(ValueError):
        parse_sweep_csv(io.StringIO("a,b,c\n1,2,3\n"))
    with pytest.raises(ValueError):
        parse_trace_csv(io.StringIO("ratio,trials,successes,success_rate\n"))


def test_convergence_experiment_noiseless():
    res = run_convergence_experiment(
        8, 64, sigma=0.0, config=SolverConfig(max_iters=4000, success_tol=1e-9), seed=5
    )
    assert not res.diverged
    assert res.trace.converged
    assert res.plateau is None
    assert 0.0 < res.fitted_rate < 1.0
    assert res.r_squared > 0.9
    d = res.to_dict()
    json.dumps(d)  # everything must be serializable
    assert d["d"] == 8 and d["m"] == 64
    assert d["converged"] is True


def test_convergence_experiment_noisy_plateaus():
    res = run_convergence_experiment(
        8, 64, sigma=0.05, config=SolverConfig(max_iters=1500, success_tol=1e-12), seed=5
    )
    assert res.plateau is not None
    assert res.plateau > 0
    # the error stalls: the plateau sits well above the noiseless tolerance
    assert res.plateau > 1e-12
    assert float(res.trace.rel_errors[0]) > res.plateau


def test_emit_plot_sweep_structure(tmp_path, tiny_sweep):
    path = tmp_path / "sweep.svg"
    emit_plot(tiny_sweep, str(path))
    text = path.read_text()
    assert text.count("<polyline") == 1
    pts = text.split('points="')[1].split('"')[0].strip().split()
    assert len(pts) == len(tiny_sweep.ratios)
    assert "<svg" in text and text.endswith("\n")


def test_emit_plot_trace_uses_log_scale(tmp_path):
    res = run_convergence_experiment(
        6, 48, sigma=0.0, config=SolverConfig(max_iters=2000, success_tol=1e-8), seed=6
    )
    path = tmp_path / "trace.svg"
    emit_plot(res, str(path))
    text = path.read_text()
    assert text.count("<polyline") == 1
    assert "e-" in text  # power-of-ten tick labels from the log axis


def test_polyline_plot_empty_input(tmp_path):
    path = tmp_path / "empty.svg"
    polyline_plot([], [], str(path), title="t", xlabel="x", ylabel="y")
    assert "no data" in path.read_text()


def test_polyline_plot_monotone_series_maps_monotonically(tmp_path):
    path = tmp_path / "mono.svg"
    polyline_plot([1, 2, 3, 4], [0.1, 0.2, 0.6, 1.0], str(path), title="t", xlabel="x", ylabel="y")
    pts = path.read_text().split('points="')[1].split('"')[0].strip().split()
    ys = [float(p.split(",")[1]) for p in pts]
    # svg y grows downward, so increasing data must give decreasing pixel y
    assert all(a > b for a, b in zip(ys, ys[1:]))


def test_failure_records_carry_their_seeds():
    # an impossible budget forces failures whose trial seeds are recorded
    sw = run_success_sweep(
        6,
        [3.0],
        trials=3,
        config=SolverConfig(step=AutoStep(), max_iters=5, success_tol=1e-12),
        base_seed=9,
    )
    assert sw.successes == [0]
    assert len(sw.failures) == 3
    seeds = {f.seed for f in sw.failures}
    assert len(seeds) == 3
    for f in sw.failures:
        assert f.ratio == 3.0
        assert not f.diverged


def test_empty_sweep_serializes(tmp_path):
    sw = SweepResult(
        d=4,
        ratios=[],
        trials_per_ratio=0,
        successes=[],
        bias_lambda=5.0,
        sigma=0.0,
        base_seed=0,
        step="auto:0.5",
        failures=[],
    )
    assert csv_bytes(sw).decode().splitlines() == ["ratio,trials,successes,success_rate"]
    path = tmp_path / "none.svg"
    emit_plot(sw, str(path))
    assert "no data" in path.read_text()
