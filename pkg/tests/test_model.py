import json
import math

import numpy as np
import numpy.testing as npt
import pytest

from affinepr import (
    C0_THRESHOLD,
    DegenerateSignalError,
    ProblemInstance,
    check_bias_conditions,
    generate_instance,
    load_instance,
    sample_complex_gaussian,
    sample_in_ball,
    save_instance,
)
from affinepr.rng import RngSpec


def test_complex_gaussian_second_moment():
    rng = RngSpec(0).generator()
    a = sample_complex_gaussian(200_000, rng)
    assert abs(np.mean(np.abs(a) ** 2) - 1.0) < 0.02
    x = sample_complex_gaussian(200_000, rng, normalized=False)
    assert abs(np.mean(np.abs(x) ** 2) - 2.0) < 0.04


def test_ball_sampling_is_uniform_in_volume():
    rng = RngSpec(1).generator()
    R = 3.0
    pts = np.array([sample_in_ball(R, 1, rng)[0] for _ in range(40_000)])
    norms = np.abs(pts)
    assert norms.max() <= R
    # uniform on the disc of radius R: E r^2 = R^2 / 2
    assert abs(np.mean(norms**2) - R * R / 2) < 0.06


def test_ball_sampling_argument_validation():
    with pytest.raises(ValueError):
        sample_in_ball(-1.0, 2, RngSpec(0).generator())
    with pytest.raises(ValueError):
        sample_in_ball(1.0, 0, RngSpec(0).generator())


def test_generate_instance_shapes_and_dtypes():
    inst = generate_instance(5, 20, bias_lambda=3.0, sigma=0.0, rng=RngSpec(2))
    assert inst.d == 5 and inst.m == 20
    assert inst.A.shape == (20, 5) and inst.A.dtype == np.complex128
    assert inst.b.shape == (20,) and inst.b.dtype == np.complex128
    assert inst.y.shape == (20,) and inst.y.dtype == np.float64
    assert inst.A.flags.c_contiguous
    assert inst.seed == 2
    # the generated bias is real-valued even though the slot allows complex
    npt.assert_array_equal(inst.b.imag, np.zeros(20))


def test_generate_instance_observations_match_model():
    inst = generate_instance(6, 40, bias_lambda=2.0, sigma=0.0, rng=RngSpec(3))
    w = inst.A @ inst.x + inst.b
    npt.assert_allclose(inst.y, np.abs(w) ** 2, rtol=1e-12)


def test_generate_instance_seed_pins_arrays():
    a = generate_instance(4, 12, rng=RngSpec(7))
    b = generate_instance(4, 12, rng=RngSpec(7))
    npt.assert_array_equal(a.A, b.A)
    npt.assert_array_equal(a.x, b.x)
    npt.assert_array_equal(a.b, b.b)
    npt.assert_array_equal(a.y, b.y)
    c = generate_instance(4, 12, rng=RngSpec(8))
    assert not np.array_equal(a.A, c.A)


def test_noise_is_drawn_after_the_instance_arrays():
    clean = generate_instance(4, 12, sigma=0.0, rng=RngSpec(5))
    noisy = generate_instance(4, 12, sigma=0.5, rng=RngSpec(5))
    npt.assert_array_equal(clean.A, noisy.A)
    npt.assert_array_equal(clean.x, noisy.x)
    npt.assert_array_equal(clean.b, noisy.b)
    assert not np.array_equal(clean.y, noisy.y)
    assert noisy.sigma == 0.5


def test_generate_instance_argument_validation():
    with pytest.raises(ValueError):
        generate_instance(0, 10)
    with pytest.raises(ValueError):
        generate_instance(3, 0)
    with pytest.raises(ValueError):
        generate_instance(3, 10, bias_lambda=-1.0)
    with pytest.raises(ValueError):
        generate_instance(3, 10, sigma=-0.1)


def _tiny_instance(b_value: float, m: int = 4) -> ProblemInstance:
    A = np.ones((m, 1), dtype=np.complex128)
    x = np.array([1.0 + 0j])
    b = np.full(m, b_value, dtype=np.complex128)
    y = np.abs(A @ x + b) ** 2
    return ProblemInstance(A=A, b=b, y=y, x=x)


def test_bias_report_hand_values():
    # m=4, b=(3,3,3,3), ||x||=1: c0_hat = 6/2 = 3, fourth = 4*81/4 = 81
    rep = check_bias_conditions(_tiny_instance(3.0))
    assert rep.c0_hat == pytest.approx(3.0)
    assert rep.fourth_moment_ratio == pytest.approx(81.0)
    assert rep.infnorm_ratio == pytest.approx(3.0 / math.sqrt(math.log(4)))
    assert rep.satisfied
    assert rep.c0_threshold == pytest.approx(C0_THRESHOLD)


def test_bias_report_below_threshold():
    rep = check_bias_conditions(_tiny_instance(1.0))
    assert not rep.satisfied


def test_bias_report_warns_in_the_thin_margin():
    # threshold ~1.4983 < 1.499 < 1.5: satisfied, but with a warning
    with pytest.warns(UserWarning, match="thin"):
        rep = check_bias_conditions(_tiny_instance(1.499))
    assert rep.satisfied


def test_bias_report_requires_m_at_least_two():
    with pytest.raises(ValueError):
        check_bias_conditions(_tiny_instance(3.0, m=1))


def test_zero_signal_is_degenerate():
    inst = _tiny_instance(3.0)
    zero = ProblemInstance(A=inst.A, b=inst.b, y=inst.y, x=np.zeros(1, dtype=np.complex128))
    with pytest.raises(DegenerateSignalError):
        check_bias_conditions(zero)
    headless = ProblemInstance(A=inst.A, b=inst.b, y=inst.y)
    with pytest.raises(DegenerateSignalError):
        headless.signal_norm()


def test_instance_shape_validation():
    A = np.ones((4, 2), dtype=np.complex128)
    with pytest.raises(ValueError):
        ProblemInstance(A=A, b=np.zeros(3), y=np.zeros(4))
    with pytest.raises(ValueError):
        ProblemInstance(A=A, b=np.zeros(4), y=np.zeros(5))
    with pytest.raises(ValueError):
        ProblemInstance(A=A, b=np.zeros(4), y=np.zeros(4), x=np.zeros(3))


def test_save_load_round_trip_with_arrays(tmp_path):
    inst = generate_instance(5, 17, bias_lambda=4.0, sigma=0.01, rng=RngSpec(11))
    path = save_instance(inst, str(tmp_path / "case"))
    assert path.endswith(".json")
    meta = json.loads((tmp_path / "case.json").read_text())
    assert meta["format"] == "affinepr-instance"

    back = load_instance(path)
    npt.assert_array_equal(back.A, inst.A)
    npt.assert_array_equal(back.b, inst.b)
    npt.assert_array_equal(back.y, inst.y)
    npt.assert_array_equal(back.x, inst.x)
    assert back.seed == 11
    assert back.sigma == 0.01
    assert back.bias_lambda == 4.0


def test_save_load_seed_only(tmp_path):
    inst = generate_instance(3, 9, bias_lambda=2.0, rng=RngSpec(21))
    path = save_instance(inst, str(tmp_path / "seedonly"), include_arrays=False)
    assert not (tmp_path / "seedonly.bin").exists()
    back = load_instance(path)
    npt.assert_array_equal(back.A, inst.A)
    npt.assert_array_equal(back.y, inst.y)


def test_save_without_arrays_needs_a_seed(tmp_path):
    inst = _tiny_instance(3.0)  # constructed directly, no seed recorded
    with pytest.raises(ValueError):
        save_instance(inst, str(tmp_path / "noseed"), include_arrays=False)
