import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from affinepr import (
    ProblemInstance,
    ResourceLimitError,
    assemble_real_hessian,
    directional_derivative_fd,
    fields,
    generate_instance,
    hessian_matvec,
    hessian_quadratic_form,
    loss,
    loss_and_gradient,
    real_direction,
    second_directional_fd,
    wirtinger_gradient,
)
from affinepr.rng import RngSpec


def _scalar_instance(b=0.0, y=1.0):
    return ProblemInstance(
        A=np.array([[1.0 + 0j]]),
        b=np.array([b], dtype=np.complex128),
        y=np.array([float(y)]),
    )


# --- hand-worked scalar cases -------------------------------------------------
# d=1, m=1, a=1.  w = z + b, f = 0.5 (|w|^2 - y)^2, grad = (|w|^2 - y) w.


def test_scalar_loss_and_gradient():
    inst = _scalar_instance(b=0.0, y=1.0)
    z = np.array([2.0 + 0j])
    assert loss(inst, z) == pytest.approx(4.5)  # 0.5 * (4 - 1)^2
    npt.assert_allclose(wirtinger_gradient(inst, z), [6.0 + 0j])  # 3 * 2

    f, g = loss_and_gradient(inst, z)
    assert f == pytest.approx(4.5)
    npt.assert_allclose(g, [6.0 + 0j])


def test_scalar_loss_with_imaginary_bias():
    inst = _scalar_instance(b=1j, y=0.0)
    z = np.zeros(1, dtype=np.complex128)
    assert loss(inst, z) == pytest.approx(0.5)  # w = i, 0.5 * 1^2
    npt.assert_allclose(wirtinger_gradient(inst, z), [1j])  # (1 - 0) * i


def test_scalar_quadform_and_dense_hessian():
    inst = _scalar_instance(b=0.0, y=1.0)
    z = np.array([1.0 + 0j])
    v = np.array([1.0 + 0j])
    # kappa = 2|w|^2 - y = 1, s = 1: (2/m)(1*1) + (2/m)Re(1) = 4
    assert hessian_quadratic_form(inst, z, v) == pytest.approx(4.0)

    H = assemble_real_hessian(inst, z)
    npt.assert_allclose(H, [[4.0, 0.0], [0.0, 0.0]], atol=1e-15)


def test_fields_shape_and_value():
    inst = _scalar_instance(b=1j, y=0.0)
    w = fields(inst, np.array([2.0 + 0j]))
    npt.assert_allclose(w, [2.0 + 1j])


# --- differential identities --------------------------------------------------


def _random_case(seed, d=5, m=23, sigma=0.0):
    inst = generate_instance(d, m, bias_lambda=3.0, sigma=sigma, rng=RngSpec(seed))
    gen = RngSpec(seed + 1000).generator()
    z = inst.x + 0.3 * (gen.standard_normal(d) + 1j * gen.standard_normal(d))
    v = gen.standard_normal(d) + 1j * gen.standard_normal(d)
    v /= np.linalg.norm(v)
    return inst, z, v


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_gradient_matches_finite_differences(seed):
    inst, z, v = _random_case(seed)
    g = wirtinger_gradient(inst, z)
    analytic = 2.0 * float(np.real(np.vdot(v, g)))
    fd = directional_derivative_fd(inst, z, v)
    assert abs(analytic - fd) / (1 + abs(analytic) + abs(fd)) < 1e-6


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_quadform_matches_second_differences_and_dense(seed):
    inst, z, v = _random_case(seed)
    q = hessian_quadratic_form(inst, z, v)
    fd2 = second_directional_fd(inst, z, v)
    assert abs(q - fd2) / (1 + abs(q) + abs(fd2)) < 1e-5

    H = assemble_real_hessian(inst, z)
    delta = real_direction(v)
    dense = float(delta @ H @ delta)
    assert abs(q - dense) / (1 + abs(q) + abs(dense)) < 1e-10


def test_hessian_matvec_reproduces_quadform():
    inst, z, v = _random_case(4, d=8, m=40)
    t = hessian_matvec(inst, z, v)
    assert float(np.real(np.vdot(v, t))) == pytest.approx(
        hessian_quadratic_form(inst, z, v), rel=1e-12
    )


def test_dense_hessian_is_exactly_symmetric():
    inst, z, _ = _random_case(5, d=6, m=30)
    H = assemble_real_hessian(inst, z)
    assert H.shape == (12, 12)
    npt.assert_array_equal(H, H.T)


def test_real_direction_layout():
    v = np.array([1.0 + 2j, 3.0 - 4j])
    npt.assert_array_equal(real_direction(v), [1.0, 3.0, 2.0, -4.0])


@settings(max_examples=25, deadline=None)
@given(t=st.floats(min_value=0.25, max_value=4.0), seed=st.integers(0, 50))
def test_loss_is_quartic_in_z_when_unbiased(t, seed):
    # with b = 0 and y = 0 the objective is 0.5 mean |<a,z>|^4
    gen = RngSpec(seed).generator()
    d, m = 3, 7
    A = (gen.standard_normal((m, d)) + 1j * gen.standard_normal((m, d))) / np.sqrt(2)
    inst = ProblemInstance(A=A, b=np.zeros(m, dtype=np.complex128), y=np.zeros(m))
    z = gen.standard_normal(d) + 1j * gen.standard_normal(d)
    assert loss(inst, t * z) == pytest.approx(t**4 * loss(inst, z), rel=1e-10)
    npt.assert_allclose(
        wirtinger_gradient(inst, t * z), t**3 * wirtinger_gradient(inst, z), rtol=1e-10
    )


# --- validation ---------------------------------------------------------------


def test_rejects_wrong_shape_and_nonfinite_points():
    inst = generate_instance(4, 10, rng=RngSpec(0))
    with pytest.raises(ValueError):
        loss(inst, np.zeros(5, dtype=np.complex128))
    bad = np.zeros(4, dtype=np.complex128)
    bad[1] = np.nan
    with pytest.raises(ValueError):
        wirtinger_gradient(inst, bad)


def test_dense_hessian_size_guard():
    d = 2049  # 2d exceeds the dense-side cap
    inst = ProblemInstance(
        A=np.ones((1, d), dtype=np.complex128),
        b=np.zeros(1, dtype=np.complex128),
        y=np.ones(1),
    )
    with pytest.raises(ResourceLimitError):
        assemble_real_hessian(inst, np.zeros(d, dtype=np.complex128))
