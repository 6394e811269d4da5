"""Least-squares intensity objective and its derivatives.

For fields w_j(z) = <a_j, z> + b_j the objective is

    f(z) = (1/2m) sum_j (|w_j(z)|^2 - y_j)^2.

f is real-valued on C^d, hence non-holomorphic; its first-order behavior is
captured by the conjugate-coordinate derivative

    grad f(z) = (1/m) sum_j (|w_j|^2 - y_j) w_j a_j,

so that f(z + tv) - f(z) = 2 Re(<grad f(z), v>) t + O(t^2).  Second-order
behavior along the paired direction (v, v̄) reduces to the real scalar

    Q_z(v) = (2/m) sum_j (2|w_j|^2 - y_j) |<a_j, v>|^2
           + (2/m) sum_j Re[(w_j conj(<a_j, v>))^2],

which equals delta^T H delta for the real Hessian H of f over (Re z, Im z)
with delta = (Re v, Im v).  Everything here is O(m d) except the explicit
dense assembly of H.

Finite-difference oracles for both orders live alongside the analytic forms
so each can be checked against the other on any instance.
"""

from __future__ import annotations

import math

import numpy as np

from . import _kernels as kernels
from .errors import ResourceLimitError
from .model import ProblemInstance

_EPS = float(np.finfo(np.float64).eps)

# Refuse dense real Hessians beyond this side length (memory/time guard).
MAX_DENSE_SIDE = 4096


def _as_vector(instance: ProblemInstance, vec, name: str) -> np.ndarray:
    out = np.ascontiguousarray(np.asarray(vec), dtype=np.complex128)
    if out.shape != (instance.d,):
        raise ValueError(f"{name} must have shape ({instance.d},), got {out.shape}")
    if not np.all(np.isfinite(out.real)) or not np.all(np.isfinite(out.imag)):
        raise ValueError(f"{name} must be finite")
    return out


def fields(instance: ProblemInstance, z) -> np.ndarray:
    """All affine fields w_j(z) = <a_j, z> + b_j."""
    z = _as_vector(instance, z, "z")
    return kernels.fields(instance.A, instance.b, z)


def loss(instance: ProblemInstance, z) -> float:
    """Objective value f(z)."""
    z = _as_vector(instance, z, "z")
    return float(kernels.loss(instance.A, instance.b, instance.y, z))


def wirtinger_gradient(instance: ProblemInstance, z) -> np.ndarray:
    """Conjugate-coordinate gradient of f at z (length d, complex).

    The full derivative over (z, z̄) is the 2d stack of this vector and its
    conjugate; only this half is needed for descent since the other half
    carries the same information.
    """
    z = _as_vector(instance, z, "z")
    return kernels.gradient(instance.A, instance.b, instance.y, z)


def loss_and_gradient(instance: ProblemInstance, z) -> tuple[float, np.ndarray]:
    """f(z) and grad f(z) from a single pass over the data."""
    z = _as_vector(instance, z, "z")
    f, g = kernels.loss_gradient(instance.A, instance.b, instance.y, z)
    return float(f), g


def directional_derivative_fd(instance: ProblemInstance, z, v, h: float | None = None) -> float:
    """Central-difference derivative of t -> f(z + tv) at t = 0.

    Matches 2 Re(<grad f(z), v>) up to O(h^2).  The default step balances
    truncation against round-off for a first difference.
    """
    z = _as_vector(instance, z, "z")
    v = _as_vector(instance, v, "v")
    if h is None:
        h = _EPS ** (1.0 / 3.0) * (1.0 + float(np.linalg.norm(z)))
    if h <= 0:
        raise ValueError(f"need h > 0, got {h}")
    fp = kernels.loss(instance.A, instance.b, instance.y, z + h * v)
    fm = kernels.loss(instance.A, instance.b, instance.y, z - h * v)
    return (fp - fm) / (2.0 * h)


def hessian_quadratic_form(instance: ProblemInstance, z, v) -> float:
    """Curvature Q_z(v) of f at z along the paired direction (v, v̄)."""
    z = _as_vector(instance, z, "z")
    v = _as_vector(instance, v, "v")
    return float(kernels.quadform(instance.A, instance.b, instance.y, z, v))


def second_directional_fd(instance: ProblemInstance, z, v, h: float | None = None) -> float:
    """Second central difference of t -> f(z + tv) at t = 0.

    Matches :func:`hessian_quadratic_form` up to O(h^2); the default step is
    the standard eps^(1/4) choice for second differences.
    """
    z = _as_vector(instance, z, "z")
    v = _as_vector(instance, v, "v")
    if h is None:
        h = _EPS**0.25 * (1.0 + float(np.linalg.norm(z)))
    if h <= 0:
        raise ValueError(f"need h > 0, got {h}")
    f0 = kernels.loss(instance.A, instance.b, instance.y, z)
    fp = kernels.loss(instance.A, instance.b, instance.y, z + h * v)
    fm = kernels.loss(instance.A, instance.b, instance.y, z - h * v)
    return (fp - 2.0 * f0 + fm) / (h * h)


def hessian_matvec(instance: ProblemInstance, z, v) -> np.ndarray:
    """Real-Hessian action on v in complex pairing, in O(m d).

    Returns t with (Re t, Im t) = H (Re v, Im v); in particular
    Re(<v, t>) == hessian_quadratic_form(instance, z, v).
    """
    z = _as_vector(instance, z, "z")
    v = _as_vector(instance, v, "v")
    return kernels.hessian_matvec(instance.A, instance.b, instance.y, z, v)


def assemble_real_hessian(instance: ProblemInstance, z) -> np.ndarray:
    """Dense real Hessian of f over (Re z, Im z), a 2d x 2d symmetric matrix.

    Built from the two Wirtinger blocks
        H11 = (1/m) sum_j kappa_j a_j a_j^*          (Hermitian),
        H12 = (1/m) sum_j w_j^2 a_j a_j^T            (complex symmetric),
    with kappa_j = 2|w_j|^2 - y_j, via

        H = 2 [[Re H11 + Re H12,  -Im H11 + Im H12],
               [ Im H11 + Im H12,  Re H11 - Re H12]].

    Refuses sizes with 2d > MAX_DENSE_SIDE.
    """
    z = _as_vector(instance, z, "z")
    d = instance.d
    if 2 * d > MAX_DENSE_SIDE:
        raise ResourceLimitError(
            f"dense Hessian would be {2 * d} x {2 * d}; limit is {MAX_DENSE_SIDE}"
        )
    A = instance.A
    m = instance.m
    w = A @ z + instance.b
    kappa = 2.0 * (w.real * w.real + w.imag * w.imag) - instance.y
    Ah = A.conj().T
    H11 = (Ah * kappa) @ A / m
    H12 = (Ah * (w * w)) @ A.conj() / m
    S, K = H11.real, H11.imag
    U, V = H12.real, H12.imag
    top = np.hstack([S + U, -K + V])
    bot = np.hstack([K + V, S - U])
    H = 2.0 * np.vstack([top, bot])
    return 0.5 * (H + H.T)  # exact symmetry despite float block products


def real_direction(v: np.ndarray) -> np.ndarray:
    """Map complex v to the stacked real direction (Re v, Im v)."""
    v = np.asarray(v, dtype=np.complex128)
    return np.concatenate([v.real, v.imag])
