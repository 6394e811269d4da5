"""Pure NumPy kernels: reference implementation and import-time fallback.

All functions assume canonical arrays (C-contiguous, complex128 for A/b/z/v,
float64 for y); the calling layer is responsible for coercion.  ``A`` holds
the conjugated measurement vectors as rows, so ``A @ z + b`` evaluates every
inner product plus bias in one shot.
"""

from __future__ import annotations

import math

import numpy as np

NAME = "numpy"

# Trace recording: every iteration up to this index, then every 10th.
RECORD_DENSE_LIMIT = 100_000
RECORD_THIN_STRIDE = 10

STATUS_EXHAUSTED = 0
STATUS_CONVERGED = 1
STATUS_DIVERGED = 2


def fields(A, b, z):
    """Affine fields a_j^* z + b_j for all j."""
    return A @ z + b


def loss(A, b, y, z) -> float:
    """Mean squared intensity misfit, 0.5 * mean((|w|^2 - y)^2).

    Summed with ``math.fsum`` so the value is exact at the round-off floor;
    a perfect fit reports 0.0 rather than accumulated noise.
    """
    w = A @ z + b
    r = (w.real * w.real + w.imag * w.imag) - y
    return 0.5 * math.fsum(r * r) / y.shape[0]


def gradient(A, b, y, z):
    """Descent direction carrier: mean of (|w|^2 - y) * w * a_j."""
    w = A @ z + b
    r = (w.real * w.real + w.imag * w.imag) - y
    return A.conj().T @ (r * w) / y.shape[0]


def loss_gradient(A, b, y, z):
    """Fused objective and gradient evaluation (one field computation)."""
    m = y.shape[0]
    w = A @ z + b
    r = (w.real * w.real + w.imag * w.imag) - y
    f = 0.5 * float(r @ r) / m
    g = A.conj().T @ (r * w) / m
    return f, g


def quadform(A, b, y, z, v) -> float:
    """Curvature of the objective at z along the real direction pair (v, v̄).

    Equals delta^T H delta for the real Hessian H over (Re z, Im z) with
    delta = (Re v, Im v), evaluated in O(m d) without forming H.
    """
    m = y.shape[0]
    w = A @ z + b
    s = A @ v
    absw2 = w.real * w.real + w.imag * w.imag
    abss2 = s.real * s.real + s.imag * s.imag
    t = w * s.conj()
    term1 = float((2.0 * absw2 - y) @ abss2)
    term2 = float(np.sum(t.real * t.real - t.imag * t.imag))
    return 2.0 * (term1 + term2) / m


def hessian_matvec(A, b, y, z, v):
    """Apply the real Hessian at z to v (as the complex pairing of R^{2d}).

    Returns t with (Re t, Im t) = H (Re v, Im v); consequently
    Re(v^H t) == quadform(A, b, y, z, v).
    """
    m = y.shape[0]
    w = A @ z + b
    s = A @ v
    kappa = 2.0 * (w.real * w.real + w.imag * w.imag) - y
    c = kappa * s + (w * w) * s.conj()
    return 2.0 * (A.conj().T @ c) / m


def descent(A, b, y, z0, x, mu, max_iters, rel_tol, grad_tol):
    """Fixed-step descent loop with trace recording and early stopping.

    Stops on relative error <= rel_tol when the ground truth ``x`` is given,
    on gradient norm <= grad_tol otherwise, and flags divergence as soon as
    the loss turns non-finite.

    Returns (iters, rel_errors, losses, z, iters_run, status) where the first
    three arrays hold the recorded trace (rel_errors is NaN without ``x``).
    """
    m = y.shape[0]
    z = z0.astype(np.complex128, copy=True)
    has_x = x is not None
    xnorm = float(np.linalg.norm(x)) if has_x else 0.0

    cap = _record_capacity(max_iters)
    rec_iters = np.empty(cap, dtype=np.int64)
    rec_rel = np.empty(cap, dtype=np.float64)
    rec_loss = np.empty(cap, dtype=np.float64)
    n_rec = 0

    status = STATUS_EXHAUSTED
    iters_run = max_iters
    # overflow to inf/nan is the divergence signal, not an error condition
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(max_iters + 1):
            w = A @ z + b
            r = (w.real * w.real + w.imag * w.imag) - y
            f = 0.5 * float(r @ r) / m
            g = A.conj().T @ (r * w) / m

            if has_x:
                rel = float(np.linalg.norm(z - x)) / xnorm
                stopped = rel <= rel_tol
            else:
                rel = math.nan
                stopped = float(np.linalg.norm(g)) <= grad_tol
            diverged = not math.isfinite(f)

            if (
                k <= RECORD_DENSE_LIMIT
                or k % RECORD_THIN_STRIDE == 0
                or stopped
                or diverged
                or k == max_iters
            ):
                rec_iters[n_rec] = k
                rec_rel[n_rec] = rel
                rec_loss[n_rec] = f
                n_rec += 1

            if diverged:
                status, iters_run = STATUS_DIVERGED, k
                break
            if stopped:
                status, iters_run = STATUS_CONVERGED, k
                break
            if k == max_iters:
                status, iters_run = STATUS_EXHAUSTED, k
                break
            z -= mu * g

    return (
        rec_iters[:n_rec].copy(),
        rec_rel[:n_rec].copy(),
        rec_loss[:n_rec].copy(),
        z,
        iters_run,
        status,
    )


def _record_capacity(max_iters: int) -> int:
    dense = min(max_iters, RECORD_DENSE_LIMIT) + 1
    thinned = max(0, max_iters - RECORD_DENSE_LIMIT) // RECORD_THIN_STRIDE + 1
    return dense + thinned + 2
