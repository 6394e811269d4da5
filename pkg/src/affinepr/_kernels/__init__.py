"""Kernel backend selection.

Two interchangeable implementations exist: a compiled Cython extension
(``_core``) and a pure NumPy module (``_numpy``).  The loop kernels beat the
BLAS-backed NumPy ones only while the measurement matrix is small (Python
call overhead dominates below roughly m*d ~ 1.5k; see benchmarks/), so the
default ``auto`` mode picks per call by problem size.  Set
``APR_BACKEND=numpy`` or ``APR_BACKEND=compiled`` to pin one implementation;
``compiled`` fails loudly when the extension is missing.
"""

from __future__ import annotations

import os

from . import _numpy as numpy_backend

_requested = os.environ.get("APR_BACKEND", "auto").strip().lower() or "auto"
if _requested not in ("auto", "compiled", "numpy"):
    raise ImportError(f"APR_BACKEND must be auto, compiled, or numpy (got {_requested!r})")

compiled_backend = None
if _requested in ("auto", "compiled"):
    try:
        from . import _core as compiled_backend  # type: ignore[no-redef]
    except ImportError:
        compiled_backend = None
    if compiled_backend is None and _requested == "compiled":
        raise ImportError("APR_BACKEND=compiled but the compiled extension is not available")

# Crossover measured on the bundled benchmark; the exact value is not
# critical, both sides agree to near round-off.
DISPATCH_LIMIT = 1536

RECORD_DENSE_LIMIT = numpy_backend.RECORD_DENSE_LIMIT
RECORD_THIN_STRIDE = numpy_backend.RECORD_THIN_STRIDE
STATUS_EXHAUSTED = numpy_backend.STATUS_EXHAUSTED
STATUS_CONVERGED = numpy_backend.STATUS_CONVERGED
STATUS_DIVERGED = numpy_backend.STATUS_DIVERGED

if compiled_backend is None:
    BACKEND = "numpy"
    fields = numpy_backend.fields
    loss = numpy_backend.loss
    gradient = numpy_backend.gradient
    loss_gradient = numpy_backend.loss_gradient
    quadform = numpy_backend.quadform
    hessian_matvec = numpy_backend.hessian_matvec
    descent = numpy_backend.descent
elif _requested == "compiled":
    BACKEND = "compiled"
    fields = compiled_backend.fields
    loss = compiled_backend.loss
    gradient = compiled_backend.gradient
    loss_gradient = compiled_backend.loss_gradient
    quadform = compiled_backend.quadform
    hessian_matvec = compiled_backend.hessian_matvec
    descent = compiled_backend.descent
else:
    BACKEND = "auto"

    def _pick(A):
        return compiled_backend if A.shape[0] * A.shape[1] < DISPATCH_LIMIT else numpy_backend

    def fields(A, b, z):
        return _pick(A).fields(A, b, z)

    def loss(A, b, y, z):
        return _pick(A).loss(A, b, y, z)

    def gradient(A, b, y, z):
        return _pick(A).gradient(A, b, y, z)

    def loss_gradient(A, b, y, z):
        return _pick(A).loss_gradient(A, b, y, z)

    def quadform(A, b, y, z, v):
        return _pick(A).quadform(A, b, y, z, v)

    def hessian_matvec(A, b, y, z, v):
        return _pick(A).hessian_matvec(A, b, y, z, v)

    def descent(A, b, y, z0, x, mu, max_iters, rel_tol, grad_tol):
        return _pick(A).descent(A, b, y, z0, x, mu, max_iters, rel_tol, grad_tol)


def available_backends() -> list[str]:
    names = ["numpy"]
    if compiled_backend is not None:
        names.insert(0, "compiled")
    return names
