# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: fused field/loss/gradient/curvature evaluations and the
fixed-step descent loop.  Mirrors ``_numpy.py`` function for function; the
backend selector in ``__init__.py`` picks whichever is importable.
"""

import numpy as np

from libc.math cimport NAN, isfinite, sqrt

NAME = "compiled"

RECORD_DENSE_LIMIT = 100_000
RECORD_THIN_STRIDE = 10

STATUS_EXHAUSTED = 0
STATUS_CONVERGED = 1
STATUS_DIVERGED = 2

ctypedef double complex zdouble

cdef Py_ssize_t _REC_DENSE = 100_000
cdef Py_ssize_t _REC_STRIDE = 10

cdef int _ST_EXHAUSTED = 0
cdef int _ST_CONVERGED = 1
cdef int _ST_DIVERGED = 2


cdef inline double _abs2(zdouble w) noexcept nogil:
    return w.real * w.real + w.imag * w.imag


def fields(zdouble[:, ::1] A, zdouble[::1] b, zdouble[::1] z):
    """Affine fields a_j^* z + b_j for all j."""
    cdef Py_ssize_t m = A.shape[0], d = A.shape[1], j, k
    out = np.empty(m, dtype=np.complex128)
    cdef zdouble[::1] w = out
    cdef zdouble acc
    with nogil:
        for j in range(m):
            acc = b[j]
            for k in range(d):
                acc = acc + A[j, k] * z[k]
            w[j] = acc
    return out


def loss(zdouble[:, ::1] A, zdouble[::1] b, double[::1] y, zdouble[::1] z):
    """Mean squared intensity misfit with Kahan-compensated accumulation."""
    cdef Py_ssize_t m = A.shape[0], d = A.shape[1], j, k
    cdef zdouble acc
    cdef double r, total = 0.0, comp = 0.0, t, yy
    with nogil:
        for j in range(m):
            acc = b[j]
            for k in range(d):
                acc = acc + A[j, k] * z[k]
            r = _abs2(acc) - y[j]
            yy = r * r - comp
            t = total + yy
            comp = (t - total) - yy
            total = t
    return 0.5 * total / m


def gradient(zdouble[:, ::1] A, zdouble[::1] b, double[::1] y, zdouble[::1] z):
    """Descent direction carrier: mean of (|w|^2 - y) * w * a_j."""
    cdef Py_ssize_t d = A.shape[1]
    out = np.zeros(d, dtype=np.complex128)
    cdef zdouble[::1] g = out
    _loss_gradient(A, b, y, z, g)
    return out


def loss_gradient(zdouble[:, ::1] A, zdouble[::1] b, double[::1] y, zdouble[::1] z):
    """Fused objective and gradient evaluation (one field computation)."""
    cdef Py_ssize_t d = A.shape[1]
    out = np.zeros(d, dtype=np.complex128)
    cdef zdouble[::1] g = out
    cdef double f = _loss_gradient(A, b, y, z, g)
    return f, out


cdef double _loss_gradient(zdouble[:, ::1] A, zdouble[::1] b, double[::1] y,
                           zdouble[::1] z, zdouble[::1] g) noexcept nogil:
    cdef Py_ssize_t m = A.shape[0], d = A.shape[1], j, k
    cdef zdouble acc, cj
    cdef double r, total = 0.0, comp = 0.0, t, yy
    for k in range(d):
        g[k] = 0
    for j in range(m):
        acc = b[j]
        for k in range(d):
            acc = acc + A[j, k] * z[k]
        r = _abs2(acc) - y[j]
        yy = r * r - comp
        t = total + yy
        comp = (t - total) - yy
        total = t
        cj = r * acc
        for k in range(d):
            g[k] = g[k] + A[j, k].conjugate() * cj
    for k in range(d):
        g[k] = g[k] / m
    return 0.5 * total / m


def quadform(zdouble[:, ::1] A, zdouble[::1] b, double[::1] y,
             zdouble[::1] z, zdouble[::1] v):
    """Curvature at z along the real direction pair (v, v̄), in O(m d)."""
    cdef Py_ssize_t m = A.shape[0], d = A.shape[1], j, k
    cdef zdouble wj, sj, t
    cdef double total = 0.0
    with nogil:
        for j in range(m):
            wj = b[j]
            sj = 0
            for k in range(d):
                wj = wj + A[j, k] * z[k]
                sj = sj + A[j, k] * v[k]
            t = wj * sj.conjugate()
            total += (2.0 * _abs2(wj) - y[j]) * _abs2(sj) \
                + (t.real * t.real - t.imag * t.imag)
    return 2.0 * total / m


def hessian_matvec(zdouble[:, ::1] A, zdouble[::1] b, double[::1] y,
                   zdouble[::1] z, zdouble[::1] v):
    """Apply the real Hessian at z to v; Re(v^H t) equals quadform."""
    cdef Py_ssize_t m = A.shape[0], d = A.shape[1], j, k
    out = np.zeros(d, dtype=np.complex128)
    work = np.empty(m, dtype=np.complex128)
    cdef zdouble[::1] t = out
    cdef zdouble[::1] c = work
    cdef zdouble wj, sj, cj
    with nogil:
        for j in range(m):
            wj = b[j]
            sj = 0
            for k in range(d):
                wj = wj + A[j, k] * z[k]
                sj = sj + A[j, k] * v[k]
            c[j] = (2.0 * _abs2(wj) - y[j]) * sj + wj * wj * sj.conjugate()
        for j in range(m):
            cj = c[j]
            for k in range(d):
                t[k] = t[k] + A[j, k].conjugate() * cj
        for k in range(d):
            t[k] = t[k] * 2.0 / m
    return out


def descent(zdouble[:, ::1] A, zdouble[::1] b, double[::1] y, zdouble[::1] z0,
            x, double mu, long max_iters, double rel_tol, double grad_tol):
    """Fixed-step descent loop; see the NumPy twin for the full contract."""
    cdef Py_ssize_t m = A.shape[0], d = A.shape[1], j, k
    cdef bint has_x = x is not None

    z_arr = np.array(z0, dtype=np.complex128, copy=True)
    g_arr = np.zeros(d, dtype=np.complex128)
    cdef zdouble[::1] z = z_arr
    cdef zdouble[::1] g = g_arr
    cdef zdouble[::1] xv = z  # placeholder; only read when has_x
    cdef double xnorm = 0.0
    if has_x:
        xv = x
        for k in range(d):
            xnorm += _abs2(xv[k])
        xnorm = sqrt(xnorm)

    cdef Py_ssize_t cap = _record_capacity(max_iters)
    it_arr = np.empty(cap, dtype=np.int64)
    rel_arr = np.empty(cap, dtype=np.float64)
    loss_arr = np.empty(cap, dtype=np.float64)
    cdef long[::1] rec_iters = it_arr
    cdef double[::1] rec_rel = rel_arr
    cdef double[::1] rec_loss = loss_arr
    cdef Py_ssize_t n_rec = 0

    cdef long k_iter = 0, iters_run = max_iters
    cdef int status = _ST_EXHAUSTED
    cdef bint stopped, diverged, record
    cdef double f, rel, gn2, dz
    with nogil:
        for k_iter in range(max_iters + 1):
            f = _loss_gradient(A, b, y, z, g)
            gn2 = 0.0
            for k in range(d):
                gn2 += _abs2(g[k])
            if has_x:
                rel = 0.0
                for k in range(d):
                    rel += _abs2(z[k] - xv[k])
                rel = sqrt(rel) / xnorm
                stopped = rel <= rel_tol
            else:
                rel = NAN
                stopped = sqrt(gn2) <= grad_tol
            diverged = not isfinite(f)

            record = (
                k_iter <= _REC_DENSE
                or k_iter % _REC_STRIDE == 0
                or stopped
                or diverged
                or k_iter == max_iters
            )
            if record:
                rec_iters[n_rec] = k_iter
                rec_rel[n_rec] = rel
                rec_loss[n_rec] = f
                n_rec += 1

            if diverged:
                status = _ST_DIVERGED
                iters_run = k_iter
                break
            if stopped:
                status = _ST_CONVERGED
                iters_run = k_iter
                break
            if k_iter == max_iters:
                status = _ST_EXHAUSTED
                iters_run = k_iter
                break
            for k in range(d):
                z[k] = z[k] - mu * g[k]

    return (
        it_arr[:n_rec].copy(),
        rel_arr[:n_rec].copy(),
        loss_arr[:n_rec].copy(),
        z_arr,
        int(iters_run),
        int(status),
    )


def _record_capacity(max_iters):
    dense = min(max_iters, RECORD_DENSE_LIMIT) + 1
    thinned = max(0, max_iters - RECORD_DENSE_LIMIT) // RECORD_THIN_STRIDE + 1
    return dense + thinned + 2
