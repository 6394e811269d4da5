"""Gradient descent for the intensity objective, from arbitrary starts.

The landscape is globally benign when the bias is large enough relative to
the signal, so plain fixed-step descent from any point of a data-derived
ball converges linearly; no spectral initialization is involved.  This
module provides the norm/radius estimate for that ball, step-size policies
(fixed, curvature-scaled, backtracking), the descent loop itself, and a
post-hoc linear-rate fit of recorded error traces.
"""

from __future__ import annotations

import io
import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from . import _kernels as kernels
from . import objective
from .errors import (
    DegenerateObservationsError,
    DegenerateSignalError,
    DivergedError,
    InsufficientDataError,
)
from .model import ProblemInstance, check_bias_conditions, sample_in_ball
from .rng import STREAM_INIT, STREAM_POWER, RngSpec, as_generator

log = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)


# ---------------------------------------------------------------------------
# Step-size policies


@dataclass(frozen=True)
class FixedStep:
    """Constant step size, exactly as given."""

    mu: float

    def __post_init__(self):
        if not (self.mu > 0 and math.isfinite(self.mu)):
            raise ValueError(f"need mu > 0, got {self.mu}")


@dataclass(frozen=True)
class AutoStep:
    """Step safety / lambda_max, with lambda_max estimated at the start point."""

    safety: float = 0.5

    def __post_init__(self):
        if not (0.0 < self.safety < 1.0):
            raise ValueError(f"need safety in (0, 1), got {self.safety}")


@dataclass(frozen=True)
class BacktrackingStep:
    """Armijo line search along the negative gradient each iteration."""

    shrink: float = 0.5
    c_armijo: float = 1e-4
    mu0: Optional[float] = None  # initial trial step; estimated when None

    def __post_init__(self):
        if not (0.0 < self.shrink < 1.0):
            raise ValueError(f"need shrink in (0, 1), got {self.shrink}")
        if not (0.0 < self.c_armijo < 1.0):
            raise ValueError(f"need c_armijo in (0, 1), got {self.c_armijo}")
        if self.mu0 is not None and not self.mu0 > 0:
            raise ValueError(f"need mu0 > 0, got {self.mu0}")


StepPolicy = Union[FixedStep, AutoStep, BacktrackingStep]


def parse_step(text: str) -> StepPolicy:
    """Parse a policy spelled as fixed:<mu> | auto[:safety] | backtrack[:shrink[:c]]."""
    parts = text.strip().split(":")
    kind = parts[0].lower()
    try:
        if kind == "fixed":
            if len(parts) != 2:
                raise ValueError
            return FixedStep(float(parts[1]))
        if kind == "auto":
            if len(parts) == 1:
                return AutoStep()
            if len(parts) == 2:
                return AutoStep(float(parts[1]))
            raise ValueError
        if kind in ("backtrack", "backtracking"):
            args = [float(p) for p in parts[1:]]
            if len(args) == 0:
                return BacktrackingStep()
            if len(args) == 1:
                return BacktrackingStep(shrink=args[0])
            if len(args) == 2:
                return BacktrackingStep(shrink=args[0], c_armijo=args[1])
            raise ValueError
    except ValueError as exc:
        raise ValueError(f"cannot parse step policy {text!r}") from exc
    raise ValueError(f"unknown step policy {text!r}")


def describe_step(policy: StepPolicy) -> str:
    """Stable textual form of a policy (inverse of parse_step)."""
    if isinstance(policy, FixedStep):
        return f"fixed:{policy.mu!r}"
    if isinstance(policy, AutoStep):
        return f"auto:{policy.safety!r}"
    if isinstance(policy, BacktrackingStep):
        return f"backtrack:{policy.shrink!r}:{policy.c_armijo!r}"
    raise ValueError(f"unknown step policy {policy!r}")


# ---------------------------------------------------------------------------
# Configuration and trace


@dataclass
class SolverConfig:
    """Options for :func:`gradient_descent`.

    ``success_tol`` is a relative-error threshold when the instance carries
    its ground truth; otherwise stopping falls back to the gradient norm
    against ``grad_tol`` (derived from the observation scale when None).
    ``z0`` overrides the random start inside the data-derived ball.
    """

    step: StepPolicy = field(default_factory=AutoStep)
    max_iters: int = 10_000
    success_tol: float = 1e-5
    grad_tol: Optional[float] = None
    z0: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError(f"need max_iters >= 1, got {self.max_iters}")
        if not (self.success_tol > 0):
            raise ValueError(f"need success_tol > 0, got {self.success_tol}")
        if self.grad_tol is not None and not (self.grad_tol > 0):
            raise ValueError(f"need grad_tol > 0, got {self.grad_tol}")


@dataclass
class SolveTrace:
    """Recorded descent history plus outcome summary.

    Every iteration up to 100000 is recorded, then every 10th (the stopping
    iteration always included), so ``iters`` carries the recorded indices
    explicitly.  ``rel_errors`` is NaN throughout when the instance had no
    ground truth.
    """

    iters: np.ndarray
    rel_errors: np.ndarray
    losses: np.ndarray
    iters_run: int
    converged: bool
    final_z: np.ndarray
    mu_used: float
    r0: Optional[float]
    step: str
    success_tol: float
    fitted_rate: Optional[float] = None

    def to_csv(self, path_or_file) -> None:
        """Write the recorded trace as CSV (iter, rel_error, loss)."""
        own = isinstance(path_or_file, str)
        fh = open(path_or_file, "w", encoding="utf-8", newline="\n") if own else path_or_file
        try:
            fh.write("iter,rel_error,loss\n")
            for k, e, f in zip(self.iters, self.rel_errors, self.losses):
                fh.write(f"{int(k)},{float(e)!r},{float(f)!r}\n")
        finally:
            if own:
                fh.close()

    def csv_bytes(self) -> bytes:
        buf = io.StringIO()
        self.to_csv(buf)
        return buf.getvalue().encode("utf-8")

    def summary(self) -> dict:
        """The stable JSON summary of a solve."""
        rate = self.fitted_rate
        if rate is None:
            try:
                rate = fit_convergence_rate(self)
            except InsufficientDataError:
                rate = None
        return {
            "converged": bool(self.converged),
            "iters_run": int(self.iters_run),
            "fitted_rate": rate,
            "mu_used": float(self.mu_used),
            "R0": None if self.r0 is None else float(self.r0),
        }


# ---------------------------------------------------------------------------
# Norm/radius estimate and initialization


def compute_R0(instance: ProblemInstance, allow_fallback: bool = False) -> float:
    """Data-derived search radius 2 * sqrt(mean(y) - ||b||^2 / m).

    With high probability the signal norm lies in [R0/3, R0].  On noisy data
    the radicand can go non-positive; with ``allow_fallback`` a defensive
    radius from the raw observation mean is used instead (logged), otherwise
    the failure raises.
    """
    mean_y = float(np.mean(instance.y))
    bias_power = float(np.linalg.norm(instance.b)) ** 2 / instance.m
    radicand = mean_y - bias_power
    if radicand > 0:
        return 2.0 * math.sqrt(radicand)
    if allow_fallback:
        alt = max(radicand, mean_y) / 2.0
        if alt > 0:
            r0 = 2.0 * math.sqrt(alt)
            log.warning(
                "radius radicand %.3e non-positive; falling back to R0=%.3e", radicand, r0
            )
            return r0
    raise DegenerateObservationsError(
        f"cannot estimate the signal norm: mean(y)={mean_y:.6g} <= ||b||^2/m={bias_power:.6g}"
    )


def sample_initial_point(radius: float, d: int, rng) -> np.ndarray:
    """Uniform start inside the complex ball of the given radius."""
    return sample_in_ball(radius, d, rng)


# ---------------------------------------------------------------------------
# Curvature estimation and step selection


def estimate_lambda_max(
    instance: ProblemInstance,
    z,
    min_iters: int = 30,
    max_iters: int = 500,
    tol: float = 1e-12,
    rng=None,
) -> float:
    """Largest real-Hessian eigenvalue at z by matrix-free power iteration.

    Uses Hessian-vector products (O(m d) each), never the dense matrix.  The
    start vector comes from a seed derived from the instance so repeated
    calls agree bit for bit.
    """
    if min_iters < 1 or max_iters < min_iters:
        raise ValueError("need 1 <= min_iters <= max_iters")
    z = np.ascontiguousarray(np.asarray(z), dtype=np.complex128)
    if rng is None:
        rng = RngSpec(instance.seed if instance.seed is not None else 0).derive(STREAM_POWER)
    gen = as_generator(rng)
    v = gen.standard_normal(instance.d) + 1j * gen.standard_normal(instance.d)
    nv = float(np.linalg.norm(v))
    if nv == 0.0:  # pragma: no cover - measure-zero draw
        v = np.ones(instance.d, dtype=np.complex128)
        nv = float(np.linalg.norm(v))
    v /= nv

    lam = 0.0
    for k in range(max_iters):
        t = kernels.hessian_matvec(instance.A, instance.b, instance.y, z, v)
        nt = float(np.linalg.norm(t))
        if nt == 0.0:
            return 0.0
        lam_new = float(np.real(np.vdot(v, t)))
        v = t / nt
        if k + 1 >= min_iters and abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            return lam_new
        lam = lam_new
    return lam


def auto_step_size(instance: ProblemInstance, z0, safety: float = 0.5) -> float:
    """Step safety / lambda_max(z0); falls back to a dimensional bound.

    When the curvature estimate is non-positive (wildly indefinite or zero
    Hessian at the start) the step becomes safety / (d * log(m) * R0^2),
    which is the scaling of the theoretical admissible step.
    """
    if not (0.0 < safety < 1.0):
        raise ValueError(f"need safety in (0, 1), got {safety}")
    lam = estimate_lambda_max(instance, z0)
    if lam > 0.0 and math.isfinite(lam):
        return safety / lam
    r0 = compute_R0(instance, allow_fallback=True)
    mu = safety / (instance.d * max(math.log(instance.m), 1.0) * r0 * r0)
    log.warning("curvature estimate %.3e unusable; falling back to mu=%.3e", lam, mu)
    return mu


def lipschitz_bound(
    R: float, d: int, log_m: float, b_norm_over_sqrt_m: float, b_inf: float, x_norm: float
) -> float:
    """Curvature bound over the ball of radius R (pure arithmetic form).

    C_R = 6 sqrt(2) (2 R d log m + ||b||_inf sqrt(d log m)) (R + ||b||/sqrt(m))
        + 8 sqrt(2) (2 d log m (R^2 + ||x||^2) + ||b||_inf^2)
    """
    first = 2.0 * R * d * log_m + b_inf * math.sqrt(d * log_m)
    second = R + b_norm_over_sqrt_m
    third = 2.0 * d * log_m * (R * R + x_norm * x_norm) + b_inf * b_inf
    return 6.0 * SQRT2 * first * second + 8.0 * SQRT2 * third


def lipschitz_constant_CR(instance: ProblemInstance, R: float) -> float:
    """Evaluate :func:`lipschitz_bound` on an instance; diagnostic only.

    The implied admissible step (4 - sqrt(2)) / (2 C_R) is far smaller than
    what works in practice, which is why the default policy estimates
    curvature instead.
    """
    if R <= 0:
        raise ValueError(f"need R > 0, got {R}")
    if instance.x is None:
        raise DegenerateSignalError("curvature bound needs the ground-truth norm")
    b_abs = np.abs(instance.b)
    return lipschitz_bound(
        R,
        instance.d,
        math.log(instance.m),
        float(np.linalg.norm(instance.b)) / math.sqrt(instance.m),
        float(b_abs.max()),
        instance.signal_norm(),
    )


def theoretical_step_bound(instance: ProblemInstance, R: float) -> float:
    """The admissible fixed step (4 - sqrt(2)) / (2 C_R) for the ball of radius R."""
    return (4.0 - SQRT2) / (2.0 * lipschitz_constant_CR(instance, R))


@dataclass(frozen=True)
class ContractionEstimate:
    """Per-iteration error contraction factors implied by curvature beta.

    Two candidates are reported because the stated squared-error factor
    (1 - mu beta) and the one the derivation actually yields (1 - mu beta/2)
    differ by that factor of two; neither is asserted, both are printed.
    """

    beta: float
    rho: float
    rate_optimistic: float  # sqrt(max(1 - mu beta, 0)), per-iteration on error
    rate_conservative: float  # sqrt(max(1 - mu beta / 2, 0))


def contraction_candidates(instance: ProblemInstance, mu: float) -> ContractionEstimate:
    """Theoretical linear-rate candidates for a given step on this instance."""
    report = check_bias_conditions(instance)
    xnorm = instance.signal_norm()
    beta = (1.96 * report.c0_hat**2 - 4.4) * xnorm * xnorm
    rho = mu * beta
    return ContractionEstimate(
        beta=beta,
        rho=rho,
        rate_optimistic=math.sqrt(max(1.0 - rho, 0.0)),
        rate_conservative=math.sqrt(max(1.0 - rho / 2.0, 0.0)),
    )


# ---------------------------------------------------------------------------
# Descent


def _grad_scale(instance: ProblemInstance) -> float:
    mean_y = max(float(np.mean(instance.y)), 0.0)
    return mean_y**1.5


def gradient_descent(
    instance: ProblemInstance,
    config: Optional[SolverConfig] = None,
    rng=None,
) -> SolveTrace:
    """Run descent on an instance; returns the recorded trace.

    The start point is ``config.z0`` when given, otherwise a uniform draw
    from the ball of radius R0 (seeded from ``rng`` or, failing that, from
    the instance seed, so reruns are reproducible).  Raises
    :class:`DivergedError` — with the partial trace attached — as soon as
    the loss turns non-finite.
    """
    config = config or SolverConfig()

    r0: Optional[float] = None
    if config.z0 is not None:
        z0 = np.ascontiguousarray(np.asarray(config.z0), dtype=np.complex128)
        if z0.shape != (instance.d,):
            raise ValueError(f"z0 must have shape ({instance.d},), got {z0.shape}")
        try:
            r0 = compute_R0(instance, allow_fallback=True)
        except DegenerateObservationsError:
            r0 = None
    else:
        r0 = compute_R0(instance, allow_fallback=True)
        if rng is None:
            rng = RngSpec(instance.seed if instance.seed is not None else 0).derive(STREAM_INIT)
        z0 = sample_initial_point(r0, instance.d, rng)

    has_x = instance.x is not None
    if has_x and instance.signal_norm() == 0.0:
        raise DegenerateSignalError("relative error is undefined for a zero signal")
    grad_tol = config.grad_tol
    if grad_tol is None:
        grad_tol = config.success_tol * max(_grad_scale(instance), 1e-300)

    if isinstance(config.step, BacktrackingStep):
        return _descent_backtracking(instance, config, z0, r0, grad_tol)

    if isinstance(config.step, FixedStep):
        mu = config.step.mu
    else:
        mu = auto_step_size(instance, z0, config.step.safety)

    iters, rels, losses, z, iters_run, status = kernels.descent(
        instance.A,
        instance.b,
        instance.y,
        z0,
        instance.x if has_x else None,
        mu,
        int(config.max_iters),
        float(config.success_tol),
        float(grad_tol),
    )
    trace = SolveTrace(
        iters=iters,
        rel_errors=rels,
        losses=losses,
        iters_run=int(iters_run),
        converged=status == kernels.STATUS_CONVERGED,
        final_z=z,
        mu_used=mu,
        r0=r0,
        step=describe_step(config.step),
        success_tol=config.success_tol,
    )
    if status == kernels.STATUS_DIVERGED:
        raise DivergedError(int(iters_run), trace)
    return trace


def _descent_backtracking(
    instance: ProblemInstance,
    config: SolverConfig,
    z0: np.ndarray,
    r0: Optional[float],
    grad_tol: float,
) -> SolveTrace:
    """Armijo-backtracked descent; loss is nonincreasing by construction."""
    policy = config.step
    assert isinstance(policy, BacktrackingStep)
    mu_init = policy.mu0
    if mu_init is None:
        lam = estimate_lambda_max(instance, z0)
        mu_init = 1.0 / lam if lam > 0 else auto_step_size(instance, z0, 0.5)

    A, b, y = instance.A, instance.b, instance.y
    has_x = instance.x is not None
    xnorm = instance.signal_norm() if has_x else 0.0
    z = z0.copy()

    rec_i, rec_e, rec_f = [], [], []
    status = kernels.STATUS_EXHAUSTED
    iters_run = config.max_iters
    for k in range(config.max_iters + 1):
        f, g = kernels.loss_gradient(A, b, y, z)
        gn2 = float(np.real(np.vdot(g, g)))
        if has_x:
            rel = float(np.linalg.norm(z - instance.x)) / xnorm
            stopped = rel <= config.success_tol
        else:
            rel = math.nan
            stopped = math.sqrt(gn2) <= grad_tol
        diverged = not math.isfinite(f)

        if (
            k <= kernels.RECORD_DENSE_LIMIT
            or k % kernels.RECORD_THIN_STRIDE == 0
            or stopped
            or diverged
            or k == config.max_iters
        ):
            rec_i.append(k)
            rec_e.append(rel)
            rec_f.append(f)

        if diverged:
            status, iters_run = kernels.STATUS_DIVERGED, k
            break
        if stopped:
            status, iters_run = kernels.STATUS_CONVERGED, k
            break
        if k == config.max_iters:
            status, iters_run = kernels.STATUS_EXHAUSTED, k
            break

        mu = mu_init
        accepted = False
        for _ in range(80):
            z_try = z - mu * g
            f_try = kernels.loss(A, b, y, z_try)
            if f_try <= f - policy.c_armijo * mu * 2.0 * gn2:
                z = z_try
                accepted = True
                break
            mu *= policy.shrink
        if not accepted:
            # Numerically stationary: no step of any tried size decreases f.
            status, iters_run = kernels.STATUS_EXHAUSTED, k
            break

    trace = SolveTrace(
        iters=np.asarray(rec_i, dtype=np.int64),
        rel_errors=np.asarray(rec_e, dtype=np.float64),
        losses=np.asarray(rec_f, dtype=np.float64),
        iters_run=int(iters_run),
        converged=status == kernels.STATUS_CONVERGED,
        final_z=z,
        mu_used=float(mu_init),
        r0=r0,
        step=describe_step(policy),
        success_tol=config.success_tol,
    )
    if status == kernels.STATUS_DIVERGED:
        raise DivergedError(int(iters_run), trace)
    return trace


# ---------------------------------------------------------------------------
# Rate fitting


@dataclass(frozen=True)
class RateFit:
    """Least-squares fit of log(rel_error) against iteration index."""

    rate: float
    r_squared: float
    n_points: int


FIT_WINDOW_LO = 1e-10
FIT_WINDOW_HI = 1e-1


def fit_convergence_stats(trace: SolveTrace) -> RateFit:
    """Fit the linear-convergence regime of a recorded error trace.

    Only points with rel_error in [1e-10, 1e-1] enter the fit — above that
    the iteration is still finding the basin, below it the error sits at the
    round-off floor.  Requires at least 10 recorded errors above 1e-12 and 3
    points inside the window.
    """
    e = np.asarray(trace.rel_errors, dtype=np.float64)
    k = np.asarray(trace.iters, dtype=np.float64)
    finite = np.isfinite(e)
    if int(np.count_nonzero(finite & (e > 1e-12))) < 10:
        raise InsufficientDataError("need at least 10 recorded errors above 1e-12")
    mask = finite & (e >= FIT_WINDOW_LO) & (e <= FIT_WINDOW_HI)
    n = int(np.count_nonzero(mask))
    if n < 3:
        raise InsufficientDataError(f"only {n} trace points inside the fit window")
    ks, ys = k[mask], np.log(e[mask])
    slope, intercept = np.polyfit(ks, ys, 1)
    pred = slope * ks + intercept
    ss_res = float(np.sum((ys - pred) ** 2))
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return RateFit(rate=float(math.exp(slope)), r_squared=r2, n_points=n)


def fit_convergence_rate(trace: SolveTrace) -> float:
    """Per-iteration error contraction factor from the recorded trace."""
    return fit_convergence_stats(trace).rate
