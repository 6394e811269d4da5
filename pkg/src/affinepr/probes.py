"""Empirical landscape probes.

Each probe turns one of the structural claims about the objective into a
measurement on concrete random instances: positive curvature over a large
ball (with the explicit lower bound), the norm sandwich of the data-derived
radius, the averaged intensity-difference inequality, and agreement of the
analytic derivatives with finite-difference and dense-matrix oracles.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import objective
from .errors import DegenerateObservationsError
from .model import (
    ProblemInstance,
    check_bias_conditions,
    generate_instance,
    sample_in_ball,
)
from .rng import STREAM_PROBE, RngSpec, as_generator
from .solver import compute_R0


def _as_rngspec(rng) -> RngSpec:
    if isinstance(rng, RngSpec):
        return rng
    if rng is None:
        return RngSpec(0)
    if isinstance(rng, (int, np.integer)):
        return RngSpec(int(rng))
    raise ValueError("probes need an RngSpec or integer seed for per-trial derivation")


def smallest_eig_shifted_power(H: np.ndarray, iters: int = 400, rng=None) -> float:
    """Smallest eigenvalue of symmetric H via shift-and-power, no factorization.

    First power-iterates H to bound the spectrum from above, then
    power-iterates (lam_max I - H); useful as an independent check on the
    dense eigensolver.
    """
    n = H.shape[0]
    gen = as_generator(rng if rng is not None else 12345)
    v = gen.standard_normal(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        t = H @ v
        nt = float(np.linalg.norm(t))
        if nt == 0.0:
            lam = 0.0
            break
        lam = float(v @ t)
        v = t / nt
    shift = abs(lam) * 1.5 + 1.0
    w = gen.standard_normal(n)
    w /= np.linalg.norm(w)
    nu = 0.0
    for _ in range(iters):
        t = shift * w - H @ w
        nt = float(np.linalg.norm(t))
        if nt == 0.0:
            nu = 0.0
            break
        nu = float(w @ t)
        w = t / nt
    return shift - nu


@dataclass
class ConvexityReport:
    """Curvature measurements over random points of a ball around the origin.

    ``beta_theory`` is (1.96 c0_hat^2 - 4.4) ||x||^2, the claimed uniform
    lower bound on the real-Hessian spectrum; ``passed`` requires every
    sampled point to have positive smallest eigenvalue clearing half that
    bound (the half allows for the hat-vs-true c0 slack).
    """

    num_points: int
    ball_radius: float
    c0_hat: float
    beta_theory: float
    min_eigs: list = field(default_factory=list)
    min_eig: float = math.inf
    min_quadform_sampled: float = math.inf
    directions_per_point: int = 0
    bias_satisfied: bool = False
    passed: bool = False

    def to_dict(self) -> dict:
        return {
            "num_points": self.num_points,
            "ball_radius": self.ball_radius,
            "c0_hat": self.c0_hat,
            "beta_theory": self.beta_theory,
            "min_eig": self.min_eig,
            "min_quadform_sampled": self.min_quadform_sampled,
            "directions_per_point": self.directions_per_point,
            "bias_satisfied": self.bias_satisfied,
            "passed": self.passed,
        }


def probe_strong_convexity(
    instance: ProblemInstance,
    num_points: int = 20,
    ball_radius_mult: float = 10.0,
    directions_per_point: int = 16,
    rng=None,
) -> ConvexityReport:
    """Measure the real-Hessian spectrum at random points of a large ball.

    At each sampled z the dense 2d x 2d real Hessian is assembled and its
    smallest eigenvalue taken (symmetric eigensolver); random unit
    directions additionally sample the quadratic form directly, which must
    dominate the eigenvalue minimum.
    """
    if num_points < 1:
        raise ValueError(f"need num_points >= 1, got {num_points}")
    if ball_radius_mult <= 0:
        raise ValueError(f"need ball_radius_mult > 0, got {ball_radius_mult}")
    bias = check_bias_conditions(instance)
    xnorm = instance.signal_norm()
    radius = ball_radius_mult * xnorm
    beta = (1.96 * bias.c0_hat**2 - 4.4) * xnorm * xnorm

    report = ConvexityReport(
        num_points=num_points,
        ball_radius=radius,
        c0_hat=bias.c0_hat,
        beta_theory=beta,
        directions_per_point=directions_per_point,
        bias_satisfied=bias.satisfied,
    )
    if not bias.satisfied:
        warnings.warn(
            f"bias conditions unsatisfied (c0_hat={bias.c0_hat:.4f} <= "
            f"{bias.c0_threshold:.4f}); curvature probe marked failed",
            stacklevel=2,
        )

    spec = _as_rngspec(rng if rng is not None else instance.seed or 0).derive(STREAM_PROBE)
    min_eig = math.inf
    min_qf = math.inf
    for i in range(num_points):
        gen = spec.derive(i).generator()
        z = sample_in_ball(radius, instance.d, gen)
        H = objective.assemble_real_hessian(instance, z)
        eig = float(np.linalg.eigvalsh(H)[0])
        report.min_eigs.append(eig)
        min_eig = min(min_eig, eig)
        for _ in range(directions_per_point):
            v = gen.standard_normal(instance.d) + 1j * gen.standard_normal(instance.d)
            v /= np.linalg.norm(v)
            min_qf = min(min_qf, objective.hessian_quadratic_form(instance, z, v))

    report.min_eig = min_eig
    report.min_quadform_sampled = min_qf
    report.passed = bool(bias.satisfied and min_eig > 0.0 and min_eig >= 0.5 * beta)
    return report


def probe_r0_sandwich(
    d: int, m: int, bias_lambda: float, trials: int, rng=None
) -> float:
    """Fraction of fresh noiseless instances with R0/3 <= ||x|| <= R0."""
    if trials < 1:
        raise ValueError(f"need trials >= 1, got {trials}")
    spec = _as_rngspec(rng)
    hits = 0
    for t in range(trials):
        inst = generate_instance(d, m, bias_lambda, 0.0, spec.derive(t))
        try:
            r0 = compute_R0(inst)
        except DegenerateObservationsError:
            continue
        xnorm = inst.signal_norm()
        if r0 / 3.0 <= xnorm <= r0:
            hits += 1
    return hits / trials


def probe_difference_inequality(
    d: int,
    m: int,
    bias_lambda: float,
    num_pairs: int,
    rng=None,
    ball_radius_mult: float = 10.0,
) -> float:
    """Fraction of random pairs satisfying the averaged difference bound.

    For z, w in a ball of radius ``ball_radius_mult * ||x||``, checks

        (1/m) sum_j | |w_j(z)|^2 - |w_j(w)|^2 |
            <= (3/2) (||z|| + ||w|| + 2 ||b|| / sqrt(m)) ||z - w||,

    which is an averaging (not worst-case) statement, hence only reliable
    with enough measurements per dimension.
    """
    if num_pairs < 1:
        raise ValueError(f"need num_pairs >= 1, got {num_pairs}")
    if m < 8 * d:
        warnings.warn(
            f"m={m} < 8d={8 * d}: the averaged bound is a concentration "
            "statement and may fail at this sampling ratio",
            stacklevel=2,
        )
    spec = _as_rngspec(rng)
    inst = generate_instance(d, m, bias_lambda, 0.0, spec.derive(0))
    radius = ball_radius_mult * inst.signal_norm()
    bound_bias = 2.0 * float(np.linalg.norm(inst.b)) / math.sqrt(m)
    gen = spec.derive(1).generator()

    hits = 0
    for _ in range(num_pairs):
        z = sample_in_ball(radius, d, gen)
        w = sample_in_ball(radius, d, gen)
        fz = objective.fields(inst, z)
        fw = objective.fields(inst, w)
        lhs = float(np.mean(np.abs(np.abs(fz) ** 2 - np.abs(fw) ** 2)))
        rhs = (
            1.5
            * (float(np.linalg.norm(z)) + float(np.linalg.norm(w)) + bound_bias)
            * float(np.linalg.norm(z - w))
        )
        if lhs <= rhs:
            hits += 1
    return hits / num_pairs


# ---------------------------------------------------------------------------
# Derivative checks


GRAD_TOL = 1e-6
CURV_TOL = 1e-5
DENSE_TOL = 1e-10


@dataclass
class CaseFailure:
    seed: int
    kind: str
    deviation: float


@dataclass
class DerivativeCheckReport:
    """Outcome of randomized derivative cross-checks.

    Deviations are mixed relative: |a - b| / (1 + |a| + |b|), so they stay
    meaningful when the compared values pass through zero.
    """

    num_cases: int
    max_grad_deviation: float = 0.0
    max_curv_deviation: float = 0.0
    max_dense_deviation: float = 0.0
    failures: list = field(default_factory=list)
    passed: bool = True

    def to_dict(self) -> dict:
        return {
            "num_cases": self.num_cases,
            "max_grad_deviation": self.max_grad_deviation,
            "max_curv_deviation": self.max_curv_deviation,
            "max_dense_deviation": self.max_dense_deviation,
            "failures": [
                {"seed": f.seed, "kind": f.kind, "deviation": f.deviation}
                for f in self.failures
            ],
            "passed": self.passed,
        }


def _mixed_rel(a: float, b: float) -> float:
    return abs(a - b) / (1.0 + abs(a) + abs(b))


def run_derivative_checks(
    num_cases: int = 100, max_d: int = 16, rng=None, max_m: int = 64
) -> DerivativeCheckReport:
    """Cross-check analytic derivatives against oracles on random cases.

    Per case: the directional derivative against 2 Re(<grad, v>), the
    quadratic form against a second central difference, and the quadratic
    form against delta^T H delta with the dense real Hessian.  Any deviation
    beyond the fixed tolerances is recorded with the case seed for replay.
    """
    if num_cases < 1:
        raise ValueError(f"need num_cases >= 1, got {num_cases}")
    if max_d < 1:
        raise ValueError(f"need max_d >= 1, got {max_d}")
    spec = _as_rngspec(rng)
    report = DerivativeCheckReport(num_cases=num_cases)

    for t in range(num_cases):
        case = spec.derive(t)
        gen = case.generator()
        d = int(gen.integers(1, max_d + 1))
        m = int(gen.integers(1, max_m + 1))
        lam = float(gen.uniform(0.0, 5.0))
        sigma = 0.01 if (t % 2 == 0) else 0.0
        inst = generate_instance(d, m, lam, sigma, case.derive(1))

        # Probe point: a signal-scale blend so fields are neither tiny nor huge.
        g2 = case.derive(2).generator()
        along = float(g2.uniform(-1.0, 1.5))
        away = float(g2.uniform(0.0, 2.0))
        dir_ = g2.standard_normal(d) + 1j * g2.standard_normal(d)
        dir_ /= np.linalg.norm(dir_)
        z = along * inst.x + away * inst.signal_norm() * dir_
        v = g2.standard_normal(d) + 1j * g2.standard_normal(d)
        v /= np.linalg.norm(v)

        grad = objective.wirtinger_gradient(inst, z)
        analytic = 2.0 * float(np.real(np.vdot(v, grad)))  # 2 Re(v^H grad)
        fd1 = objective.directional_derivative_fd(inst, z, v)
        dev_g = _mixed_rel(analytic, fd1)
        report.max_grad_deviation = max(report.max_grad_deviation, dev_g)
        if dev_g > GRAD_TOL:
            report.failures.append(CaseFailure(case.seed, "gradient", dev_g))

        qf = objective.hessian_quadratic_form(inst, z, v)
        fd2 = objective.second_directional_fd(inst, z, v)
        dev_c = _mixed_rel(qf, fd2)
        report.max_curv_deviation = max(report.max_curv_deviation, dev_c)
        if dev_c > CURV_TOL:
            report.failures.append(CaseFailure(case.seed, "curvature", dev_c))

        H = objective.assemble_real_hessian(inst, z)
        delta = objective.real_direction(v)
        dense = float(delta @ (H @ delta))
        dev_h = _mixed_rel(qf, dense)
        report.max_dense_deviation = max(report.max_dense_deviation, dev_h)
        if dev_h > DENSE_TOL:
            report.failures.append(CaseFailure(case.seed, "dense", dev_h))

    report.passed = not report.failures
    return report
