"""Recovery of a complex signal from biased intensity measurements.

Observations are y_j = |<a_j, x> + b_j|^2 with known measurements a_j and
known bias b.  Because the bias breaks phase invariance, the least-squares
objective has a benign landscape once the bias is large enough relative to
the signal, and plain gradient descent from an arbitrary point of a
data-derived ball recovers x itself — no spectral initialization, no global
phase ambiguity.

The public surface: instance generation and serialization (:mod:`model`),
the objective and its derivatives (:mod:`objective`), descent with several
step policies (:mod:`solver`), empirical landscape probes (:mod:`probes`),
and Monte Carlo experiment drivers (:mod:`experiments`).  Numerical kernels
run on a compiled extension when available and on NumPy otherwise; see
``affinepr._kernels.BACKEND``.
"""

from ._kernels import BACKEND, available_backends
from .errors import (
    AffineprError,
    DegenerateObservationsError,
    DegenerateSignalError,
    DivergedError,
    InsufficientDataError,
    ResourceLimitError,
)
from .model import (
    BiasConditionReport,
    C0_THRESHOLD,
    ProblemInstance,
    check_bias_conditions,
    generate_instance,
    load_instance,
    sample_complex_gaussian,
    sample_in_ball,
    sample_signal,
    save_instance,
)
from .objective import (
    assemble_real_hessian,
    directional_derivative_fd,
    fields,
    hessian_matvec,
    hessian_quadratic_form,
    loss,
    loss_and_gradient,
    real_direction,
    second_directional_fd,
    wirtinger_gradient,
)
from .probes import (
    ConvexityReport,
    DerivativeCheckReport,
    probe_difference_inequality,
    probe_r0_sandwich,
    probe_strong_convexity,
    run_derivative_checks,
    smallest_eig_shifted_power,
)
from .rng import RngSpec, mix, resolve_seed, splitmix64
from .solver import (
    AutoStep,
    BacktrackingStep,
    FixedStep,
    RateFit,
    SolveTrace,
    SolverConfig,
    auto_step_size,
    compute_R0,
    contraction_candidates,
    describe_step,
    estimate_lambda_max,
    fit_convergence_rate,
    fit_convergence_stats,
    gradient_descent,
    lipschitz_bound,
    lipschitz_constant_CR,
    parse_step,
    sample_initial_point,
    theoretical_step_bound,
)
from .experiments import (
    ConvergenceResult,
    SweepResult,
    emit_csv,
    emit_json,
    emit_plot,
    parse_sweep_csv,
    parse_trace_csv,
    run_convergence_experiment,
    run_success_sweep,
)

__version__ = "0.1.0"
