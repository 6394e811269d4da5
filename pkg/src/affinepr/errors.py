"""Exception types shared across the package.

Argument mistakes (wrong shapes, out-of-range options) raise plain
``ValueError``; the classes here mark domain events callers may want to
catch and handle, e.g. a diverging iteration inside a Monte Carlo trial.
"""

from __future__ import annotations


class AffineprError(Exception):
    """Base class for domain errors raised by this package."""


class DivergedError(AffineprError):
    """Gradient descent produced a non-finite loss.

    Carries the iteration index at which divergence was detected and the
    partial trace recorded up to that point (may be ``None`` when tracing
    was disabled).
    """

    def __init__(self, iteration: int, trace=None):
        super().__init__(f"iteration diverged (non-finite loss) at step {iteration}")
        self.iteration = iteration
        self.trace = trace


class DegenerateObservationsError(AffineprError):
    """Observed intensities are incompatible with a norm estimate."""


class DegenerateSignalError(AffineprError):
    """The ground-truth signal is zero (or missing) where one is required."""


class InsufficientDataError(AffineprError):
    """Not enough usable points for a fit or estimate."""


class ResourceLimitError(AffineprError):
    """A dense computation was refused because it would be too large."""
