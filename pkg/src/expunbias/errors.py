"""Exception hierarchy.

Everything raised by this package derives from :class:`ExpunbiasError`.
Domain-style errors additionally derive from :class:`ValueError` so that
callers who do not care about the fine distinctions can catch the familiar
builtin.
"""

from __future__ import annotations


class ExpunbiasError(Exception):
    """Base class for all package errors."""


class DomainError(ExpunbiasError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class SpecError(DomainError):
    """A FunctionalSpec is malformed (missing/extra/invalid parameters)."""


class RangeError(ExpunbiasError, ArithmeticError):
    """A value is representable in principle but not at working precision
    (overflow, or a guard such as |x| > 700 in the incomplete gamma sum)."""


class ConfigurationError(ExpunbiasError, ValueError):
    """An inversion/quadrature configuration is unusable (e.g. Talbot without
    a complex evaluator)."""


class UnsupportedTransformError(ExpunbiasError, ValueError):
    """The transform was declared distributional (Dirac content); the numeric
    inversion engine does not serve it."""


class InversionError(ExpunbiasError, ArithmeticError):
    """Numerical Laplace inversion failed to stabilise.

    Carries a ``diagnostics`` dict (method, abscissa, orders tried, partial
    results) to make failures actionable.
    """

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class QuadratureError(ExpunbiasError, ArithmeticError):
    """Adaptive quadrature did not converge within its subdivision budget.

    ``partial_value`` / ``err_estimate`` expose the best available result.
    """

    def __init__(self, message: str, partial_value: float = float("nan"),
                 err_estimate: float = float("inf"), segments: int = 0):
        super().__init__(message)
        self.partial_value = partial_value
        self.err_estimate = err_estimate
        self.segments = segments


class NondifferentiableError(ExpunbiasError, ValueError):
    """The estimator is not differentiable at the requested point (indicator
    kink), so no delta-method variance exists there."""


class DegenerateError(NondifferentiableError):
    """The estimator derivative vanishes at the evaluation point; the CLT
    normalisation would divide by zero."""
