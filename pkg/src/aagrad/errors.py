"""Exception types shared across the package."""


class AagradError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatch(AagradError):
    """Operands have incompatible shapes."""


class SingularSystem(AagradError):
    """A linear system is rank-deficient beyond tolerance and unregularized."""


class NotSymmetric(AagradError):
    """A matrix expected to be symmetric is not, beyond tolerance."""


class BadLabel(AagradError):
    """A classification label is outside {-1, +1}."""


class ParseError(AagradError):
    """A dataset file could not be parsed; the message names the cell."""


class RaggedRows(ParseError):
    """Rows of a dataset file differ in length."""


class NonFiniteGradient(AagradError):
    """A gradient evaluation produced NaN or Inf entries."""


class EnergyDomainViolation(AagradError):
    """f(x) + c <= 0, so the energy sqrt(f(x)+c) is undefined."""


class Diverged(AagradError):
    """The objective exceeded the divergence guard during a run."""


class ZeroGradient(AagradError):
    """The gradient is exactly zero where a nonzero one is required."""


class BoundViolated(AagradError):
    """A theoretical convergence bound failed at some iteration.

    Carries the offending iteration index and the signed slack
    (bound minus observed value; negative means violated).
    """

    def __init__(self, message, iteration=None, slack=None):
        super().__init__(message)
        self.iteration = iteration
        self.slack = slack


class ConfigError(AagradError):
    """An experiment configuration failed validation."""
