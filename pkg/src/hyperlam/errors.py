"""Exception hierarchy.

Errors derived from :class:`NumericalError` signal that a numerical
infrastructure component (quadrature, time stepping, group reduction) could
not meet its own accuracy or termination contract.  The command line runner
maps them to a dedicated exit status.
"""


class HyperlamError(Exception):
    """Base class for all package errors."""


class DomainError(HyperlamError, ValueError):
    """An argument lies outside the domain of the operation."""


class DegenerateError(HyperlamError, ValueError):
    """The requested object is undefined for coincident inputs."""


class GridError(HyperlamError, ValueError):
    """A grid does not cover the range an operation needs."""


class SupportError(HyperlamError, ValueError):
    """A test function would be moved outside the region it lives in."""


class NumericalError(HyperlamError, RuntimeError):
    """A numerical routine failed its internal accuracy or stopping test."""


class IterationCapExceeded(NumericalError):
    """Reduction to a fundamental domain did not terminate."""


class QuadratureError(NumericalError):
    """A quadrature did not reach its error target."""


class StepError(NumericalError):
    """A path simulation produced an invalid state."""


class StabilityError(NumericalError):
    """A time step is outside the range the scheme accepts."""


class MassError(NumericalError):
    """Probability mass drifted beyond the conservation tolerance."""


class IllConditionedError(NumericalError):
    """A linear inverse problem is too badly conditioned to be trusted."""
