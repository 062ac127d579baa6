"""Exception types shared across the package.

Validation errors mean the inputs or configuration were wrong; numerical
errors mean a procedure failed at runtime. The CLI maps the former to exit
status 2 and the latter to exit status 3.
"""


class ValidationError(ValueError):
    """Invalid inputs: domain setup, kernel spec, initial datum, or scenario file."""


class ShapeError(ValidationError):
    """Array does not match the grid it is paired with."""


class KernelError(ValidationError):
    """Kernel construction or certification preconditions violated."""


class DomainError(ValidationError):
    """Field violates a positivity requirement (logarithms would be undefined)."""


class NumericalError(RuntimeError):
    """A numerical procedure failed to converge or produce a usable result."""


class StepFailure(NumericalError):
    """A time step was rejected more often than the halving budget allows."""


class BalancingError(NumericalError):
    """Row/column balancing did not reach tolerance within the iteration cap."""
