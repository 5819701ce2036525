"""Exception hierarchy shared by all rlx modules.

The CLI maps these onto exit codes: validation-type failures exit with 1,
convergence/degeneracy failures with 2.
"""


class RlxError(Exception):
    """Base class for all library errors."""


class ValidationError(RlxError):
    """Input data violates a documented invariant."""


class DomainError(RlxError):
    """Evaluation requested outside an operation's domain."""


class ResourceLimitError(RlxError):
    """Group enumeration would exceed the configured element cap."""


class ConvergenceError(RlxError):
    """A truncated series or extrapolation did not settle."""


class DegenerateKernelError(ConvergenceError):
    """Numerical kernel of the period matrix is not one-dimensional."""


class NonPositiveKernelError(ConvergenceError):
    """Kernel vector of the period matrix is not strictly positive."""


class NotSplittableError(ValidationError):
    """Requested convex split of a measure that is already extreme."""


class PoleProximityWarning(UserWarning):
    """Evaluation point is numerically on top of a pole."""
