"""Exception types shared across the package."""


class NormCoverError(Exception):
    """Base class for all package errors."""


class InvalidInstanceError(NormCoverError):
    """Malformed problem data: bad exponent, bad index set, inconsistent header."""


class DomainError(NormCoverError):
    """Evaluation requested outside the function domain (e.g. negative entries)."""


class SingularGradientError(NormCoverError):
    """Gradient undefined: a zero coordinate inside a q > 1 norm group."""


class HeaderViolationError(NormCoverError):
    """A streamed constraint exceeds the declared sparsity/coefficient bounds.

    The declared bounds enter the update rates, so a violation invalidates any
    competitiveness certificate produced for the run.
    """


class IntegrationFailureError(NormCoverError):
    """The per-constraint integration exceeded its step budget."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class IterationBoundError(NormCoverError):
    """A separation loop exceeded its proven iteration bound (implementation bug)."""


class CertificateError(NormCoverError):
    """A runtime certificate assertion failed; carries the offending quantity."""


class InfeasibleError(NormCoverError):
    """The covering problem (or a routing/extraction subproblem) is infeasible."""


class UnreachableError(NormCoverError):
    """No path exists between the requested endpoints."""


class ScalingError(NormCoverError):
    """Rounding probabilities exceed one; the violation factor was mis-measured."""
