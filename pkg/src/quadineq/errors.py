"""Exception types shared across the package."""


class QuadIneqError(Exception):
    """Base class for all library errors."""


class DomainError(QuadIneqError, ValueError):
    """An input lies outside the domain of an operation."""


class CapabilityError(QuadIneqError):
    """A transform lacks the derivative order an operation needs."""


class NumericError(QuadIneqError, ArithmeticError):
    """A numerical procedure failed to converge or stabilize."""


class ConstructionError(QuadIneqError, ValueError):
    """A parametrized configuration violates one of its constraints.

    ``index`` is the 1-based position of the violated constraint.
    """

    def __init__(self, message: str, index: int):
        super().__init__(message)
        self.index = index


class PreconditionError(QuadIneqError, ValueError):
    """An operation was called outside its stated precondition."""


class SearchError(QuadIneqError):
    """A search produced no usable candidate."""


class SamplingError(QuadIneqError):
    """Rejection sampling could not find enough admissible points."""


class ExperimentError(QuadIneqError):
    """Too many replications of an experiment failed."""
