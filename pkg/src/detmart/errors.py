"""Exception types shared across the package."""


class DetmartError(Exception):
    """Base class for all package errors."""


class DomainError(DetmartError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class NumericError(DetmartError, RuntimeError):
    """A numerical procedure failed to converge to its tolerance."""


class CapacityError(DetmartError, ValueError):
    """A request exceeds a documented enumeration or size bound."""
