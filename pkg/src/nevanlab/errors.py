"""Exception types shared across the package."""


class NevanlabError(Exception):
    """Base class for all package errors."""


class DomainError(NevanlabError, ValueError):
    """A point lies outside the domain where a quantity is defined."""


class PoleError(DomainError):
    """Evaluation at a pole (for instance a weight at the base point)."""


class PreconditionError(NevanlabError, ValueError):
    """A mathematical hypothesis is not met (degenerate map, bad divisor, ...)."""


class UnsupportedOperation(NevanlabError, NotImplementedError):
    """The requested quantity is not available for this model."""


class ConfigError(NevanlabError, ValueError):
    """Malformed or inconsistent configuration."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConvergenceError(NevanlabError, RuntimeError):
    """A numerical procedure did not reach its tolerance."""
