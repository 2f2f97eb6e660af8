"""Exception hierarchy shared by all modules."""


class MKdVError(Exception):
    """Base class for package errors."""


class DomainError(MKdVError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class PoleError(DomainError):
    """Evaluation requested at (or numerically on top of) a pole."""


class ConfigurationError(MKdVError, ValueError):
    """Inconsistent configuration: bad partition radius, invalid soliton data, CFL violation, ..."""


class NumericalError(MKdVError, RuntimeError):
    """A numerical procedure failed to reach its tolerance."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})
