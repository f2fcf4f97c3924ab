"""Exception taxonomy shared by all degenbranch modules."""


class DegenBranchError(Exception):
    """Base class for all errors raised by this package."""


class ParameterDomainError(DegenBranchError, ValueError):
    """An argument lies outside the domain an operation is defined on."""


class UnsupportedRegimeError(DegenBranchError, ValueError):
    """The anisotropy index falls outside the regime an operation supports."""


class DivergenceError(DegenBranchError, ValueError):
    """The requested integral diverges for the given stability indices."""


class NumericAccuracyError(DegenBranchError, ArithmeticError):
    """A quadrature or cross-check failed to reach its accuracy target.

    Carries the achieved error bound so callers can decide whether the
    result is still usable.
    """

    def __init__(self, message, achieved_error=None):
        super().__init__(message)
        self.achieved_error = achieved_error


class PopulationExplosionError(DegenBranchError, RuntimeError):
    """Live-particle count exceeded the configured safety cap."""


class ConfigError(DegenBranchError, ValueError):
    """A configuration document failed schema validation.

    ``path`` is a dotted JSON path naming the offending field.
    """

    def __init__(self, path, message):
        super().__init__(f"config error at '{path}': {message}")
        self.path = path
