"""Exception hierarchy shared across the toolkit."""


class RriqaError(Exception):
    """Base class for all toolkit errors."""


class DomainError(RriqaError, ValueError):
    """Argument outside a function's mathematical domain."""


class ConvergenceError(RriqaError, RuntimeError):
    """An iterative procedure exhausted its iteration budget.

    Carries the last iterate in ``last`` when one is available.
    """

    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last


class ContractError(RriqaError, ValueError):
    """Caller violated an interface precondition (wrong space, shape, ...)."""


class ConfigurationError(RriqaError, ValueError):
    """Invalid configuration, e.g. an image too small for the pyramid."""


class EstimationError(RriqaError, RuntimeError):
    """Parameter estimation cannot proceed (singular or degenerate data)."""


class DecodeError(RriqaError, ValueError):
    """Malformed byte stream (image container or feature payload)."""


class DatasetError(RriqaError, ValueError):
    """Dataset ingestion failure; message lists every offending entry."""


class DegenerateFitError(RriqaError, RuntimeError):
    """Regression or correlation is undefined for constant input."""
