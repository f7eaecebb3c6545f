"""Exception hierarchy shared by all modules."""


class ChainError(Exception):
    """Base class for every error raised by chiralchain."""


class DomainError(ChainError, ValueError):
    """An argument lies outside the domain of the operation."""


class CriticalPointError(ChainError):
    """The coupling matrix is singular or too ill-conditioned to invert.

    Attributes
    ----------
    condition : float
        Condition-number estimate that triggered the error.
    """

    def __init__(self, message, condition=float("inf")):
        super().__init__(message)
        self.condition = condition


class IntegrationError(ChainError, RuntimeError):
    """The time integrator failed (step-size underflow, trace drift, ...)."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class TraversalTimeout(ChainError, RuntimeError):
    """The far-end population did not reach its threshold before t_max."""


class InsufficientDataError(ChainError, ValueError):
    """A time window is too short (or too flat) to resolve an oscillation."""


class CapabilityError(ChainError):
    """The request exceeds what the method can handle (e.g. oracle size)."""
