"""Exception hierarchy shared by all modules."""


class SchedkitError(Exception):
    """Base class."""


class ParameterError(SchedkitError, ValueError):
    """Invalid model parameters (e.g. non-positive relaxation rate)."""


class DomainError(SchedkitError, ValueError):
    """Argument outside the domain of an analytic formula."""


class ScheduleValidationError(SchedkitError, ValueError):
    """A schedule or schedule file violates its invariants."""

    def __init__(self, message, indices=None):
        super().__init__(message)
        self.indices = list(indices) if indices is not None else []


class SingularTimeError(SchedkitError, ValueError):
    """``alpha_bar == 0`` maps to an infinite observation time."""


class NonIntegrableError(SchedkitError, ValueError):
    """A design density failed to integrate to a finite value."""


class InversionError(SchedkitError, ValueError):
    """Numeric CDF inversion failed (non-monotone CDF, no bracket)."""
