"""Exception hierarchy shared by all modules.

The CLI maps each class to a process exit code, so new error kinds should
subclass one of these rather than a builtin directly.
"""


class CritsysError(Exception):
    """Base class for every error raised by the package."""

    exit_code = 1


class DomainError(CritsysError, ValueError):
    """An input lies outside the domain where an operation is defined."""

    exit_code = 2


class UnsupportedCase(DomainError):
    """A mathematically excluded case (e.g. the logarithmic decay regime)."""


class GeometryError(DomainError):
    """A surface is singular or a point is not on it."""


class AccuracyError(CritsysError, RuntimeError):
    """A numerical procedure failed to reach its accuracy target."""

    exit_code = 3


class SolverError(AccuracyError):
    """The shooting solver could not bracket or converge."""


class Refusal(CritsysError):
    """The hypotheses needed for a blow-up prediction are not satisfied."""

    exit_code = 4
