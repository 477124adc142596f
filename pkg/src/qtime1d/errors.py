"""Exception types shared across the package.

All of them derive from :class:`QTimeError` so the CLI can map any library
failure to exit status 2 with a one-line diagnostic.
"""


class QTimeError(Exception):
    """Base class for every error raised by qtime1d."""


class DomainError(QTimeError, ValueError):
    """An argument lies outside the domain where a quantity is defined."""


class ParseError(QTimeError, ValueError):
    """A potential or pole-set document is malformed."""

    def __init__(self, message, index=None, item="segment"):
        if index is not None:
            message = f"{message} ({item} index {index})"
        super().__init__(message)
        self.index = index


class ResolutionError(QTimeError, RuntimeError):
    """A grid, window or contour is too coarse to resolve the requested value."""


class ConfigurationError(QTimeError, ValueError):
    """Numerical settings violate an accuracy guard."""


class ContourError(QTimeError, ValueError):
    """A pole sits too close to an integration contour to be handled reliably."""


class RangeError(QTimeError, ArithmeticError):
    """A truncated series is used outside its convergence range."""
