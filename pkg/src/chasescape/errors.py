"""Exception types shared across the package."""


class ChasescapeError(Exception):
    """Base class for all package-specific errors."""


class InvalidParameterError(ChasescapeError, ValueError):
    """A parameter violates its documented constraint."""


class NoPathError(ChasescapeError):
    """Endpoints lie in different connected components of the street graph."""


class CalibrationError(ChasescapeError):
    """Intensity calibration did not converge within its budget."""

    def __init__(self, message: str, bracket=None):
        super().__init__(message)
        self.bracket = bracket


class ResampleSignal(ChasescapeError):
    """A realization cannot be rooted; the caller should redraw it."""


class MissingContactError(ChasescapeError, KeyError):
    """A device pair is outside the universe of a contact store."""


class ConfigError(ChasescapeError):
    """A configuration file is malformed or violates a constraint."""
