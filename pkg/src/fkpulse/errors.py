"""Exception types shared across the package."""


class FkpulseError(Exception):
    """Base class for package errors."""


class ConfigurationError(FkpulseError):
    """Invalid configuration: bad file, bad key, or an unusable step plan."""


class InvariantViolation(FkpulseError):
    """A runtime invariant or bound/measurement contract failed."""
