"""Exception types shared across the package."""


class GaugecraftError(Exception):
    """Base class for all package errors."""


class ConfigError(GaugecraftError):
    """Invalid run configuration or scenario document (CLI exit code 2)."""


class ConvergenceError(GaugecraftError):
    """A numerical procedure failed to converge (CLI exit code 3)."""


class InvariantViolation(GaugecraftError):
    """An internal consistency check failed (CLI exit code 4)."""
