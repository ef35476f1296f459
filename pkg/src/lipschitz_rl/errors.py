"""Exception types shared by all modules.

The CLI maps each family to its own exit code, so raise the most specific
class available.
"""


class LipschitzRLError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(LipschitzRLError, ValueError):
    """Invalid parameter or configuration value."""


class DomainError(LipschitzRLError, ValueError):
    """Input outside the mathematical domain of an operation."""


class DimensionError(DomainError):
    """Vectors of incompatible dimension."""


class InsufficientDataError(DomainError):
    """Not enough usable observations to run an operation."""


class IllPosedError(DomainError):
    """Sampled function is not Lipschitz (same point, different values)."""


class PreconditionError(DomainError):
    """A bound was requested outside the hypothesis that makes it valid."""


class DataError(LipschitzRLError, OSError):
    """Unreadable or malformed input file."""
