"""Exception hierarchy shared across the package.

Exit-code mapping used by the CLI: ParameterError/ConfigError -> 2,
NumericalError (and subclasses) -> 3, LoadError -> 4.
"""


class NeurosteerError(Exception):
    """Base class for all package errors."""


class ParameterError(NeurosteerError):
    """An argument violates a documented precondition."""


class ConfigError(NeurosteerError):
    """A configuration value is invalid or references something missing."""


class NumericalError(NeurosteerError):
    """A computation cannot proceed: degenerate, singular or ill-conditioned input."""


class DegenerateInputError(NumericalError):
    """Input carries no usable signal (all-zero, rank-deficient, single-class)."""


class LoadError(NeurosteerError):
    """A referenced file is missing or malformed."""
