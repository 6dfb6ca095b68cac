"""Exception hierarchy for the ECG electrolyte pipeline.

The CLI maps every `EcgElectrolyteError` to exit code 1 (user error) and any
other exception to exit code 2 (internal error).
"""

from __future__ import annotations


class EcgElectrolyteError(Exception):
    """Root of all errors raised deliberately by this package."""


class InvalidInputError(EcgElectrolyteError, ValueError):
    """An operation was called with inputs violating its preconditions."""


class FilterDesignError(EcgElectrolyteError):
    """A designed IIR filter is unstable or produced non-finite output."""


class NonFiniteError(EcgElectrolyteError, FloatingPointError):
    """A NaN or infinity appeared where finite values are required."""


class ConfigError(EcgElectrolyteError, ValueError):
    """Configuration is missing a key or holds an invalid value."""


class CheckpointError(EcgElectrolyteError):
    """A checkpoint container is malformed or incompatible with the request."""


__all__ = [
    "CheckpointError",
    "ConfigError",
    "EcgElectrolyteError",
    "FilterDesignError",
    "InvalidInputError",
    "NonFiniteError",
]
