"""Exception taxonomy shared across the package.

Exit-code mapping used by the CLI: ConfigurationError -> 2,
NumericalError -> 3, AccuracyError -> 4.
"""

from __future__ import annotations


class RotbecError(Exception):
    """Base class for all package errors."""


class ConfigurationError(RotbecError):
    """Invalid input, unusable parameters, or a refused parameter regime."""


class RegimeError(ConfigurationError):
    """Parameters outside the regime where a ground state exists.

    Raised when a >= a_star or omega >= omega_star and the caller did not
    explicitly request a nonexistence probe.
    """


class NumericalError(RotbecError):
    """A solver failed to converge or produced non-finite values."""


class AccuracyError(RotbecError):
    """A result violated an accuracy gate (strict mode)."""
