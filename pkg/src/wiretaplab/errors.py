"""Exception types raised across the package."""

from __future__ import annotations


class WiretapLabError(Exception):
    """Base class for all package errors."""


class InvalidKey(WiretapLabError, ValueError):
    pass


class InvalidPolynomial(WiretapLabError, ValueError):
    pass


class UnsupportedDegree(WiretapLabError, ValueError):
    pass


class SingularError(WiretapLabError, ArithmeticError):
    """The selected positions do not give an invertible system over GF(2)."""


class RankDeficient(WiretapLabError, ArithmeticError):
    pass


class InvalidProbability(WiretapLabError, ValueError):
    pass


class DimensionError(WiretapLabError, ValueError):
    pass


class InvalidArity(WiretapLabError, ValueError):
    pass


class InsufficientData(WiretapLabError, ValueError):
    pass


class ConfigError(WiretapLabError, ValueError):
    """Bad experiment configuration; ``field`` names the offending key."""

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class InvariantViolation(WiretapLabError, AssertionError):
    pass
