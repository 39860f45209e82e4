"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class NessError(Exception):
    """Base class for every error raised by nessvqa."""


class NotHermitian(NessError, ValueError):
    pass


class NotPSD(NessError, ValueError):
    pass


class DimensionMismatch(NessError, ValueError):
    pass


class InvalidState(NessError, ValueError):
    """A matrix failed the density-matrix checks (Hermitian, unit trace, PSD)."""


class ParamLengthMismatch(NessError, ValueError):
    pass


class TooLarge(NessError, ValueError):
    """Dense construction would exceed the size guard."""


class DegenerateSteadySpace(NessError):
    def __init__(self, dim: int):
        super().__init__(f"steady-state space is degenerate (dimension {dim})")
        self.dim = dim


class NoSteadyState(NessError):
    pass


class BadParams(NessError, ValueError):
    def __init__(self, message: str, field: str | None = None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field


class TooFewShadows(NessError, ValueError):
    pass


class EmptyShadowSet(NessError, ValueError):
    pass


class BadTolerance(NessError, ValueError):
    pass


class WrongFrequencySet(NessError, ValueError):
    pass


class SingularSystem(NessError, ArithmeticError):
    pass


class ConfigError(NessError, ValueError):
    pass
