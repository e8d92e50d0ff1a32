"""
Exceptions raised by acmcli.

Verification operations report failures in a Report instead of raising; the
exceptions below cover malformed input only.
"""
from typing import Optional


class AcmError(Exception):
    """Base class for all acmcli errors."""


class InvalidDataError(AcmError):
    """A KrajewskiData (or other structural) invariant does not hold."""


class DimensionMismatchError(AcmError):
    """Matrix or lattice sizes do not agree."""


class NotUnitaryError(AcmError):
    """A group element failed the unitarity check."""

    def __init__(self, residual: float, what: str = "element") -> None:
        super().__init__(f"{what} is not unitary (residual {residual:.3e})")
        self.residual = residual


class NotSelfAdjointError(AcmError):
    """A one-form or field failed the Hermiticity check."""

    def __init__(self, residual: float, what: str = "operator") -> None:
        super().__init__(f"{what} is not self-adjoint (residual {residual:.3e})")
        self.residual = residual


class MissingSampleError(AcmError):
    """Required Čech samples (triple overlaps, derivatives) are absent."""


class NerveMismatchError(AcmError):
    """Two atlases or sample sets disagree on overlaps or sample points."""


class EigensolverError(AcmError):
    """The Hermitian eigensolver did not converge."""


class SpecParseError(AcmError):
    """An input file could not be parsed."""

    def __init__(self, path: str, field: str, message: str, line: Optional[int] = None) -> None:
        self.path = path
        self.field = field
        self.message = message
        self.line = line
        location = f"{path}:{line}" if line is not None else path
        super().__init__(f"{location}: {field}: {message}")


class ConfigError(AcmError):
    """A flag or ACMCLI_* environment value is malformed."""
