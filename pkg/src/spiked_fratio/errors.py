"""Exception hierarchy shared by every layer of the package."""

from __future__ import annotations


class SpikedFError(Exception):
    """Base class for all package errors."""


class ConfigurationError(SpikedFError, ValueError):
    """Invalid dimensions, spikes, tolerances or experiment settings."""


class DomainError(SpikedFError, ValueError):
    """An argument lies outside the region where a formula is defined."""


class SeparationError(DomainError):
    """A spike or observed eigenvalue sits at or below the detection edge."""


class SingularityError(DomainError):
    """Evaluation hits a branch point or a coalescing saddle."""


class RangeError(DomainError):
    """Arguments fall outside the declared accuracy range of a routine."""


class NumericalError(SpikedFError, ArithmeticError):
    """A linear-algebra or root-finding step failed to produce a valid answer."""


class GeometryError(SpikedFError, ValueError):
    """Contour parameters do not separate the spectrum as required."""


class BranchError(NumericalError):
    """Phase tracking along a path detected a discontinuity."""
