"""Limit theory for the spiked F-ratio: edges, threshold, spike limits, variances.

Most quantities depend only on the aspect ratios ``c1 = p/n1`` and
``c2 = p/n2``.  Close to the detection threshold the closed forms are
re-evaluated with mpmath to avoid cancellation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy import integrate

from .core import ModelDims, Setting
from .errors import ConfigurationError, DomainError, SeparationError

_NEAR_THRESHOLD = 1e-4


def _check_ratios(c1: float, c2: float, allow_c2_zero: bool = False) -> tuple[float, float]:
    c1 = float(c1)
    c2 = float(c2)
    lo_ok = c2 >= 0 if allow_c2_zero else c2 > 0
    if not (0 < c1 < 1 and lo_ok and c2 < 1):
        raise ConfigurationError(f"aspect ratios must lie in (0, 1), got c1={c1}, c2={c2}")
    return c1, c2


@dataclass(frozen=True)
class AspectRatios:
    """Aspect ratios with the derived edge and threshold quantities."""

    c1: float
    c2: float

    def __post_init__(self) -> None:
        c1, c2 = _check_ratios(self.c1, self.c2, allow_c2_zero=True)
        object.__setattr__(self, "c1", c1)
        object.__setattr__(self, "c2", c2)

    @classmethod
    def from_dims(cls, dims: ModelDims) -> "AspectRatios":
        return cls(dims.c1, dims.c2)

    @property
    def r(self) -> float:
        return math.sqrt(self.c1 + self.c2 - self.c1 * self.c2)

    @property
    def b_minus(self) -> float:
        return ((1 - self.r) / (1 - self.c2)) ** 2

    @property
    def b_plus(self) -> float:
        return ((1 + self.r) / (1 - self.c2)) ** 2

    @property
    def h_bar(self) -> float:
        return (self.c2 + self.r) / (1 - self.c2)


def support_edges(c1: float, c2: float) -> tuple[float, float, float]:
    """Lower edge, upper edge and ``r`` of the limiting F-ratio spectrum.

    ``c2 = 0`` is accepted and gives the Marchenko-Pastur edges.
    """
    ar = AspectRatios(c1, c2)
    return ar.b_minus, ar.b_plus, ar.r


def phase_threshold(c1: float, c2: float) -> float:
    """Smallest spike whose top eigenvalue separates from the bulk."""
    return AspectRatios(c1, c2).h_bar


def _spike_limit_expr(h, c1, c2):
    return (h + c1) * (h + 1) / (h - c2 * (h + 1))


def _variance_expr(h, c1, c2, setting: Setting):
    if setting is Setting.COVARIANCE:
        lead = c1 + c2 - c1 * c2
    else:
        lead = c1 + c2 - c1 * (h * h - c1) / (1 + h) ** 2
    core = h * h - c2 * (h + 1) ** 2 - c1
    return 2 * lead * h * h * (h + 1) ** 2 * core / (c2 - h + c2 * h) ** 4


def _evaluate(expr, h: float, c1: float, c2: float, *extra) -> float:
    """Evaluate ``expr`` in double precision, or at 50 digits near the threshold."""
    h_bar = phase_threshold(c1, c2) if c2 > 0 else math.sqrt(c1)
    if abs(h - h_bar) < _NEAR_THRESHOLD:
        with mpmath.workdps(50):
            return float(expr(mpmath.mpf(h), mpmath.mpf(c1), mpmath.mpf(c2), *extra))
    return float(expr(h, c1, c2, *extra))


def _require_supercritical(h: float, c1: float, c2: float) -> float:
    h = float(h)
    h_bar = AspectRatios(c1, c2).h_bar
    if not h > h_bar:
        raise SeparationError(
            f"sub-critical spike has no separated limit: h={h} <= threshold {h_bar}"
        )
    return h


def spike_limit(h: float, c1: float, c2: float) -> float:
    """Almost-sure limit of the eigenvalue produced by a super-critical spike ``h``."""
    c1, c2 = _check_ratios(c1, c2, allow_c2_zero=True)
    h = _require_supercritical(h, c1, c2)
    return _evaluate(_spike_limit_expr, h, c1, c2)


def spike_centering(h: float, dims: ModelDims) -> float:
    """Finite-p centering: the spike limit with ``c1, c2`` replaced by ``p/n1, p/n2``."""
    h = float(h)
    c1, c2 = dims.c1, dims.c2
    if h - c2 * (h + 1) <= 0:
        raise DomainError(f"h={h} is at or below the pole of the centering map for c2={c2}")
    _require_supercritical(h, c1, c2)
    return _evaluate(_spike_limit_expr, h, c1, c2)


def spike_centering_derivative(h: float, dims: ModelDims) -> float:
    """Derivative of :func:`spike_centering` with respect to ``h``."""
    c1, c2 = dims.c1, dims.c2
    den = h - c2 * (h + 1)
    num = (h + c1) * (h + 1)
    dnum = 2 * h + 1 + c1
    dden = 1 - c2
    return (dnum * den - num * dden) / den**2


def asymptotic_variance(h: float, c1: float, c2: float, setting: Setting | str | int) -> float:
    """Limiting variance of ``sqrt(p) (lambda_1 - x_p)`` for a super-critical spike."""
    setting = Setting.parse(setting)
    c1, c2 = _check_ratios(c1, c2, allow_c2_zero=True)
    h = _require_supercritical(h, c1, c2)
    return _evaluate(_variance_expr, h, c1, c2, setting)


@dataclass(frozen=True)
class StieltjesPoint:
    """Value, z-derivative and x-derivative of ``m_x(0)``."""

    x: float
    m0: float
    mprime0: float
    dm0_dx: float


def _mx0(x: float, c1: float, c2: float) -> float:
    r2 = c1 + c2 - c1 * c2
    lin = x * (1 - c2) + c1 - 1
    disc = lin * lin - 4 * x * r2
    if disc < 0:
        raise DomainError(f"x={x} lies inside the bulk; no real solution")
    # Smaller-magnitude root, written to avoid cancellation.
    return -2.0 / (lin + math.sqrt(disc))


def stieltjes_mx0(x: float, c1: float, c2: float) -> StieltjesPoint:
    """``m_x(0)`` with its derivatives in ``z`` and ``x``.

    ``m_x(0)`` is the small root of ``x r^2 m^2 + (x(1-c2) + c1 - 1) m + 1 = 0``,
    the form the fixed-point equation takes at ``z = 0``.
    """
    c1, c2 = _check_ratios(c1, c2)
    x = float(x)
    b_plus = AspectRatios(c1, c2).b_plus
    if not x > b_plus:
        raise DomainError(f"x={x} must exceed the upper edge {b_plus}")
    m = _mx0(x, c1, c2)
    resolvent = 1 - c2 * x * m
    curvature = 1 / m**2 - c2 * x * x / resolvent**2 - c1 / (1 + c1 * m) ** 2
    mprime = 1 / curvature
    return StieltjesPoint(x=x, m0=m, mprime0=mprime, dm0_dx=mprime / resolvent**2)


def stieltjes_edge_value(c1: float, c2: float) -> float:
    """Limit of ``m_x(0)`` as ``x`` decreases to the upper edge."""
    ar = AspectRatios(*_check_ratios(c1, c2))
    return (ar.c2 - 1) / ((ar.r + 1) * ar.r)


def wachter_pdf(lam, c1: float, c2: float):
    """Density of the limiting spectral law of the F-ratio (vectorized)."""
    ar = AspectRatios(c1, c2)
    lam_arr = np.asarray(lam, dtype=float)
    inside = (lam_arr > ar.b_minus) & (lam_arr < ar.b_plus)
    safe = np.where(inside, lam_arr, 0.5 * (ar.b_minus + ar.b_plus))
    dens = (1 - ar.c2) / (2 * np.pi) * np.sqrt((ar.b_plus - safe) * (safe - ar.b_minus))
    dens = dens / (safe * (ar.c1 + ar.c2 * safe))
    out = np.where(inside, dens, 0.0)
    return float(out) if np.ndim(lam) == 0 else out


@dataclass(frozen=True)
class WachterTransform:
    x: float
    m: float


def _wachter_integrand(theta: float, ar: AspectRatios, offset: float | None) -> float:
    """Angle-variable integrand: the density, or ``density / (lambda - x)`` with
    ``x = b+ + offset``.  ``offset = 0`` gives the edge limit without 0/0."""
    width = ar.b_plus - ar.b_minus
    s, c = math.sin(theta), math.cos(theta)
    lam = ar.b_minus + width * s * s
    base = (1 - ar.c2) / math.pi * width * s * s / (lam * (ar.c1 + ar.c2 * lam))
    if offset is None:
        return base * width * c * c
    if offset == 0:
        return -base
    return -base * width * c * c / (width * c * c + offset)


def _angle_quad(fn) -> float:
    val, _ = integrate.quad(fn, 0.0, math.pi / 2, epsabs=1e-14, epsrel=1e-12, limit=200)
    return val


def wachter_mass(c1: float, c2: float) -> float:
    """Total mass of :func:`wachter_pdf`, by quadrature in the angle variable."""
    ar = AspectRatios(c1, c2)
    return _angle_quad(lambda t: _wachter_integrand(t, ar, None))


def stieltjes_wachter(x: float, c1: float, c2: float) -> WachterTransform:
    """``m(x) = integral of 1/(lambda - x)`` against the limiting law, for ``x > b+``.

    The substitution ``lambda = b- + (b+ - b-) sin^2 theta`` removes the
    square-root endpoint behaviour so plain adaptive quadrature converges fast.
    """
    ar = AspectRatios(*_check_ratios(c1, c2))
    x = float(x)
    if not x > ar.b_plus:
        raise DomainError(f"x={x} must exceed the upper edge {ar.b_plus}")
    offset = x - ar.b_plus
    return WachterTransform(x=x, m=_angle_quad(lambda t: _wachter_integrand(t, ar, offset)))


def stieltjes_wachter_edge(c1: float, c2: float) -> float:
    """Limit of :func:`stieltjes_wachter` as ``x`` decreases to ``b+``."""
    ar = AspectRatios(*_check_ratios(c1, c2))
    return _angle_quad(lambda t: _wachter_integrand(t, ar, 0.0))
