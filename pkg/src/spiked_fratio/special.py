"""Confluent hypergeometric 1F1: a high-precision series and a large-parameter
uniform approximation built on a single saddle point.

The approximation targets ``1F1(n u + 1, n v + 1; n zeta)`` with ``u > v > 0``
and ``n`` large.  Values are carried as ``(log|value|, phase)`` pairs because
the magnitudes involved routinely exceed the double-precision range.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Literal

import mpmath
import numpy as np
from scipy.special import gammaln

from .core import ModelDims
from .errors import BranchError, ConfigurationError, DomainError, RangeError, SingularityError

Branch = Literal["principal", "other", "auto"]


@dataclass(frozen=True)
class LogValue:
    """A complex number stored as ``exp(log_abs + i phase)``."""

    log_abs: float
    phase: float

    @classmethod
    def from_complex_log(cls, value: complex) -> "LogValue":
        return cls(float(value.real), _wrap(float(value.imag)))

    @classmethod
    def from_complex(cls, value: complex) -> "LogValue":
        if value == 0:
            return cls(-math.inf, 0.0)
        return cls(math.log(abs(value)), cmath.phase(value))

    def to_complex(self) -> complex:
        return cmath.exp(complex(self.log_abs, self.phase))

    def __mul__(self, other: "LogValue") -> "LogValue":
        return LogValue(self.log_abs + other.log_abs, _wrap(self.phase + other.phase))

    def __truediv__(self, other: "LogValue") -> "LogValue":
        return LogValue(self.log_abs - other.log_abs, _wrap(self.phase - other.phase))


def _wrap(phase: float) -> float:
    """Wrap an angle to ``(-pi, pi]``."""
    wrapped = math.remainder(phase, 2 * math.pi)
    return math.pi if wrapped == -math.pi else wrapped


@dataclass(frozen=True)
class KummerParams:
    a: complex
    b: complex
    z: complex

    def __post_init__(self) -> None:
        b = complex(self.b)
        if b.imag == 0 and b.real <= 0 and b.real == round(b.real):
            raise DomainError(f"b={self.b} is a non-positive integer")


_SERIES_MAX_PARAM = 500.0
_SERIES_MAX_Z = 50.0
_SERIES_MAX_POSITIVE_Z = 2.0e4


def hyp1f1_series(params: KummerParams, digits: int = 50) -> LogValue:
    """Kummer's series summed term by term in ``digits``-digit arithmetic.

    Accurate to far better than 1e-10 relative inside the declared range:
    ``|a|, |b| <= 500`` and ``|z| <= 50``.  When ``a, b, z`` are all real and
    non-negative no cancellation can occur, so ``z`` up to ``2e4`` is accepted.
    """
    a, b, z = complex(params.a), complex(params.b), complex(params.z)
    if max(abs(a), abs(b)) > _SERIES_MAX_PARAM:
        raise RangeError(f"|a| or |b| above {_SERIES_MAX_PARAM}")
    positive = a.imag == b.imag == z.imag == 0 and a.real >= 0 and b.real > 0 and z.real >= 0
    limit = _SERIES_MAX_POSITIVE_Z if positive else _SERIES_MAX_Z
    if abs(z) > limit:
        raise RangeError(f"|z|={abs(z):.3g} above the series range {limit:g}")
    # Guard digits cover the largest intermediate term relative to the sum.
    guard = 10 if positive else 10 + int(abs(z) / math.log(10)) + 1
    with mpmath.workdps(digits + guard):
        am, bm, zm = mpmath.mpc(a), mpmath.mpc(b), mpmath.mpc(z)
        term = mpmath.mpc(1)
        total = mpmath.mpc(1)
        tiny = mpmath.mpf(10) ** (-(digits + guard))
        k = 0
        while True:
            term = term * (am + k) / (bm + k) * zm / (k + 1)
            total += term
            k += 1
            if term == 0:
                break
            if k > abs(z) and abs(term) <= tiny * abs(total):
                break
            if k > 10 * (abs(z) + abs(a) + 100):
                raise RangeError("series failed to converge within the term budget")
        if total == 0:
            return LogValue(-math.inf, 0.0)
        return LogValue(float(mpmath.log(abs(total))), float(mpmath.arg(total)))


@dataclass(frozen=True)
class UniformAsymInput:
    """Parameters of ``1F1(nA u + 1, nA v + 1; nA zeta)``."""

    u: float
    v: float
    nA: int
    zeta: complex

    def __post_init__(self) -> None:
        if not self.u > self.v > 0:
            raise ConfigurationError(f"need u > v > 0, got u={self.u}, v={self.v}")
        if self.nA < 1:
            raise ConfigurationError("nA must be positive")

    @classmethod
    def from_dims(cls, dims: ModelDims, zeta: complex) -> "UniformAsymInput":
        u, v = kummer_uv(dims)
        return cls(u, v, dims.n_a, zeta)


def kummer_uv(dims: ModelDims) -> tuple[float, float]:
    """``u = (n_A + n2 - p)/(2 n_A)`` and ``v = (n_A - p)/(2 n_A)``."""
    n_a = dims.n_a
    return (n_a + dims.n2 - dims.p) / (2 * n_a), (n_a - dims.p) / (2 * n_a)


@dataclass(frozen=True)
class SaddleState:
    z_plus: complex
    phi: complex
    psi: complex
    log_c: float


def log_gamma_ratio(u: float, v: float, n_a: int) -> float:
    """``log[Gamma(nA v + 1) Gamma(nA (u - v) + 1) / Gamma(nA u + 1)]``."""
    return float(gammaln(n_a * v + 1) + gammaln(n_a * (u - v) + 1) - gammaln(n_a * u + 1))


def branch_switch(u: float, v: float) -> float:
    """Real part of ``zeta`` below which the non-principal root is used."""
    return -2 * u + v


def _zplus_array(zeta: np.ndarray, u: float, v: float, sign: np.ndarray | float) -> np.ndarray:
    disc = (zeta - v) ** 2 + 4 * u * zeta
    scale = np.maximum(np.abs(zeta - v) ** 2 + np.abs(4 * u * zeta), 1e-300)
    if np.any(np.abs(disc) <= 1e-14 * scale):
        raise SingularityError("zeta sits on a branch point of the saddle equation")
    return 0.5 * (zeta - v + sign * np.sqrt(disc))


def zplus(zeta: complex, u: float, v: float, branch: Branch = "auto") -> complex:
    """Saddle point: root of ``z^2 + (v - zeta) z - u zeta = 0``.

    ``"principal"`` takes the principal square root, ``"other"`` its negative,
    and ``"auto"`` applies the rule that switches to the other root when
    ``Re zeta < -2u + v``.
    """
    zeta = complex(zeta)
    if branch == "auto":
        branch = "principal" if zeta.real >= branch_switch(u, v) else "other"
    if branch not in ("principal", "other"):
        raise ConfigurationError(f"unknown branch {branch!r}")
    sign = 1.0 if branch == "principal" else -1.0
    out = complex(_zplus_array(np.asarray([zeta], dtype=complex), u, v, sign)[0])
    return out.real + 0j if zeta.imag == 0 and abs(out.imag) < 1e-300 else out


def zeta_from_zplus(z_plus, u: float, v: float):
    """Inverse map ``zeta = z (z + v) / (z + u)``."""
    return z_plus * (z_plus + v) / (z_plus + u)


def dzplus_dzeta(z_plus, u: float, v: float):
    return (u + z_plus) ** 2 / (u * v + 2 * u * z_plus + z_plus**2)


def _phi(z_plus, u: float, v: float):
    return (u - v) * math.log(u - v) + v * np.log(z_plus + v) - u * np.log(z_plus + u) - z_plus


def _root_factor(z_plus, zeta, u: float, v: float):
    """``sqrt(u/z^2 - (u - v)/(z - zeta)^2)`` on the branch where ``sqrt(-1) = -i``."""
    w = u / z_plus**2 - (u - v) / (z_plus - zeta) ** 2
    return -1j * np.sqrt(-w)


def _track_sign(values: np.ndarray) -> np.ndarray:
    """Flip signs along a path so consecutive values never jump to their negatives."""
    out = values.copy()
    for i in range(1, out.size):
        if abs(out[i] + out[i - 1]) < abs(out[i] - out[i - 1]):
            out[i] = -out[i]
    return out


def _check_zeta(zeta: np.ndarray, u: float, v: float, allow_left: bool) -> None:
    if np.any(np.abs(zeta) < 1e-12):
        raise DomainError("zeta too close to zero")
    if np.any((zeta.imag == 0) & (zeta.real < 0)):
        raise DomainError("zeta lies on the negative real axis")
    if not allow_left and np.any(zeta.real < branch_switch(u, v)):
        raise DomainError("zeta lies outside the uniformity region Re zeta >= -2u + v")


def phi_psi(inp: UniformAsymInput, branch: Branch = "auto") -> SaddleState:
    """Saddle point, exponent ``phi`` and amplitude ``psi`` at a single ``zeta``."""
    zeta = np.asarray([complex(inp.zeta)])
    _check_zeta(zeta, inp.u, inp.v, allow_left=True)
    z = np.asarray([zplus(complex(inp.zeta), inp.u, inp.v, branch)])
    psi = 1.0 / ((z - zeta) * _root_factor(z, zeta, inp.u, inp.v))
    return SaddleState(
        z_plus=complex(z[0]),
        phi=complex(_phi(z, inp.u, inp.v)[0]),
        psi=complex(psi[0]),
        log_c=log_gamma_ratio(inp.u, inp.v, inp.nA),
    )


def log_hyp1f1_uniform_path(
    zeta: np.ndarray,
    u: float,
    v: float,
    n_a: int,
    z_plus: np.ndarray | None = None,
    anchor: complex | None = None,
) -> np.ndarray:
    """Complex log of the uniform approximation at every point of a path.

    The amplitude's square-root sign is tracked continuously along the path,
    starting from the fixed branch at the first node (or at ``anchor`` when
    given, which must be a point on the same continuous path).  ``z_plus`` may
    be supplied when the path is parameterized by the saddle point itself.
    """
    zeta = np.asarray(zeta, dtype=complex)
    _check_zeta(zeta, u, v, allow_left=z_plus is not None)
    if z_plus is None:
        z_plus = _zplus_array(zeta, u, v, 1.0)
    root = _root_factor(z_plus, zeta, u, v)
    if anchor is not None:
        z0 = zplus(anchor, u, v)
        ref = complex(_root_factor(np.asarray([z0]), np.asarray([anchor]), u, v)[0])
        if abs(root[0] + ref) < abs(root[0] - ref):
            root = -root
    root = _track_sign(root)
    log_psi = -np.log((z_plus - zeta) * root)
    phi = _phi(z_plus, u, v)
    _check_continuity(np.angle(z_plus + v), "saddle log")
    _check_continuity(np.angle(z_plus + u), "saddle log")
    return (
        log_gamma_ratio(u, v, n_a)
        - n_a * phi
        + log_psi
        - 0.5 * math.log(2 * math.pi * n_a)
        - 0.5j * math.pi
    )


def _check_continuity(phase: np.ndarray, what: str, limit: float = math.pi) -> None:
    if phase.size > 1 and np.max(np.abs(np.diff(phase))) > limit:
        raise BranchError(f"{what} phase jumps by more than {limit:.3g} between nodes")


def hyp1f1_uniform(inp: UniformAsymInput) -> LogValue:
    """Large-``nA`` uniform approximation of ``1F1(nA u + 1, nA v + 1; nA zeta)``.

    ``C exp(-nA phi) psi / (sqrt(2 pi nA) i)``, assembled in log scale.
    Valid for ``zeta`` away from zero and the negative axis with
    ``Re zeta >= -2u + v``.
    """
    zeta = complex(inp.zeta)
    _check_zeta(np.asarray([zeta]), inp.u, inp.v, allow_left=False)
    state = phi_psi(inp, "principal")
    log_val = (
        state.log_c
        - inp.nA * state.phi
        + cmath.log(state.psi)
        - 0.5 * math.log(2 * math.pi * inp.nA)
        - 0.5j * math.pi
    )
    return LogValue.from_complex_log(complex(log_val))
