"""Local asymptotic normality of the top-eigenvalue experiment and the
inference procedures it yields.

Under a local alternative ``h = h0 + gamma / sqrt(p)`` the log-likelihood
ratio of the eigenvalues is asymptotically ``theta * Delta - theta^2 tau^2 / 2``
with ``Delta = sqrt(p) (lambda_1 - x_p(h0))`` and ``theta = gamma / omega``.
Centerings use the finite-p aspect ratios; ``tau^2`` and ``omega`` are the
limiting expressions evaluated at those same ratios.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.stats import norm

from .analytics import (
    AspectRatios,
    asymptotic_variance,
    spike_centering,
    spike_centering_derivative,
)
from .contour import to_lambda_tilde
from .core import EigenSample, ModelDims, Setting
from .errors import ConfigurationError, DomainError, SeparationError
from .special import kummer_uv


def local_scaling(h0: float, c1: float, c2: float, setting: Setting | str | int) -> float:
    """Scale ``omega`` linking the sqrt(p)-local deviation to the LAN parameter."""
    setting = Setting.parse(setting)
    ar = AspectRatios(c1, c2)
    if not h0 > ar.h_bar:
        raise SeparationError(f"h0={h0} is not above the threshold {ar.h_bar}")
    den = (h0 - c2 * (1 + h0)) ** 2
    if setting is Setting.COVARIANCE:
        return 2 * h0**2 * (1 + h0) ** 2 * ar.r**2 / den
    inner = c1 + c2 + c2 * h0**2 + c1**2 + 2 * c1 * h0 + 2 * c2 * h0
    return 2 * h0**2 * inner / den


@dataclass(frozen=True)
class LocalParam:
    """A local alternative expressed both as ``gamma`` and as ``theta = gamma/omega``."""

    h0: float
    gamma: float
    theta: float
    omega: float
    setting: Setting

    @classmethod
    def from_gamma(cls, h0: float, gamma: float, dims: ModelDims, setting) -> "LocalParam":
        setting = Setting.parse(setting)
        omega = local_scaling(h0, dims.c1, dims.c2, setting)
        return cls(h0, gamma, gamma / omega, omega, setting)

    @classmethod
    def from_theta(cls, h0: float, theta: float, dims: ModelDims, setting) -> "LocalParam":
        setting = Setting.parse(setting)
        omega = local_scaling(h0, dims.c1, dims.c2, setting)
        return cls(h0, theta * omega, theta, omega, setting)

    @classmethod
    def from_shift(cls, h0: float, shift: float, dims: ModelDims, setting) -> "LocalParam":
        """Alternative whose mean shift of ``Delta / tau`` equals ``shift``."""
        setting = Setting.parse(setting)
        tau = math.sqrt(asymptotic_variance(h0, dims.c1, dims.c2, setting))
        return cls.from_theta(h0, shift / tau, dims, setting)

    def spike(self, p: int) -> float:
        return self.h0 + self.gamma / math.sqrt(p)


@dataclass(frozen=True)
class LanStatistic:
    delta: float
    tau_sq: float
    log_lr_lan: float | None = None
    log_lr_exact: float | None = None
    theta: float | None = None


def lan_statistic(
    lambda1: float,
    h0: float,
    dims: ModelDims,
    setting: Setting | str | int,
    theta: float | None = None,
) -> LanStatistic:
    """Centered top eigenvalue ``Delta``, its limiting variance and, when
    ``theta`` is given, the quadratic log-likelihood ratio."""
    setting = Setting.parse(setting)
    delta = math.sqrt(dims.p) * (float(lambda1) - spike_centering(h0, dims))
    tau_sq = asymptotic_variance(h0, dims.c1, dims.c2, setting)
    log_lr = None if theta is None else theta * delta - theta**2 * tau_sq / 2
    return LanStatistic(delta, tau_sq, log_lr, None, theta)


def _local_spike(gamma: float, h0: float, dims: ModelDims) -> float:
    """Alternative spike; the null must be super-critical, the alternative positive."""
    hp = h0 + gamma / math.sqrt(dims.p)
    ar = AspectRatios.from_dims(dims)
    if not h0 > ar.h_bar:
        raise SeparationError(f"null spike {h0} is not above the threshold {ar.h_bar}")
    if not hp > 0:
        raise DomainError(f"alternative spike {hp} is not positive")
    return hp


def loglr_closed_s1(gamma: float, lambda1: float, h0: float, dims: ModelDims) -> float:
    """Covariance-spike log-likelihood ratio with the contour integral replaced
    by its Laplace approximation."""
    hp = _local_spike(gamma, h0, dims)
    if gamma == 0:
        return 0.0
    p, n1 = dims.p, dims.n1
    n = dims.n_a + dims.n2
    lt = to_lambda_tilde(float(lambda1), dims.alpha)
    arg0 = 1 - lt * h0 / (1 + h0)
    argp = 1 - lt * hp / (1 + hp)
    if arg0 <= 0 or argp <= 0:
        raise DomainError("compacted eigenvalue outside the admissible range")
    return (
        (n + 2 - p) / 2 * (math.log(arg0) - math.log(argp))
        - (p - 2) / 2 * math.log(hp / h0)
        + (p - n1 - 2) / 2 * math.log((1 + hp) / (1 + h0))
    )


@dataclass(frozen=True)
class AFunctions:
    a1: float
    a2: float
    a3: float
    a4: float
    root: float

    @property
    def total(self) -> float:
        return self.a1 + self.a2 + self.a3 + self.a4


def a_functions(h: float, lambda_tilde1: float, u: float, v: float) -> AFunctions:
    """Terms whose spike dependence makes up the noncentrality log-likelihood ratio."""
    zeta = h * lambda_tilde1 / 2
    disc = (zeta - v) ** 2 + 4 * u * zeta
    if disc < 0:
        raise DomainError("negative discriminant")
    root = math.sqrt(disc)
    z_plus = 0.5 * (zeta - v + root)
    return AFunctions(
        a1=(h + math.log(h)) / 2,
        a2=-z_plus,
        a3=-u * math.log(z_plus),
        a4=(u - v) * math.log(0.5 * (-zeta - v + root)),
        root=root,
    )


def loglr_closed_s2(gamma: float, lambda1: float, h0: float, dims: ModelDims) -> float:
    """Noncentrality-spike log-likelihood ratio from the saddle-point form."""
    hp = _local_spike(gamma, h0, dims)
    if gamma == 0:
        return 0.0
    u, v = kummer_uv(dims)
    lt = to_lambda_tilde(float(lambda1), dims.alpha)
    diff = a_functions(hp, lt, u, v).total - a_functions(h0, lt, u, v).total
    return -dims.n_a * diff


@dataclass(frozen=True)
class TestResult:
    z: float
    p_value_one_sided: float
    p_value_two_sided: float
    reject_one_sided: bool
    reject_two_sided: bool
    alpha: float


def _top_and_dims(sample: EigenSample | float, dims: ModelDims | None) -> tuple[float, ModelDims]:
    if isinstance(sample, EigenSample):
        return sample.top, sample.dims
    if dims is None:
        raise ConfigurationError("dims are required when passing a bare eigenvalue")
    return float(sample), dims


def efficient_test(
    sample: EigenSample | float,
    h0: float,
    setting: Setting | str | int,
    alpha: float = 0.05,
    dims: ModelDims | None = None,
) -> TestResult:
    """Test ``h = h0`` with ``z = Delta / tau``; the one-sided version rejects
    for large ``z`` (larger spikes push the top eigenvalue up)."""
    if not 0 < alpha < 1:
        raise ConfigurationError("alpha must lie in (0, 1)")
    lam1, dims = _top_and_dims(sample, dims)
    stat = lan_statistic(lam1, h0, dims, setting)
    z = stat.delta / math.sqrt(stat.tau_sq)
    p_one = float(norm.sf(z))
    p_two = float(2 * norm.sf(abs(z)))
    return TestResult(z, p_one, p_two, p_one < alpha, p_two < alpha, alpha)


@dataclass(frozen=True)
class ConfidenceInterval:
    h_hat: float
    low: float
    high: float
    level: float


def estimate_spike(lambda1: float, dims: ModelDims, margin: float = 1e-6) -> float:
    """Invert the finite-p centering map: the spike ``h`` with ``x_p(h) = lambda1``."""
    ar = AspectRatios.from_dims(dims)
    lo, hi = ar.h_bar + 1e-6, 1e3
    if not lambda1 > ar.b_plus * (1 + margin) or lambda1 <= spike_centering(lo, dims):
        raise SeparationError(
            f"sub-critical observation: lambda1={lambda1} does not clear the edge {ar.b_plus}"
        )
    if lambda1 >= spike_centering(hi, dims):
        raise DomainError(f"lambda1={lambda1} is beyond the supported spike range")
    return float(brentq(lambda h: spike_centering(h, dims) - lambda1, lo, hi, xtol=1e-14, rtol=1e-15))


def spike_confidence_interval(
    sample: EigenSample | float,
    setting: Setting | str | int,
    level: float = 0.95,
    dims: ModelDims | None = None,
) -> ConfidenceInterval:
    """Delta-method interval around the inverted centering estimate."""
    if not 0 < level < 1:
        raise ConfigurationError("level must lie in (0, 1)")
    lam1, dims = _top_and_dims(sample, dims)
    h_hat = estimate_spike(lam1, dims)
    tau_sq = asymptotic_variance(h_hat, dims.c1, dims.c2, setting)
    slope = spike_centering_derivative(h_hat, dims)
    half = norm.ppf(0.5 + level / 2) * math.sqrt(tau_sq / dims.p) / slope
    return ConfidenceInterval(h_hat, h_hat - half, h_hat + half, level)


def lan_gap(lambda1: float, h0: float, dims: ModelDims, setting, shifts) -> np.ndarray:
    """``closed-form log LR - quadratic LAN log LR`` over standardized shifts."""
    setting = Setting.parse(setting)
    closed = loglr_closed_s1 if setting is Setting.COVARIANCE else loglr_closed_s2
    out = []
    for s in shifts:
        lp = LocalParam.from_shift(h0, s, dims, setting)
        quad = lan_statistic(lambda1, h0, dims, setting, lp.theta).log_lr_lan
        out.append(closed(lp.gamma, lambda1, h0, dims) - quad)
    return np.asarray(out)
