"""Summary statistics for Monte Carlo output."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from ..errors import ConfigurationError


def ks_distance(samples, reference: str = "StdNormal") -> float:
    """Kolmogorov sup-distance between the empirical CDF and a reference law."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 2:
        raise ConfigurationError("need at least two samples")
    if not np.all(np.isfinite(x)):
        raise ConfigurationError("samples must be finite")
    if reference.lower() not in ("stdnormal", "norm", "normal"):
        raise ConfigurationError(f"unknown reference {reference!r}")
    return float(stats.kstest(x, "norm").statistic)


def two_sample_ks(a, b) -> float:
    return float(stats.ks_2samp(np.asarray(a, float), np.asarray(b, float)).statistic)


@dataclass
class RunningMoments:
    """Welford accumulation of count, mean and unbiased variance."""

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    def push(self, value: float) -> None:
        self.count += 1
        delta = value - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (value - self.mean)

    def extend(self, values) -> "RunningMoments":
        for v in np.asarray(values, dtype=float).ravel():
            self.push(float(v))
        return self

    @property
    def variance(self) -> float:
        return self.m2 / (self.count - 1) if self.count > 1 else math.nan


@dataclass(frozen=True)
class Summary:
    count: int
    mean: float
    variance: float
    ks: float | None
    ci_low: float
    ci_high: float

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "mean": self.mean,
            "variance": self.variance,
            "ks_distance": self.ks,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
        }


def summarize(values, standardize: tuple[float, float] | None = None) -> Summary:
    """Mean, variance and a 95% normal interval for the mean.

    With ``standardize=(center, scale)`` the KS distance of
    ``(values - center) / scale`` to the standard normal is included.
    """
    x = np.asarray(values, dtype=float)
    acc = RunningMoments().extend(x)
    half = 1.959963984540054 * math.sqrt(acc.variance / acc.count) if acc.count > 1 else math.nan
    ks = None
    if standardize is not None and x.size >= 2:
        center, scale = standardize
        ks = ks_distance((x - center) / scale)
    return Summary(acc.count, acc.mean, acc.variance, ks, acc.mean - half, acc.mean + half)
