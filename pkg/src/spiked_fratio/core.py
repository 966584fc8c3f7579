"""Sampling of spiked F-ratio spectra and the secular-equation root finder.

Two models are supported.  In the covariance-spike model the numerator
Wishart has covariance ``I + V diag(h) V'``; in the noncentrality-spike model
it is a noncentral Wishart with noncentrality ``n_A V diag(h) V'``.  Both are
divided by an independent central Wishart with ``n2`` degrees of freedom.

Because every law involved is invariant under orthogonal changes of basis,
the spectrum does not depend on the frame ``V``; the samplers place the spikes
along the first ``k`` coordinate axes.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import scipy.linalg as sla
from scipy.optimize import brentq
from scipy.sparse.linalg import ArpackError, ArpackNoConvergence, eigsh

from .errors import ConfigurationError, DomainError, NumericalError


class Setting(str, enum.Enum):
    """Which part of the numerator Wishart carries the low-rank signal."""

    COVARIANCE = "covariance"
    NONCENTRALITY = "noncentrality"

    @classmethod
    def parse(cls, value: "Setting | str | int") -> "Setting":
        if isinstance(value, Setting):
            return value
        aliases = {
            "1": cls.COVARIANCE,
            "covariance": cls.COVARIANCE,
            "covariancespike": cls.COVARIANCE,
            "2": cls.NONCENTRALITY,
            "noncentrality": cls.NONCENTRALITY,
            "noncentralityspike": cls.NONCENTRALITY,
        }
        key = str(value).strip().lower().replace("_", "").replace("-", "")
        if key not in aliases:
            raise ConfigurationError(f"unknown setting {value!r}")
        return aliases[key]

    @property
    def number(self) -> int:
        return 1 if self is Setting.COVARIANCE else 2


@dataclass(frozen=True)
class ModelDims:
    """Dimension ``p``, degrees of freedom ``n1``, ``n2`` and spike count ``k``."""

    p: int
    n1: int
    n2: int
    k: int = 0

    def __post_init__(self) -> None:
        for name in ("p", "n1", "n2", "k"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value:
                raise ConfigurationError(f"{name} must be an integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        if self.p < 2:
            raise ConfigurationError(f"p must be at least 2, got {self.p}")
        if self.k < 0:
            raise ConfigurationError(f"k must be non-negative, got {self.k}")
        if not (self.p < self.n1 and self.p < self.n2):
            raise ConfigurationError(
                f"need p < n1 and p < n2, got p={self.p}, n1={self.n1}, n2={self.n2}"
            )
        if self.k > self.p:
            raise ConfigurationError(f"k={self.k} exceeds p={self.p}")

    @property
    def n_a(self) -> int:
        """Numerator degrees of freedom including the spike directions."""
        return self.n1 + self.k

    @property
    def c1(self) -> float:
        return self.p / self.n1

    @property
    def c2(self) -> float:
        return self.p / self.n2

    @property
    def alpha(self) -> float:
        """Scale ``n_A / n2`` used by the compact eigenvalue transform."""
        return self.n_a / self.n2

    def with_k(self, k: int) -> "ModelDims":
        return ModelDims(self.p, self.n1, self.n2, k)

    def to_dict(self) -> dict:
        return {"p": self.p, "n1": self.n1, "n2": self.n2, "k": self.k}


@dataclass(frozen=True)
class SpikeSpec:
    """Spike magnitudes (strictly descending, positive) and the model they enter."""

    setting: Setting
    h: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "setting", Setting.parse(self.setting))
        h = tuple(float(x) for x in np.atleast_1d(np.asarray(self.h, dtype=float)))
        if any(not np.isfinite(x) or x <= 0 for x in h):
            raise ConfigurationError(f"spikes must be finite and positive, got {h}")
        if any(a <= b for a, b in zip(h, h[1:])):
            raise ConfigurationError(f"spikes must be strictly descending, got {h}")
        object.__setattr__(self, "h", h)

    @property
    def k(self) -> int:
        return len(self.h)

    def to_dict(self) -> dict:
        return {"setting": self.setting.value, "h": list(self.h)}


@dataclass(frozen=True)
class EigenSample:
    """One simulated spectrum of ``F``, largest eigenvalue first."""

    values: np.ndarray
    dims: ModelDims
    spikes: SpikeSpec
    seed: int
    replication_index: int

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.dims.p,):
            raise ConfigurationError(
                f"expected {self.dims.p} eigenvalues, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise NumericalError("spectrum contains negative or non-finite values")
        if np.any(np.diff(values) > 0):
            raise ConfigurationError("eigenvalues must be sorted in descending order")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def top(self) -> float:
        return float(self.values[0])


@dataclass(frozen=True)
class FactorModelDraw:
    """Canonical-route ingredients: perturbation ``xi`` and the Wisharts ``H``, ``E``.

    ``w_v`` and ``w_f`` are the ``k x k`` Gram matrices used to build ``xi``;
    ``w_f`` equals ``n_A I`` exactly in the noncentrality model.
    """

    xi: np.ndarray
    H: np.ndarray
    E: np.ndarray
    w_v: np.ndarray = field(repr=False)
    w_f: np.ndarray = field(repr=False)

    def to_buffers(self) -> dict:
        """Column-major buffers with an explicit shape header."""
        return {
            name: {
                "shape": list(mat.shape),
                "order": "F",
                "data": np.asarray(mat).ravel(order="F").tolist(),
            }
            for name, mat in (("xi", self.xi), ("H", self.H), ("E", self.E))
        }


def replication_rng(seed: int, rep: int) -> np.random.Generator:
    """Counter-based generator keyed by ``(seed, rep)``.

    Streams for different replications are independent and can be produced in
    any order or in parallel.
    """
    if seed < 0 or rep < 0:
        raise ConfigurationError("seed and replication index must be non-negative")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(rep)])))


def bartlett_factor(rng: np.random.Generator, p: int, df: int) -> np.ndarray:
    """Lower-triangular ``T`` with ``T T' ~ W_p(df, I)``."""
    if df < p:
        raise ConfigurationError(f"Wishart degrees of freedom {df} below dimension {p}")
    t = np.zeros((p, p))
    t[np.diag_indices(p)] = np.sqrt(rng.chisquare(df - np.arange(p)))
    rows, cols = np.tril_indices(p, -1)
    t[rows, cols] = rng.standard_normal(rows.size)
    return t


def _check_spikes(dims: ModelDims, spikes: SpikeSpec) -> None:
    if spikes.k != dims.k:
        raise ConfigurationError(f"dims.k={dims.k} but {spikes.k} spikes were given")


def _direct_factors(
    dims: ModelDims, spikes: SpikeSpec, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(T, G)`` with ``B = T T'`` and ``A = G G'``."""
    p, k = dims.p, dims.k
    t_b = bartlett_factor(rng, p, dims.n2)
    h = np.asarray(spikes.h)
    if spikes.setting is Setting.COVARIANCE or k == 0:
        g = bartlett_factor(rng, p, dims.n_a)
        if k:
            g[:k] *= np.sqrt(1.0 + h)[:, None]
    else:
        central = bartlett_factor(rng, p, dims.n_a - k)
        shifted = rng.standard_normal((p, k))
        shifted[np.arange(k), np.arange(k)] += np.sqrt(dims.n_a * h)
        g = np.hstack([central, shifted])
    return t_b, g


def generalized_eigs(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """All eigenvalues of ``B^{-1} A`` for symmetric ``A`` and positive definite ``B``.

    Uses the Cholesky reduction of ``B`` followed by a symmetric eigensolve.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape != b.shape:
        raise ConfigurationError(f"need two square matrices of equal size, got {a.shape}, {b.shape}")
    try:
        values = sla.eigh(a, b, eigvals_only=True, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"symmetric-definite eigensolve failed: {exc}") from exc
    return values[::-1].copy()


def _to_sample(values: np.ndarray, dims, spikes, seed, rep) -> EigenSample:
    values = np.sort(np.asarray(values, dtype=float))[::-1]
    # Round-off can leave the smallest eigenvalue a hair below zero.
    scale = max(abs(values[0]), 1.0)
    if values[-1] < 0 and values[-1] > -1e-12 * scale:
        values = np.maximum(values, 0.0)
    return EigenSample(values, dims, spikes, int(seed), int(rep))


def sample_factor_model(
    dims: ModelDims, spikes: SpikeSpec, seed: int, rep: int
) -> FactorModelDraw:
    """Draw ``(xi, H, E)`` for the canonical representation."""
    _check_spikes(dims, spikes)
    rng = replication_rng(seed, rep)
    p, k, n1, n2 = dims.p, dims.k, dims.n1, dims.n2
    t_h = bartlett_factor(rng, p, n1)
    t_e = bartlett_factor(rng, p, n2)
    h_mat = t_h @ t_h.T / n1
    e_mat = t_e @ t_e.T / n2
    if k == 0:
        empty = np.zeros((0, 0))
        return FactorModelDraw(np.zeros((p, 0)), h_mat, e_mat, empty, empty)
    v = rng.standard_normal((p, k))
    u = rng.standard_normal((p, k))
    w_v = v.T @ v
    if spikes.setting is Setting.COVARIANCE:
        z = rng.standard_normal((dims.n_a, k))
        w_f = z.T @ z
    else:
        w_f = dims.n_a * np.eye(k)
    frame = v @ _sym_power(w_v, -0.5)
    xi = frame @ np.diag(np.sqrt(spikes.h)) @ _sym_power(w_f, 0.5) + u
    return FactorModelDraw(xi, h_mat, e_mat, w_v, w_f)


def _sym_power(mat: np.ndarray, power: float) -> np.ndarray:
    vals, vecs = np.linalg.eigh(mat)
    if np.any(vals <= 0):
        raise NumericalError("Gram matrix is not positive definite")
    return (vecs * vals**power) @ vecs.T


def sample_spiked_f(
    dims: ModelDims,
    spikes: SpikeSpec,
    seed: int,
    rep: int,
    route: Literal["direct", "canonical"] = "direct",
) -> EigenSample:
    """Full spectrum of ``(B/n2)^{-1} A/n_A`` for replication ``rep`` of ``seed``.

    ``route="direct"`` samples ``A`` and ``B`` and solves the generalized
    eigenproblem; ``route="canonical"`` samples ``(xi, H, E)`` and solves
    ``det(xi xi'/n1 + H - x E) = 0``.  The two routes have the same law but use
    their random streams differently, so they agree only in distribution.
    """
    _check_spikes(dims, spikes)
    if route == "direct":
        rng = replication_rng(seed, rep)
        t_b, g = _direct_factors(dims, spikes, rng)
        values = generalized_eigs(g @ g.T, t_b @ t_b.T) * (dims.n2 / dims.n_a)
    elif route == "canonical":
        draw = sample_factor_model(dims, spikes, seed, rep)
        values = canonical_eigs(draw, dims)
    else:
        raise ConfigurationError(f"unknown route {route!r}")
    return _to_sample(values, dims, spikes, seed, rep)


def canonical_eigs(draw: FactorModelDraw, dims: ModelDims) -> np.ndarray:
    """Eigenvalues of ``F`` recovered from a canonical draw, descending."""
    lhs = draw.xi @ draw.xi.T / dims.n1 + draw.H
    return generalized_eigs(lhs, draw.E) * (dims.n1 / dims.n_a)


def sample_top_eigenvalue(dims: ModelDims, spikes: SpikeSpec, seed: int, rep: int) -> float:
    """Largest eigenvalue of the direct-route draw for ``(seed, rep)``.

    Consumes the random stream exactly like ``sample_spiked_f(route="direct")``
    but only extracts the top eigenvalue with a Lanczos iteration on
    ``G' B^{-1} G``-type products, which is several times cheaper for large p.
    """
    _check_spikes(dims, spikes)
    rng = replication_rng(seed, rep)
    t_b, g = _direct_factors(dims, spikes, rng)
    w = sla.solve_triangular(t_b, g, lower=True, check_finite=False)
    gram = w @ w.T
    scale = dims.n2 / dims.n_a
    if dims.p < 64:
        return float(np.linalg.eigvalsh(gram)[-1] * scale)
    try:
        top = eigsh(gram, k=1, which="LA", v0=np.ones(dims.p), tol=1e-13, return_eigenvectors=False)
        return float(top[0] * scale)
    except (ArpackNoConvergence, ArpackError):
        return float(sla.eigvalsh(gram, subset_by_index=[dims.p - 1, dims.p - 1])[0] * scale)


class SecularFunction:
    """``M(x) = xi'(H - xE)^{-1} xi / n1`` for a fixed canonical draw.

    The generalized eigendecomposition of ``(H, E)`` is computed once so that
    ``M`` and its eigenvalue branches are cheap to evaluate repeatedly.
    """

    def __init__(self, draw: FactorModelDraw, dims: ModelDims, spikes: SpikeSpec) -> None:
        _check_spikes(dims, spikes)
        if draw.xi.shape != (dims.p, dims.k):
            raise ConfigurationError("perturbation matrix does not match dims")
        self.draw = draw
        self.dims = dims
        self.spikes = spikes
        try:
            mu, phi = sla.eigh(draw.H, draw.E)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise NumericalError(f"generalized eigensolve of (H, E) failed: {exc}") from exc
        self._mu = mu
        self._proj = phi.T @ draw.xi
        self.mu1 = float(mu[-1])
        self.spread = float(mu[-1] - mu[0])

    def branches(self, x: float) -> np.ndarray:
        """Ascending eigenvalues of ``M(x)``, using the cached decomposition."""
        weights = 1.0 / (self._mu - x)
        m = (self._proj.T * weights) @ self._proj / self.dims.n1
        return np.linalg.eigvalsh(m)


def secular_eval(sf: SecularFunction, x: float) -> np.ndarray:
    """``M(x)`` by a direct symmetric solve; requires ``x`` above the top of ``E^{-1}H``."""
    if not x > sf.mu1:
        raise DomainError(f"x={x} must exceed the top eigenvalue {sf.mu1} of E^-1 H")
    draw = sf.draw
    if sf.dims.k == 0:
        return np.zeros((0, 0))
    try:
        sol = sla.solve(x * draw.E - draw.H, draw.xi, assume_a="pos")
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"resolvent solve failed at x={x}: {exc}") from exc
    m = -draw.xi.T @ sol / sf.dims.n1
    return 0.5 * (m + m.T)


def secular_roots(sf: SecularFunction) -> np.ndarray:
    """Roots of ``det(I + M(x)) = 0`` above ``mu1``, largest first.

    Each eigenvalue branch of ``M`` is increasing on ``(mu1, inf)`` and tends
    to zero, so every branch crosses ``-1`` at most once.
    """
    if sf.dims.k == 0 or not np.any(sf._proj):
        return np.zeros(0)
    mu1 = sf.mu1
    spread = sf.spread if sf.spread > 0 else max(abs(mu1), 1.0)
    min_gap = 64 * np.finfo(float).eps * max(abs(mu1), 1.0)
    roots = []
    for j in range(sf.dims.k):
        def g(x: float, j: int = j) -> float:
            return float(sf.branches(x)[j] + 1.0)

        gap = 1e-6 * spread
        lo = mu1 + gap
        while g(lo) >= 0 and gap > min_gap:
            gap *= 1e-3
            lo = mu1 + max(gap, min_gap)
        if g(lo) >= 0:
            continue
        step = spread
        hi = mu1 + step
        for _ in range(200):
            if g(hi) > 0:
                break
            step *= 2.0
            hi = mu1 + step
        else:
            raise NumericalError(f"could not bracket secular root on branch {j}")
        roots.append(brentq(g, lo, hi, xtol=1e-15 * max(abs(hi), 1.0), rtol=4 * np.finfo(float).eps, maxiter=500))
    return np.sort(np.asarray(roots))[::-1]
