"""Single-spike eigenvalue density ratios by contour quadrature and by Laplace.

The joint density of the F-ratio eigenvalues under a rank-one alternative is a
known null-shape term times a contour integral over a path that starts at
``-inf``, loops counter-clockwise around the compacted eigenvalues
``lt_j = a lambda_j / (1 + a lambda_j)`` and returns to ``-inf``.  Only
ratios of these integrals across spike values are statistically meaningful,
so every routine here works with log-magnitudes and phases.

The integrand is real on the real axis to the right of all ``lt_j`` and takes
conjugate values at conjugate points, so the full loop equals ``U - conj(U)``
where ``U`` is the integral over the upper half of the path.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import mpmath
import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import minimize_scalar
from scipy.special import gammaln, logsumexp

from .analytics import AspectRatios, stieltjes_wachter
from .core import EigenSample, ModelDims, Setting
from .errors import (
    BranchError,
    ConfigurationError,
    DomainError,
    GeometryError,
    NumericalError,
    SeparationError,
)
from .special import (
    LogValue,
    _phi,
    _zplus_array,
    kummer_uv,
    log_gamma_ratio,
    log_hyp1f1_uniform_path,
    zeta_from_zplus,
    zplus,
)

# Spectra with a smaller top gap are treated as degenerate.
_MIN_GAP = 1e-4


def to_lambda_tilde(lam, alpha_p: float):
    """Compact map ``a lam / (1 + a lam)`` taking ``[0, inf)`` onto ``[0, 1)``."""
    if alpha_p <= 0:
        raise ConfigurationError("alpha_p must be positive")
    lam_arr = np.asarray(lam, dtype=float)
    if np.any(lam_arr < 0):
        raise DomainError("eigenvalues must be non-negative")
    out = alpha_p * lam_arr / (1.0 + alpha_p * lam_arr)
    return float(out) if np.ndim(lam) == 0 else out


@dataclass(frozen=True)
class DensityInput:
    """Compacted spectrum with the constants the contour integrands need."""

    lambda_tilde: np.ndarray
    alpha_p: float
    dims: ModelDims
    n: int

    def __post_init__(self) -> None:
        lt = np.asarray(self.lambda_tilde, dtype=float)
        if lt.shape != (self.dims.p,):
            raise ConfigurationError("compacted spectrum has the wrong length")
        if np.any(lt <= 0) or np.any(lt >= 1) or np.any(np.diff(lt) > 0):
            raise ConfigurationError("compacted eigenvalues must be descending in (0, 1)")
        lt.setflags(write=False)
        object.__setattr__(self, "lambda_tilde", lt)

    @classmethod
    def from_values(cls, values, dims: ModelDims) -> "DensityInput":
        if dims.k != 1:
            raise ConfigurationError("density ratios are implemented for a single spike (k=1)")
        alpha = dims.alpha
        return cls(to_lambda_tilde(np.asarray(values, dtype=float), alpha), alpha, dims, dims.n_a + dims.n2)

    @classmethod
    def from_sample(cls, sample: EigenSample) -> "DensityInput":
        return cls.from_values(sample.values, sample.dims)

    @property
    def top(self) -> float:
        return float(self.lambda_tilde[0])

    @property
    def gap(self) -> float:
        return float(self.lambda_tilde[0] - self.lambda_tilde[1])


class ContourKind(str, enum.Enum):
    SETTING_ONE_K = "K"
    SETTING_TWO_C = "C"


@dataclass(frozen=True)
class ContourSpec:
    """Geometry and quadrature controls of the integration path.

    ``order`` is the number of Gauss-Legendre nodes per panel at the first
    pass; it is doubled until the log-value changes by less than ``tol`` or
    ``max_order`` is reached.
    """

    kind: ContourKind
    x_tilde0: float
    epsilon: float
    order: int = 16
    max_order: int = 128
    tol: float = 1e-10

    def validate(self, inp: DensityInput) -> None:
        lt = inp.lambda_tilde
        if not self.epsilon > 0:
            raise GeometryError("half-circle radius must be positive")
        if not lt[1] < self.x_tilde0 < lt[0] - self.epsilon:
            raise GeometryError(
                f"x_tilde0={self.x_tilde0} must lie in ({lt[1]}, {lt[0] - self.epsilon})"
            )
        if self.epsilon >= lt[0] - lt[1]:
            raise GeometryError("half circle reaches the second eigenvalue")


def compact_edge(dims: ModelDims) -> float:
    """Upper bulk edge mapped through the compact transform."""
    return to_lambda_tilde(AspectRatios.from_dims(dims).b_plus, dims.alpha)


def default_contour(
    inp: DensityInput,
    kind: ContourKind | str,
    h: float | None = None,
    placement: str = "saddle",
) -> ContourSpec:
    """Default path for a spectrum.

    The path leaves the real axis at ``x_tilde0`` between ``lower`` (the larger
    of the compacted bulk edge and the second eigenvalue) and the top
    eigenvalue.  ``placement="midpoint"`` uses the geometric midpoint of that
    band; ``placement="saddle"`` (needs ``h``) uses the point of the band where
    the integrand modulus on the real axis is smallest, which keeps the parts
    of the path away from the axis negligible.
    """
    kind = ContourKind(kind)
    lt1, lt2 = inp.lambda_tilde[0], inp.lambda_tilde[1]
    eps = 0.05 * (lt1 - lt2)
    lower = max(compact_edge(inp.dims), lt2)
    if lower >= lt1 - eps:
        lower = lt2
    if placement == "midpoint" or h is None:
        x0 = math.sqrt(lower * lt1)
        if x0 >= lt1 - eps:
            x0 = 0.5 * (lower + lt1 - eps)
    elif placement == "saddle":
        x0 = _min_modulus_point(inp, kind, float(h), lower, lt1 - eps)
    else:
        raise ConfigurationError(f"unknown placement {placement!r}")
    spec = ContourSpec(kind, x0, eps)
    spec.validate(inp)
    return spec


def _real_axis_log_modulus(inp: DensityInput, kind: ContourKind, h: float, x: np.ndarray) -> np.ndarray:
    z = np.asarray(x, dtype=float) + 0j
    if kind is ContourKind.SETTING_ONE_K:
        head = _log_one_f_zero(z, h, inp)
    else:
        head = _log_one_f_one(_Segment("probe", z, np.zeros_like(z)), h, inp)
    return (head + _log_bulk_product(z, inp.lambda_tilde)).real


def _min_modulus_point(inp: DensityInput, kind: ContourKind, h: float, lo: float, hi: float) -> float:
    width = hi - lo
    grid = lo + width * np.linspace(0.02, 1.0, 200)
    vals = _real_axis_log_modulus(inp, kind, h, grid)
    i = int(np.argmin(vals))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    if b - a <= 0:
        return float(grid[i])
    res = minimize_scalar(
        lambda x: float(_real_axis_log_modulus(inp, kind, h, np.asarray([x]))[0]),
        bounds=(a, b),
        method="bounded",
        options={"xatol": 1e-6 * width},
    )
    return float(res.x)


# ---------------------------------------------------------------------------
# Quadrature helpers


def _graded_breaks(length: float, dist: float, max_panel: float, ratio: float = 0.5) -> np.ndarray:
    """Panel breakpoints on ``[0, length]`` refined toward ``length``, where an
    integrand singularity sits ``dist`` beyond the end of the interval."""
    total = length + dist
    edges = [0.0]
    d = total * ratio
    while d > 2 * dist and total - d < length:
        edges.append(total - d)
        d *= ratio
    edges.append(length)
    out = [edges[0]]
    for a, b in zip(edges[:-1], edges[1:]):
        pieces = max(1, int(math.ceil((b - a) / max_panel)))
        out.extend(np.linspace(a, b, pieces + 1)[1:])
    return np.asarray(out)


def _gauss_panels(breaks: np.ndarray, order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = leggauss(order)
    a, b = breaks[:-1, None], breaks[1:, None]
    half = 0.5 * (b - a)
    nodes = (a + b) / 2 + half * x[None, :]
    weights = half * w[None, :]
    return nodes.ravel(), weights.ravel()


@dataclass
class _Segment:
    name: str
    z: np.ndarray
    log_dz: np.ndarray  # log of quadrature weight times dz/dt
    zeta: np.ndarray | None = None
    z_plus: np.ndarray | None = None


def _log_sum(logs: np.ndarray) -> complex:
    """Complex log of ``sum(exp(logs))`` without overflow."""
    if logs.size == 0:
        return complex(-math.inf, 0.0)
    top = float(np.max(logs.real))
    if not np.isfinite(top):
        return complex(-math.inf, 0.0)
    total = np.sum(np.exp(logs - top))
    if total == 0:
        return complex(-math.inf, 0.0)
    return top + complex(np.log(total))


def _log_bulk_product(z: np.ndarray, lt: np.ndarray, chunk: int = 256) -> np.ndarray:
    """``-1/2 sum_j Log(z - lt_j)`` with principal logs, after checking continuity."""
    out = np.empty(z.shape, dtype=complex)
    prev_args = None
    for start in range(0, z.size, chunk):
        zz = z[start : start + chunk]
        logs = np.log(zz[:, None] - lt[None, :])
        args = logs.imag
        if prev_args is not None:
            args = np.vstack([prev_args, args])
        if args.shape[0] > 1 and np.max(np.abs(np.diff(args, axis=0))) > 0.5 * math.pi:
            raise BranchError("argument of z - lt_j jumps between consecutive nodes")
        prev_args = logs.imag[-1:]
        out[start : start + chunk] = -0.5 * logs.sum(axis=1)
    return out


# ---------------------------------------------------------------------------
# Path construction


def _arc_and_cut(spec: ContourSpec, lt: np.ndarray, order: int) -> list[_Segment]:
    """Half circle around the top eigenvalue and the upper lip of the cut back to x0."""
    lt1, lt2 = lt[0], lt[1]
    eps, x0 = spec.epsilon, spec.x_tilde0
    theta, w_theta = _gauss_panels(np.linspace(0.0, math.pi, 5), order)
    z1 = lt1 + eps * np.exp(1j * theta)
    arc = _Segment("arc", z1, np.log(w_theta * 1j * eps * np.exp(1j * theta)))

    # z = lt1 - s^2 absorbs the inverse square root at lt1.
    s0, s1 = math.sqrt(eps), math.sqrt(lt1 - x0)
    dist = math.sqrt(lt1 - lt2) - s1
    breaks = s0 + _graded_breaks(s1 - s0, dist, (s1 - s0) / 8)
    s, w_s = _gauss_panels(breaks, order)
    z2 = (lt1 - s * s) + 0j
    cut = _Segment("cut", z2, np.log((w_s * -2.0 * s).astype(complex)))
    return [arc, cut]


def _k_tails(spec: ContourSpec, lt: np.ndarray, n: int, order: int) -> list[_Segment]:
    x0, lt2 = spec.x_tilde0, lt[1]
    breaks = _graded_breaks(x0, x0 - lt2, x0 / 8)
    y, w_y = _gauss_panels(x0 - breaks[::-1], order)
    vertical = _Segment("vertical", x0 + 1j * y, np.log(w_y * 1j))

    breaks = _graded_breaks(1.0, 1.0 / n, 1.0 / 8)
    t, w_t = _gauss_panels(1.0 - breaks[::-1], order)
    z4 = x0 - t / (1 - t) + 1j * x0
    horizontal = _Segment("horizontal", z4, np.log((-w_t / (1 - t) ** 2).astype(complex)))
    return [vertical, horizontal]


def _c_arc(spec: ContourSpec, inp: DensityInput, h: float, order: int) -> _Segment:
    """Arc on which the saddle point moves along ``|z_plus + u| = const``."""
    u, v = kummer_uv(inp.dims)
    x0, lt2 = spec.x_tilde0, inp.lambda_tilde[1]
    zeta0 = h * x0 / 2
    radius = zplus(zeta0, u, v, "principal").real + u
    dzeta_dzp0 = (u * v + 2 * u * (radius - u) + (radius - u) ** 2) / radius**2
    speed0 = 2 / h * dzeta_dzp0 * radius
    dist = (x0 - lt2) / speed0
    half_pi = math.pi / 2
    breaks = half_pi - _graded_breaks(half_pi, dist, half_pi / 8)[::-1]
    ang, w = _gauss_panels(breaks, order)
    zp = -u + radius * np.exp(1j * ang)
    zeta = zeta_from_zplus(zp, u, v)
    dzeta_dzp = (u * v + 2 * u * zp + zp * zp) / (zp + u) ** 2
    dz = (2 / h) * dzeta_dzp * 1j * radius * np.exp(1j * ang)
    return _Segment("arc_out", 2 * zeta / h, np.log(w * dz), zeta=zeta, z_plus=zp)


# ---------------------------------------------------------------------------
# Integrands


def _log_one_f_zero(z: np.ndarray, h: float, inp: DensityInput) -> np.ndarray:
    expo = (inp.dims.p - inp.n - 2) / 2
    return expo * np.log(1 - (h / (1 + h)) * z)


def _log_one_f_one(seg: _Segment, h: float, inp: DensityInput) -> np.ndarray:
    u, v = kummer_uv(inp.dims)
    zeta = seg.zeta if seg.zeta is not None else h * seg.z / 2
    anchor = None
    if seg.z_plus is not None:
        anchor = complex(zeta[0].real)
    return log_hyp1f1_uniform_path(zeta, u, v, inp.dims.n_a, z_plus=seg.z_plus, anchor=anchor)


@dataclass(frozen=True)
class ContourResult:
    """Outcome of a contour quadrature.

    ``log_value`` is the full loop integral.  ``segments`` holds the
    upper-half integral over each piece; ``tail_ratio`` compares the two
    pieces away from the real axis with the cut; ``refinement_change`` is the
    change in the complex log-value at the last node doubling.
    """

    log_value: LogValue
    upper: LogValue
    segments: dict[str, LogValue] = field(repr=False)
    tail_ratio: float
    refinement_change: float
    order: int
    spec: ContourSpec


def _combine(seg_logs: dict[str, complex]) -> tuple[complex, LogValue]:
    upper = _log_sum(np.asarray(list(seg_logs.values())))
    # U - conj(U) = 2 i Im U.
    im = math.sin(upper.imag)
    if im == 0:
        raise NumericalError("loop integral vanished")
    full = LogValue(upper.real + math.log(2 * abs(im)), math.copysign(math.pi / 2, im))
    return upper, full


def _run_refinement(evaluate, spec: ContourSpec, tail_names: tuple[str, ...], extra_tail=None):
    order = spec.order
    previous = None
    while True:
        seg_logs = evaluate(order)
        upper, full = _combine(seg_logs)
        change = math.inf
        if previous is not None:
            change = abs(complex(full.log_abs - previous.log_abs, full.phase - previous.phase))
            if change < spec.tol or order >= spec.max_order:
                break
        elif order >= spec.max_order:
            break
        previous = full
        order *= 2
    tail_logs = [seg_logs[name].real for name in tail_names]
    if extra_tail is not None:
        tail_logs.append(extra_tail)
    tail = logsumexp(tail_logs) if tail_logs else -math.inf
    tail_ratio = math.exp(tail - seg_logs["cut"].real) if np.isfinite(tail) else 0.0
    segments = {k: LogValue.from_complex_log(v) for k, v in seg_logs.items()}
    return ContourResult(
        log_value=full,
        upper=LogValue.from_complex_log(upper),
        segments=segments,
        tail_ratio=tail_ratio,
        refinement_change=change,
        order=order,
        spec=spec,
    )


def _prepare(inp: DensityInput, spec: ContourSpec | None, kind: ContourKind, h: float) -> ContourSpec:
    if not h > 0:
        raise DomainError("spike value must be positive")
    if spec is None:
        spec = default_contour(inp, kind, h)
    elif spec.kind is not kind:
        raise GeometryError(f"contour of kind {spec.kind.value} used for the wrong setting")
    spec.validate(inp)
    if inp.gap < _MIN_GAP:
        warnings.warn("top eigenvalue is not separated; quadrature may be slow", RuntimeWarning)
    return spec


def contour_integral_s1(inp: DensityInput, h: float, spec: ContourSpec | None = None) -> ContourResult:
    """Loop integral of ``(1 - h z/(1+h))^((p-n-2)/2) prod_j (z - lt_j)^(-1/2)``."""
    spec = _prepare(inp, spec, ContourKind.SETTING_ONE_K, h)
    lt = inp.lambda_tilde

    def evaluate(order: int) -> dict[str, complex]:
        segs = _arc_and_cut(spec, lt, order) + _k_tails(spec, lt, inp.n, order)
        out = {}
        for seg in segs:
            logs = _log_one_f_zero(seg.z, h, inp) + _log_bulk_product(seg.z, lt) + seg.log_dz
            out[seg.name] = _log_sum(logs)
        return out

    return _run_refinement(evaluate, spec, ("vertical", "horizontal"))


def contour_integral_s2(inp: DensityInput, h: float, spec: ContourSpec | None = None) -> ContourResult:
    """Loop integral of ``1F1(nA u + 1, nA v + 1; nA h z/2) prod_j (z - lt_j)^(-1/2)``.

    The confluent function is replaced by its uniform large-``nA``
    approximation.  Beyond the arc where the saddle point reaches
    ``Re zeta = -2u + v`` only a magnitude bound is integrated; it enters
    ``tail_ratio`` but not the value.
    """
    spec = _prepare(inp, spec, ContourKind.SETTING_TWO_C, h)
    lt = inp.lambda_tilde

    def evaluate(order: int) -> dict[str, complex]:
        segs = _arc_and_cut(spec, lt, order) + [_c_arc(spec, inp, h, order)]
        out = {}
        for seg in segs:
            logs = _log_one_f_one(seg, h, inp) + _log_bulk_product(seg.z, lt) + seg.log_dz
            out[seg.name] = _log_sum(logs)
        return out

    bound = c_tail_log_bound(inp, h, spec)
    return _run_refinement(evaluate, spec, ("arc_out",), extra_tail=bound)


def _log_abs_hyp1f1_bound(w: np.ndarray, a: float, b: float) -> np.ndarray:
    """Upper bound on ``log|1F1(a, b; w)|`` via Kummer's transformation.

    ``1F1(a, b; w) = e^w 1F1(b - a, b; -w)``; with ``m = a - b > 0`` every
    coefficient of the second series is bounded by that of ``1F1(m, b; |w|)``,
    which terminates when ``m`` is an integer.
    """
    m = a - b
    absw = np.abs(w)
    if abs(m - round(m)) < 1e-12:
        m_int = int(round(m))
        k = np.arange(m_int + 1)
        log_coef = gammaln(m_int + 1) - gammaln(k + 1) - gammaln(m_int - k + 1) - (gammaln(b + k) - gammaln(b))
        with np.errstate(divide="ignore"):
            terms = log_coef[None, :] + k[None, :] * np.log(absw)[:, None]
        poly = logsumexp(terms, axis=1)
    else:
        poly = np.array([float(mpmath.log(mpmath.hyp1f1(m, b, float(x)))) for x in absw])
    return w.real + poly


def c_tail_log_bound(inp: DensityInput, h: float, spec: ContourSpec, order: int = 32) -> float:
    """Log of a bound on the magnitude of the integral over the horizontal tail
    of the setting-two path, where the saddle point runs along
    ``z_plus = -u - t + i R`` for ``t >= 0``."""
    u, v = kummer_uv(inp.dims)
    n_a = inp.dims.n_a
    radius = zplus(h * spec.x_tilde0 / 2, u, v, "principal").real + u
    breaks = _graded_breaks(1.0, 0.05, 1.0 / 16)
    s, w = _gauss_panels(1.0 - breaks[::-1], order)
    t = s / (1 - s)
    zp = -u - t + 1j * radius
    zeta = zeta_from_zplus(zp, u, v)
    z = 2 * zeta / h
    dzeta_dzp = (u * v + 2 * u * zp + zp * zp) / (zp + u) ** 2
    log_jac = np.log(w / (1 - s) ** 2 * (2 / h) * np.abs(dzeta_dzp))
    a, b = n_a * u + 1, n_a * v + 1
    log_f = _log_abs_hyp1f1_bound(n_a * zeta, a, b)
    log_prod = -0.5 * np.log(np.abs(z[:, None] - inp.lambda_tilde[None, :])).sum(axis=1)
    return float(logsumexp(log_f + log_prod + log_jac))


# ---------------------------------------------------------------------------
# Laplace approximations


def laplace_h0(h0: float, c1: float, c2: float) -> float:
    """Limit of the exponent slope at the top eigenvalue (closed form)."""
    ar = AspectRatios(c1, c2)
    mu0 = h0 + 1
    num = h0 * (1 - c2) * (mu0 - math.sqrt(ar.b_plus)) * (mu0 - math.sqrt(ar.b_minus)) * (c1 + c2 * mu0)
    den = 2 * c1 * c2 * (h0 - c2 * mu0) * mu0 * (c1 + h0)
    return num / den


def laplace_h0_terms(h0: float, c1: float, c2: float) -> float:
    """The same slope assembled from its defining terms, with the Stieltjes
    transform at the spike limit obtained by quadrature."""
    x1 = (h0 + c1) * (h0 + 1) / (h0 - c2 * (h0 + 1))
    alpha = c2 / c1
    r2 = c1 + c2 - c1 * c2
    m = stieltjes_wachter(x1, c1, c2).m
    lift = 1 + alpha * x1
    return (
        r2 / (2 * c1 * c2) * lift * h0 / (1 + h0 + alpha * x1)
        + 0.5 * lift
        + lift**2 * m / (2 * alpha)
    )


def laplace_r0_terms(h0: float, c1: float, c2: float) -> float:
    """Setting-two exponent slope assembled from its defining terms."""
    x1 = (h0 + c1) * (h0 + 1) / (h0 - c2 * (h0 + 1))
    alpha = c2 / c1
    m = stieltjes_wachter(x1, c1, c2).m
    lift = 1 + alpha * x1
    return c1 / (c2 * (h0 + 1)) + 1 + (c1 / h0) * lift + (c1 / (alpha * h0)) * lift**2 * m


def laplace_z_factor(h0: float, c1: float, c2: float) -> float:
    """Amplitude factor ``(c1 + c2 mu0)/sqrt(c2 mu0^2 + c1^2 - c1 + 2 c1 mu0)``."""
    mu0 = h0 + 1
    return (c1 + c2 * mu0) / math.sqrt(c2 * mu0**2 + c1**2 - c1 + 2 * c1 * mu0)


@dataclass(frozen=True)
class LaplaceResult:
    log_value: LogValue
    H0: float
    R0: float | None
    Z_pn_h0: float | None
    exponent_derivative_at_saddle: float


def _laplace_checks(inp: DensityInput, h0: float) -> tuple[float, float]:
    dims = inp.dims
    ar = AspectRatios.from_dims(dims)
    if not h0 > ar.h_bar:
        raise SeparationError(f"h0={h0} is not above the threshold {ar.h_bar}")
    if inp.gap < _MIN_GAP:
        raise SeparationError(f"top gap {inp.gap:.3g} too small for a Laplace approximation")
    return dims.c1, dims.c2


def _log_gap_product(inp: DensityInput) -> float:
    lt = inp.lambda_tilde
    return float(-0.5 * np.sum(np.log(lt[0] - lt[1:])))


def laplace_s1(inp: DensityInput, h0: float, h: float | None = None) -> LaplaceResult:
    """Laplace approximation of :func:`contour_integral_s1` at spike ``h``
    (default ``h0``), with the exponent slope taken at the null ``h0``."""
    c1, c2 = _laplace_checks(inp, h0)
    h = h0 if h is None else float(h)
    p = inp.dims.p
    slope = laplace_h0(h0, c1, c2)
    if not slope > 0:
        raise NumericalError("non-positive exponent slope")
    log_mag = (
        float(_log_one_f_zero(np.asarray([inp.top + 0j]), h, inp)[0].real)
        + math.log(2.0)
        + 0.5 * math.log(math.pi / (p * slope))
        + _log_gap_product(inp)
    )
    lam1 = inp.top / (1 - inp.top) / inp.alpha_p
    lift = 1 + inp.alpha_p * lam1
    beta = (2 + inp.n - p) / p
    lt = inp.lambda_tilde
    empirical = beta / 2 * h * lift / (h + lift) - np.sum(1 / (lt[0] - lt[1:])) / (2 * p)
    return LaplaceResult(LogValue(log_mag, math.pi / 2), slope, None, None, float(empirical))


def laplace_s2(inp: DensityInput, h0: float, h: float | None = None) -> LaplaceResult:
    """Laplace approximation of :func:`contour_integral_s2` at spike ``h``
    (default ``h0``)."""
    c1, c2 = _laplace_checks(inp, h0)
    h = h0 if h is None else float(h)
    dims = inp.dims
    p, n_a = dims.p, dims.n_a
    u, v = kummer_uv(dims)
    slope = laplace_h0(h0, c1, c2)
    r0 = laplace_r0_terms(h0, c1, c2)
    if abs(r0 - 2 * c1 * slope / h0) > 1e-10 * max(1.0, abs(r0)):
        raise NumericalError(f"slope identity violated: {r0} vs {2 * c1 * slope / h0}")
    z_factor = laplace_z_factor(h0, c1, c2)
    zeta1 = h * inp.top / 2
    zp = _zplus_array(np.asarray([zeta1 + 0j]), u, v, 1.0)
    phi1 = float(_phi(zp, u, v)[0].real)
    log_z = log_gamma_ratio(u, v, n_a) - 0.5 * math.log(math.pi * p) + math.log(z_factor)
    log_mag = (
        math.log(2.0)
        + log_z
        - n_a * phi1
        + 0.5 * math.log(math.pi / (p * slope))
        + _log_gap_product(inp)
    )
    zp1 = float(zp[0].real)
    lt = inp.lambda_tilde
    empirical = (u + zp1) / (v + zp1) - np.sum(1 / (lt[0] - lt[1:])) / (h * n_a)
    return LaplaceResult(LogValue(log_mag, math.pi / 2), slope, r0, z_factor, float(empirical))


# ---------------------------------------------------------------------------
# Density ratio


def log_k_prefactor(h: float, dims: ModelDims, setting: Setting | str | int) -> float:
    """Log of the spike-dependent prefactor of the joint eigenvalue density."""
    setting = Setting.parse(setting)
    p, n_a = dims.p, dims.n_a
    if setting is Setting.COVARIANCE:
        return (p - 2 - n_a) / 2 * math.log1p(h) + (1 - p / 2) * math.log(h)
    return -n_a * h / 2 + (1 - p / 2) * math.log(h)


def joint_log_density_ratio(
    sample: EigenSample | DensityInput,
    h1: float,
    h0: float,
    setting: Setting | str | int,
    method: str = "quadrature",
    spec: ContourSpec | None = None,
) -> float:
    """``log f(eigenvalues; h1) - log f(eigenvalues; h0)`` for a single-spike model.

    ``method="quadrature"`` integrates the loop numerically (exact up to
    quadrature error); ``method="laplace"`` uses the Laplace approximation
    with the exponent slope fixed at ``h0``.
    """
    setting = Setting.parse(setting)
    inp = sample if isinstance(sample, DensityInput) else DensityInput.from_sample(sample)
    if not (h1 > 0 and h0 > 0):
        raise DomainError("spike values must be positive")
    if h1 == h0:
        return 0.0
    dims = inp.dims
    prefactor = log_k_prefactor(h1, dims, setting) - log_k_prefactor(h0, dims, setting)
    method = method.lower()
    if method == "quadrature":
        kind = ContourKind.SETTING_ONE_K if setting is Setting.COVARIANCE else ContourKind.SETTING_TWO_C
        spec = spec or default_contour(inp, kind, h0)
        integral = contour_integral_s1 if setting is Setting.COVARIANCE else contour_integral_s2
        top = integral(inp, h1, spec).log_value
        bottom = integral(inp, h0, spec).log_value
    elif method == "laplace":
        approx = laplace_s1 if setting is Setting.COVARIANCE else laplace_s2
        top = approx(inp, h0, h1).log_value
        bottom = approx(inp, h0, h0).log_value
    else:
        raise ConfigurationError(f"unknown method {method!r}")
    residue = math.remainder(top.phase - bottom.phase, 2 * math.pi)
    if abs(residue) > 1e-8:
        raise NumericalError(f"density ratio has an imaginary residue of {residue:.3g} rad")
    return prefactor + top.log_abs - bottom.log_abs
