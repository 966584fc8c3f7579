from __future__ import annotations

import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spiked_fratio.analytics import (
    AspectRatios,
    asymptotic_variance,
    phase_threshold,
    spike_centering,
    spike_centering_derivative,
    spike_limit,
    stieltjes_edge_value,
    stieltjes_mx0,
    stieltjes_wachter,
    stieltjes_wachter_edge,
    support_edges,
    wachter_mass,
    wachter_pdf,
)
from spiked_fratio.core import ModelDims
from spiked_fratio.errors import ConfigurationError, DomainError, SeparationError

ratios = st.tuples(st.floats(0.05, 0.9), st.floats(0.05, 0.9))


def test_edges_are_roots_of_the_discriminant():
    # At the edges the quadratic for m_x(0) has a double root.
    c1 = c2 = 0.5
    r2 = c1 + c2 - c1 * c2
    coeffs = [(1 - c2) ** 2, 2 * (1 - c2) * (c1 - 1) - 4 * r2, (c1 - 1) ** 2]
    oracle = np.sort(np.roots(coeffs).real)
    lo, hi, r = support_edges(c1, c2)
    assert (lo, hi) == pytest.approx(tuple(oracle), rel=1e-12)
    assert hi == pytest.approx(13.928203, abs=1e-6)
    assert r == pytest.approx(math.sqrt(0.75))


def test_single_wishart_edges_when_c2_vanishes():
    lo, hi, _ = support_edges(0.25, 0.0)
    assert (lo, hi) == pytest.approx((0.25, 2.25))


def test_threshold_value_and_characterization():
    h_bar = phase_threshold(0.5, 0.5)
    assert h_bar == pytest.approx(2.732051, abs=1e-6)
    # The spike limit meets the edge at the threshold and is stationary there.
    with mpmath.workdps(40):
        f = lambda h: (h + 0.5) * (h + 1) / (h - 0.5 * (h + 1))
        hb = mpmath.mpf(h_bar)
        assert float(f(hb)) == pytest.approx(AspectRatios(0.5, 0.5).b_plus, rel=1e-12)
        assert abs(float(mpmath.diff(f, hb))) < 1e-9


def test_spike_limit_benchmark_exact():
    assert spike_limit(5, 0.5, 0.5) == float(Fraction(11, 2) * 6 / 2)


def test_spike_limit_rejects_subcritical():
    with pytest.raises(SeparationError):
        spike_limit(2.0, 0.5, 0.5)


def test_centering_uses_finite_ratios():
    d = ModelDims(200, 400, 500, 1)
    assert spike_centering(5.0, d) == pytest.approx(spike_limit(5.0, 0.5, 0.4))


def test_centering_derivative_matches_finite_difference():
    d = ModelDims(200, 400, 400, 1)
    h, eps = 5.0, 1e-6
    fd = (spike_centering(h + eps, d) - spike_centering(h - eps, d)) / (2 * eps)
    assert spike_centering_derivative(h, d) == pytest.approx(fd, rel=1e-7)


def _variance_fraction(h, c1, c2, setting):
    h, c1, c2 = Fraction(h), Fraction(c1), Fraction(c2)
    lead = c1 + c2 - c1 * c2 if setting == 1 else c1 + c2 - c1 * (h * h - c1) / (1 + h) ** 2
    return 2 * lead * h * h * (h + 1) ** 2 * (h * h - c2 * (h + 1) ** 2 - c1) / (c2 - h + c2 * h) ** 4


@pytest.mark.parametrize("setting,expected", [(1, 548.4375), (2, 482.421875)])
def test_variance_benchmarks_exact(setting, expected):
    exact = _variance_fraction(5, Fraction(1, 2), Fraction(1, 2), setting)
    assert float(exact) == expected
    assert asymptotic_variance(5.0, 0.5, 0.5, setting) == pytest.approx(expected, rel=1e-14)


def test_variance_near_threshold_is_stable():
    h_bar = phase_threshold(0.5, 0.5)
    above = [asymptotic_variance(h_bar + d, 0.5, 0.5, 1) for d in (1e-6, 2e-6, 4e-6)]
    assert all(v > 0 for v in above)
    assert above[0] < above[1] < above[2]


@settings(max_examples=60, deadline=None)
@given(c=ratios, factor=st.floats(1.01, 5.0))
def test_setting_two_variance_is_smaller(c, factor):
    c1, c2 = c
    h = phase_threshold(c1, c2) * factor
    assert asymptotic_variance(h, c1, c2, 2) < asymptotic_variance(h, c1, c2, 1)


@pytest.mark.parametrize("c1", [0.2, 0.5])
@pytest.mark.parametrize("h", [3.0, 5.0, 10.0])
def test_single_wishart_variance_limit(c1, h):
    target = 2 * c1 * (h + 1) ** 2 * (h * h - c1) / h**2
    assert asymptotic_variance(h, c1, 1e-3, 1) == pytest.approx(target, rel=0.01)


def test_ratios_validated():
    with pytest.raises(ConfigurationError):
        AspectRatios(1.2, 0.5)
    with pytest.raises(ConfigurationError):
        stieltjes_mx0(20.0, 0.5, 0.0)


def _mx_z_oracle(z, x, c1, c2, start):
    with mpmath.workdps(40):
        f = lambda m: z - 1 / (1 + c1 * m) + 1 / m + x / (1 - c2 * x * m)
        return mpmath.findroot(f, mpmath.mpf(start))


def test_stieltjes_benchmark_point():
    pt = stieltjes_mx0(16.5, 0.5, 0.5)
    assert pt.m0 == pytest.approx(-2 / 11, rel=1e-14)
    with mpmath.workdps(40):
        dz = mpmath.mpf("1e-12")
        fd = (_mx_z_oracle(dz, 16.5, 0.5, 0.5, pt.m0) - _mx_z_oracle(-dz, 16.5, 0.5, 0.5, pt.m0)) / (2 * dz)
    assert pt.mprime0 == pytest.approx(float(fd), rel=1e-9)
    assert pt.mprime0 == pytest.approx(0.127146, abs=1e-6)
    assert pt.dm0_dx == pytest.approx(0.020343, abs=1e-6)


def test_stieltjes_edge_limit():
    edge = stieltjes_edge_value(0.5, 0.5)
    assert edge == pytest.approx(-0.309401, abs=1e-6)
    b_plus = AspectRatios(0.5, 0.5).b_plus
    assert stieltjes_mx0(b_plus * (1 + 1e-12), 0.5, 0.5).m0 == pytest.approx(edge, abs=1e-5)


def test_stieltjes_inside_bulk_rejected():
    with pytest.raises(DomainError):
        stieltjes_mx0(10.0, 0.5, 0.5)


@settings(max_examples=60, deadline=None)
@given(c=ratios, factor=st.floats(1.01, 4.0))
def test_m0_at_spike_limit_identity(c, factor):
    c1, c2 = c
    h = phase_threshold(c1, c2) * factor
    m0 = stieltjes_mx0(spike_limit(h, c1, c2), c1, c2).m0
    assert m0 == pytest.approx(-1 / (h + c1), rel=1e-11)


def test_wachter_density_mass_and_support():
    assert wachter_mass(0.5, 0.5) == pytest.approx(1.0, abs=1e-10)
    lo, hi, _ = support_edges(0.5, 0.5)
    assert wachter_pdf(np.array([lo - 0.01, hi + 0.01]), 0.5, 0.5).tolist() == [0.0, 0.0]
    with mpmath.workdps(30):
        mass = mpmath.quad(lambda t: wachter_pdf(float(t), 0.5, 0.5), [lo, 1, hi])
    assert float(mass) == pytest.approx(1.0, abs=1e-6)


def test_wachter_transform_benchmarks():
    lo, hi, _ = support_edges(0.5, 0.5)
    with mpmath.workdps(30):
        oracle = mpmath.quad(lambda t: wachter_pdf(float(t), 0.5, 0.5) / (t - 16.5), [lo, 1, hi])
    m = stieltjes_wachter(16.5, 0.5, 0.5).m
    assert m == pytest.approx(float(oracle), abs=1e-8)
    assert m == pytest.approx(-0.0727273, abs=1e-6)
    assert stieltjes_wachter_edge(0.5, 0.5) == pytest.approx(-0.0980762, abs=1e-6)
    near = stieltjes_wachter(hi + 1e-9, 0.5, 0.5).m
    assert near == pytest.approx(stieltjes_wachter_edge(0.5, 0.5), abs=1e-3)
