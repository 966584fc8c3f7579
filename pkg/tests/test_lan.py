from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import norm

from spiked_fratio.analytics import asymptotic_variance, spike_centering
from spiked_fratio.contour import joint_log_density_ratio
from spiked_fratio.core import ModelDims, SpikeSpec, sample_spiked_f, sample_top_eigenvalue
from spiked_fratio.errors import ConfigurationError, DomainError, SeparationError
from spiked_fratio.lan import (
    LocalParam,
    a_functions,
    efficient_test,
    estimate_spike,
    lan_statistic,
    local_scaling,
    loglr_closed_s1,
    loglr_closed_s2,
    spike_confidence_interval,
)
from spiked_fratio.special import kummer_uv

D400 = ModelDims(400, 800, 800, 1)


def _omega_fraction(h, c1, c2, setting):
    h, c1, c2 = Fraction(h), Fraction(c1), Fraction(c2)
    den = (h - c2 * (1 + h)) ** 2
    if setting == 1:
        return 2 * h * h * (1 + h) ** 2 * (c1 + c2 - c1 * c2) / den
    return 2 * h * h * (c1 + c2 + c2 * h * h + c1 * c1 + 2 * c1 * h + 2 * c2 * h) / den


@pytest.mark.parametrize("setting,expected", [(1, 337.5), (2, 296.875)])
def test_local_scaling_benchmarks(setting, expected):
    half = Fraction(1, 2)
    assert float(_omega_fraction(5, half, half, setting)) == expected
    assert local_scaling(5.0, 0.5, 0.5, setting) == pytest.approx(expected, rel=1e-14)


def test_local_scaling_rejects_subcritical():
    with pytest.raises(SeparationError):
        local_scaling(2.0, 0.5, 0.5, 1)


@settings(max_examples=50, deadline=None)
@given(h0=st.floats(3.0, 20.0), c1=st.sampled_from([0.2, 0.5, 0.8]), c2=st.sampled_from([0.2, 0.5]))
def test_scaling_positive_and_curvature_ordering(h0, c1, c2):
    from spiked_fratio.analytics import phase_threshold

    if h0 <= phase_threshold(c1, c2) * 1.01:
        return
    assert local_scaling(h0, c1, c2, 1) > 0 and local_scaling(h0, c1, c2, 2) > 0
    assert asymptotic_variance(h0, c1, c2, 2) < asymptotic_variance(h0, c1, c2, 1)


def test_local_parameter_invariants():
    lp = LocalParam.from_gamma(5.0, 12.0, D400, 1)
    assert lp.theta == 12.0 / lp.omega
    back = LocalParam.from_theta(5.0, lp.theta, D400, 1)
    assert back.gamma == pytest.approx(12.0, rel=1e-15)
    assert lp.spike(400) == pytest.approx(5.6)


def test_lan_statistic_trivial_cases():
    x = spike_centering(5.0, D400)
    stat = lan_statistic(x, 5.0, D400, 1, theta=0.07)
    assert stat.delta == 0
    assert stat.log_lr_lan == pytest.approx(-(0.07**2) * 548.4375 / 2)
    assert lan_statistic(17.0, 5.0, D400, 2, theta=0.0).log_lr_lan == 0


@settings(max_examples=50, deadline=None)
@given(lam=st.floats(14.5, 19.0), theta=st.floats(-0.2, 0.2), setting=st.sampled_from([1, 2]))
def test_lan_log_ratio_is_exactly_quadratic(lam, theta, setting):
    stat = lan_statistic(lam, 5.0, D400, setting, theta)
    assert stat.log_lr_lan == theta * stat.delta - theta**2 * stat.tau_sq / 2
    lp = LocalParam.from_theta(5.0, theta, D400, setting)
    coherent = lan_statistic(lam, 5.0, D400, setting, lp.gamma / lp.omega)
    assert coherent.log_lr_lan == pytest.approx(stat.log_lr_lan, abs=1e-12)


@pytest.mark.parametrize("closed", [loglr_closed_s1, loglr_closed_s2])
def test_closed_forms_vanish_at_the_null(closed):
    assert closed(0.0, 16.3, 5.0, D400) == 0.0


@pytest.mark.parametrize("closed", [loglr_closed_s1, loglr_closed_s2])
def test_closed_forms_reject_nonpositive_alternative(closed):
    with pytest.raises(DomainError):
        closed(-200.0, 16.3, 5.0, D400)


def test_a_functions_structure():
    u, v = kummer_uv(D400)
    lt, h = 0.94, 5.0
    a = a_functions(h, lt, u, v)
    assert a.a1 == (h + math.log(h)) / 2
    zeta = h * lt / 2
    assert a.root == pytest.approx(math.sqrt((zeta - v) ** 2 + 4 * u * zeta))
    z_plus = -a.a2
    assert z_plus * z_plus + (v - zeta) * z_plus - u * zeta == pytest.approx(0, abs=1e-12)


@pytest.fixture(scope="module")
def null_tops():
    return {s: [sample_top_eigenvalue(D400, SpikeSpec(s, (5.0,)), 31, r) for r in range(40)] for s in (1, 2)}


def test_closed_form_s2_matches_lan_quadratic(null_tops):
    lp = LocalParam.from_theta(5.0, 0.05, D400, 2)
    gaps = [
        loglr_closed_s2(lp.gamma, lam, 5.0, D400) - lan_statistic(lam, 5.0, D400, 2, lp.theta).log_lr_lan
        for lam in null_tops[2]
    ]
    assert np.mean(np.abs(gaps)) < 0.05


@pytest.mark.xfail(
    strict=True,
    reason="the closed form carries O(1) constant terms that bias its linear part by about 0.15 at p=400",
)
def test_closed_form_s1_matches_lan_quadratic(null_tops):
    lp = LocalParam.from_theta(5.0, 0.05, D400, 1)
    gaps = [
        loglr_closed_s1(lp.gamma, lam, 5.0, D400) - lan_statistic(lam, 5.0, D400, 1, lp.theta).log_lr_lan
        for lam in null_tops[1]
    ]
    assert np.mean(np.abs(gaps)) < 0.05


def _quadrature_gap(setting, theta, reps=4):
    closed = loglr_closed_s1 if setting == 1 else loglr_closed_s2
    lp = LocalParam.from_theta(5.0, theta, D400, setting)
    out = []
    for rep in range(reps):
        sample = sample_spiked_f(D400, SpikeSpec(setting, (5.0,)), 17, rep)
        exact = joint_log_density_ratio(sample, lp.spike(400), 5.0, setting)
        out.append(exact - closed(lp.gamma, sample.top, 5.0, D400))
    return np.abs(out)


def test_closed_form_s2_matches_quadrature():
    assert np.all(_quadrature_gap(2, 0.05) < 0.1)


@pytest.mark.xfail(strict=True, reason="same constant-term bias as the LAN comparison in the covariance model")
def test_closed_form_s1_matches_quadrature():
    assert np.all(_quadrature_gap(1, 0.05) < 0.05)


def test_efficient_test_centered_observation():
    res = efficient_test(spike_centering(5.0, D400), 5.0, 1, 0.05, D400)
    assert res.z == 0 and res.p_value_two_sided == 1.0
    assert not res.reject_one_sided and not res.reject_two_sided
    with pytest.raises(ConfigurationError):
        efficient_test(16.0, 5.0, 1, 1.5, D400)
    with pytest.raises(ConfigurationError):
        efficient_test(16.0, 5.0, 1)


def test_efficient_test_z_is_standardized_delta():
    res = efficient_test(17.0, 5.0, 2, 0.05, D400)
    stat = lan_statistic(17.0, 5.0, D400, 2)
    assert res.z == pytest.approx(stat.delta / math.sqrt(stat.tau_sq))
    assert res.p_value_one_sided == pytest.approx(norm.sf(res.z))


def test_spike_estimate_inverts_centering():
    assert estimate_spike(spike_centering(5.0, D400), D400) == pytest.approx(5.0, abs=1e-10)
    with pytest.raises(SeparationError):
        estimate_spike(13.0, D400)


def test_interval_contains_estimate_and_orders_settings():
    lam = 16.9
    ci1 = spike_confidence_interval(lam, 1, 0.95, D400)
    ci2 = spike_confidence_interval(lam, 2, 0.95, D400)
    assert ci1.low < ci1.h_hat < ci1.high
    assert ci1.h_hat == ci2.h_hat
    assert ci2.high - ci2.low < ci1.high - ci1.low


def test_sample_input_is_accepted():
    sample = sample_spiked_f(ModelDims(60, 120, 120, 1), SpikeSpec(1, (6.0,)), 2, 0)
    res = efficient_test(sample, 6.0, 1)
    assert res.alpha == 0.05


SHIFTS = (0.5, 1.0, 2.0)


@pytest.fixture(scope="module")
def one_sided_power():
    out = {}
    for setting in (1, 2):
        for shift in SHIFTS:
            lp = LocalParam.from_shift(5.0, shift, D400, setting)
            spikes = SpikeSpec(setting, (lp.spike(400),))
            rejects = [
                efficient_test(sample_top_eigenvalue(D400, spikes, 9, r), 5.0, setting, 0.05, D400).reject_one_sided
                for r in range(1000)
            ]
            out[setting, shift] = float(np.mean(rejects))
    return out


@pytest.mark.slow
def test_power_increases_with_local_shift(one_sided_power):
    for setting in (1, 2):
        powers = [one_sided_power[setting, s] for s in SHIFTS]
        assert powers[0] > 0.05 and np.all(np.diff(powers) > 0)


@pytest.mark.slow
@pytest.mark.xfail(reason="at p=400 the standardized statistic still drifts up by about 0.05, inflating power at small shifts")
def test_power_matches_gaussian_shift(one_sided_power):
    z_crit = norm.ppf(0.95)
    for (setting, shift), power in one_sided_power.items():
        assert power == pytest.approx(norm.cdf(shift - z_crit), abs=0.03)
