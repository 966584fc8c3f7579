from __future__ import annotations

import math
from dataclasses import replace

import numpy as np
import pytest

from spiked_fratio.analytics import AspectRatios, phase_threshold
from spiked_fratio.contour import (
    ContourKind,
    ContourSpec,
    DensityInput,
    _log_bulk_product,
    compact_edge,
    contour_integral_s1,
    contour_integral_s2,
    default_contour,
    joint_log_density_ratio,
    laplace_h0,
    laplace_h0_terms,
    laplace_r0_terms,
    laplace_s1,
    laplace_s2,
    laplace_z_factor,
    to_lambda_tilde,
)
from spiked_fratio.core import ModelDims, SpikeSpec, sample_spiked_f
from spiked_fratio.errors import BranchError, ConfigurationError, GeometryError, SeparationError


def _input(p: int, setting: int, rep: int = 0, seed: int = 5) -> DensityInput:
    dims = ModelDims(p, 2 * p, 2 * p, 1)
    return DensityInput.from_sample(sample_spiked_f(dims, SpikeSpec(setting, (5.0,)), seed, rep))


@pytest.fixture(scope="module")
def spectra():
    return {s: _input(100, s) for s in (1, 2)}


def test_compact_map():
    assert to_lambda_tilde(0.0, 1.0) == 0.0
    assert to_lambda_tilde(16.5, 1.0) == pytest.approx(0.942857, abs=1e-6)
    grid = to_lambda_tilde(np.linspace(0, 1e6, 50), 1.3)
    assert np.all(np.diff(grid) > 0) and np.all(grid < 1)


def test_density_input_requires_single_spike():
    dims = ModelDims(10, 20, 20, 2)
    with pytest.raises(ConfigurationError):
        DensityInput.from_values(np.linspace(5, 1, 10), dims)


def test_laplace_slope_benchmark_and_independent_assembly():
    assert laplace_h0(5, 0.5, 0.5) == pytest.approx(113.75 / 33, rel=1e-14)
    assert laplace_h0_terms(5, 0.5, 0.5) == pytest.approx(113.75 / 33, rel=1e-9)


@pytest.mark.parametrize("c1", [0.2, 0.5, 0.8])
@pytest.mark.parametrize("c2", [0.2, 0.5, 0.8])
def test_laplace_slope_positive_and_consistent(c1, c2):
    h_bar = phase_threshold(c1, c2)
    for h0 in np.linspace(h_bar * 1.05, 4 * h_bar, 6):
        slope = laplace_h0(h0, c1, c2)
        assert slope > 0
        assert laplace_h0_terms(h0, c1, c2) == pytest.approx(slope, rel=1e-8)
        assert laplace_r0_terms(h0, c1, c2) == pytest.approx(2 * c1 * slope / h0, rel=1e-8)


def test_setting_two_constants():
    assert laplace_z_factor(5, 0.5, 0.5) == pytest.approx(3.5 / math.sqrt(23.75), rel=1e-14)
    assert laplace_z_factor(5, 0.5, 0.5) == pytest.approx(0.718185, abs=1e-6)
    assert laplace_r0_terms(5, 0.5, 0.5) == pytest.approx(0.689394, abs=1e-6)


def test_default_contour_separates_top_eigenvalue(spectra):
    for setting, kind in ((1, ContourKind.SETTING_ONE_K), (2, ContourKind.SETTING_TWO_C)):
        inp = spectra[setting]
        spec = default_contour(inp, kind, 5.0)
        lt = inp.lambda_tilde
        assert max(compact_edge(inp.dims), lt[1]) < spec.x_tilde0 < lt[0] - spec.epsilon
        assert spec.epsilon == pytest.approx(0.05 * (lt[0] - lt[1]))


def test_invalid_geometry_rejected(spectra):
    inp = spectra[1]
    with pytest.raises(GeometryError):
        ContourSpec(ContourKind.SETTING_ONE_K, inp.lambda_tilde[0], 1e-3).validate(inp)
    spec = default_contour(inp, ContourKind.SETTING_ONE_K, 5.0)
    with pytest.raises(GeometryError):
        contour_integral_s2(inp, 5.0, spec)


@pytest.mark.parametrize("setting", [1, 2])
def test_contour_independence(spectra, setting):
    # Cauchy: moving the departure point inside its band leaves the value unchanged.
    inp = spectra[setting]
    kind = ContourKind.SETTING_ONE_K if setting == 1 else ContourKind.SETTING_TWO_C
    integral = contour_integral_s1 if setting == 1 else contour_integral_s2
    base = default_contour(inp, kind, 5.0)
    lower = max(compact_edge(inp.dims), inp.lambda_tilde[1])
    shifted = replace(base, x_tilde0=base.x_tilde0 + 0.2 * (inp.lambda_tilde[0] - base.epsilon - base.x_tilde0))
    a = integral(inp, 5.0, base).log_value
    b = integral(inp, 5.0, shifted).log_value
    assert shifted.x_tilde0 > lower
    assert a.log_abs == pytest.approx(b.log_abs, abs=1e-6)
    assert a.phase == pytest.approx(b.phase, abs=1e-9)


@pytest.mark.parametrize("setting", [1, 2])
def test_quadrature_refinement_converges(spectra, setting):
    integral = contour_integral_s1 if setting == 1 else contour_integral_s2
    res = integral(spectra[setting], 5.0)
    assert res.refinement_change < 1e-6
    assert res.log_value.phase == pytest.approx(math.copysign(math.pi / 2, res.log_value.phase))


def test_phase_bookkeeping_on_closed_loop(spectra):
    lt = np.asarray(spectra[1].lambda_tilde)
    gap = lt[0] - lt[1]
    center = lt[0] + 0.6j * gap
    loop = center + 0.3 * gap * np.exp(1j * np.linspace(0, 2 * np.pi, 400))
    logs = _log_bulk_product(loop, lt)
    assert logs[-1] == pytest.approx(logs[0], abs=1e-12)


def test_crossing_a_branch_cut_is_detected(spectra):
    lt = np.asarray(spectra[1].lambda_tilde)
    path = -0.5 + np.array([0.1j, -0.1j])
    with pytest.raises(BranchError):
        _log_bulk_product(path, lt)


def test_laplace_rejects_subcritical_null(spectra):
    with pytest.raises(SeparationError):
        laplace_s1(spectra[1], 2.0)


@pytest.mark.parametrize("setting", [1, 2])
def test_density_ratio_identities(spectra, setting):
    inp = spectra[setting]
    assert joint_log_density_ratio(inp, 5.0, 5.0, setting) == 0.0
    forward = joint_log_density_ratio(inp, 5.4, 5.0, setting)
    backward = joint_log_density_ratio(inp, 5.0, 5.4, setting)
    assert forward == pytest.approx(-backward, abs=1e-10)


@pytest.mark.parametrize("setting", [1, 2])
def test_quadrature_and_laplace_log_ratios_agree_at_p400(setting):
    inp = _input(400, setting, rep=1)
    h1 = 5.0 + 1 / math.sqrt(400)
    quad = joint_log_density_ratio(inp, h1, 5.0, setting, "quadrature")
    lap = joint_log_density_ratio(inp, h1, 5.0, setting, "laplace")
    assert abs(quad - lap) < 0.05


@pytest.mark.parametrize("setting", [1, 2])
def test_laplace_reports_constants(spectra, setting):
    res = (laplace_s1 if setting == 1 else laplace_s2)(spectra[setting], 5.0)
    assert res.H0 == pytest.approx(laplace_h0(5.0, 0.5, 0.5))
    if setting == 2:
        assert res.R0 == pytest.approx(2 * 0.5 * res.H0 / 5.0, rel=1e-10)
        assert res.Z_pn_h0 == pytest.approx(0.718185, abs=1e-6)
