from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spiked_fratio.core import (
    EigenSample,
    ModelDims,
    SecularFunction,
    Setting,
    SpikeSpec,
    bartlett_factor,
    canonical_eigs,
    generalized_eigs,
    replication_rng,
    sample_factor_model,
    sample_spiked_f,
    sample_top_eigenvalue,
    secular_eval,
    secular_roots,
)
from spiked_fratio.errors import ConfigurationError, DomainError


def test_dims_derived_quantities():
    d = ModelDims(200, 400, 400, 1)
    assert d.n_a == 401
    assert d.c1 == 0.5 and d.c2 == 0.5
    assert d.alpha == 401 / 400


@pytest.mark.parametrize(
    "args",
    [(1, 10, 10, 0), (10, 10, 20, 0), (10, 20, 10, 0), (10, 20, 20, -1), (2.5, 20, 20, 0)],
)
def test_dims_rejects_invalid(args):
    with pytest.raises(ConfigurationError):
        ModelDims(*args)


@pytest.mark.parametrize("h", [(3.0, 5.0), (5.0, 5.0), (0.0,), (-1.0,), (np.inf,)])
def test_spikes_must_be_positive_and_descending(h):
    with pytest.raises(ConfigurationError):
        SpikeSpec(1, h)


@pytest.mark.parametrize("raw,expected", [(1, Setting.COVARIANCE), ("2", Setting.NONCENTRALITY), ("noncentrality", Setting.NONCENTRALITY)])
def test_setting_parse(raw, expected):
    assert Setting.parse(raw) is expected


def test_setting_parse_unknown():
    with pytest.raises(ConfigurationError):
        Setting.parse(3)


def test_replication_streams_are_deterministic_and_distinct():
    a = replication_rng(7, 3).standard_normal(5)
    b = replication_rng(7, 3).standard_normal(5)
    c = replication_rng(7, 4).standard_normal(5)
    assert np.array_equal(a, b)
    assert not np.allclose(a, c)


def test_bartlett_factor_has_wishart_mean():
    # E[T T'] = df I for T T' ~ W_p(df, I).
    p, df, reps = 4, 9, 4000
    rng = np.random.default_rng(1)
    acc = np.zeros((p, p))
    for _ in range(reps):
        t = bartlett_factor(rng, p, df)
        acc += t @ t.T
    assert np.allclose(acc / reps, df * np.eye(p), atol=0.35)


def test_generalized_eigs_matches_dense_inverse():
    rng = np.random.default_rng(2)
    x = rng.standard_normal((6, 10))
    y = rng.standard_normal((6, 12))
    a, b = x @ x.T, y @ y.T
    oracle = np.sort(np.linalg.eigvals(np.linalg.solve(b, a)).real)[::-1]
    assert np.allclose(generalized_eigs(a, b), oracle, rtol=1e-10)


@pytest.mark.parametrize("setting", [1, 2])
def test_samples_are_bit_reproducible(setting):
    d = ModelDims(30, 60, 70, 1)
    s = SpikeSpec(setting, (4.0,))
    a = sample_spiked_f(d, s, 11, 5)
    b = sample_spiked_f(d, s, 11, 5)
    assert np.array_equal(a.values, b.values)
    assert a.values.flags.writeable is False


@pytest.mark.parametrize("setting", [1, 2])
@pytest.mark.parametrize("p", [20, 80])
def test_top_eigenvalue_shortcut_matches_full_spectrum(setting, p):
    d = ModelDims(p, 2 * p, 2 * p, 1)
    s = SpikeSpec(setting, (5.0,))
    for rep in range(3):
        full = sample_spiked_f(d, s, 3, rep).top
        assert sample_top_eigenvalue(d, s, 3, rep) == pytest.approx(full, rel=1e-9)


def test_canonical_eigs_match_dense_oracle():
    d = ModelDims(15, 30, 40, 2)
    draw = sample_factor_model(d, SpikeSpec(1, (6.0, 2.0)), 4, 0)
    lhs = draw.xi @ draw.xi.T / d.n1 + draw.H
    oracle = np.sort(np.linalg.eigvals(np.linalg.solve(draw.E, lhs)).real)[::-1] * d.n1 / d.n_a
    assert np.allclose(canonical_eigs(draw, d), oracle, rtol=1e-9)


def test_noncentrality_model_uses_deterministic_factor_gram():
    d = ModelDims(10, 20, 20, 2)
    draw = sample_factor_model(d, SpikeSpec(2, (3.0, 1.0)), 0, 0)
    assert np.array_equal(draw.w_f, d.n_a * np.eye(2))


def test_factor_buffers_are_column_major_with_shape():
    d = ModelDims(5, 10, 12, 1)
    draw = sample_factor_model(d, SpikeSpec(1, (2.0,)), 0, 0)
    buf = draw.to_buffers()["H"]
    rebuilt = np.asarray(buf["data"]).reshape(buf["shape"], order="F")
    assert buf["order"] == "F"
    assert np.array_equal(rebuilt, draw.H)


def test_eigen_sample_validation():
    d = ModelDims(3, 6, 6, 0)
    with pytest.raises(ConfigurationError):
        EigenSample(np.array([1.0, 2.0, 0.5]), d, SpikeSpec(1, ()), 0, 0)
    with pytest.raises(ConfigurationError):
        EigenSample(np.array([2.0, 1.0]), d, SpikeSpec(1, ()), 0, 0)


def test_no_spike_gives_no_secular_roots():
    d = ModelDims(10, 20, 20, 0)
    draw = sample_factor_model(d, SpikeSpec(1, ()), 0, 0)
    assert secular_roots(SecularFunction(draw, d, SpikeSpec(1, ()))).size == 0


def test_secular_eval_matches_cached_branches():
    d = ModelDims(12, 24, 30, 2)
    spikes = SpikeSpec(2, (8.0, 3.0))
    sf = SecularFunction(sample_factor_model(d, spikes, 1, 0), d, spikes)
    x = sf.mu1 + 0.7
    assert np.allclose(np.linalg.eigvalsh(secular_eval(sf, x)), sf.branches(x), rtol=1e-10)
    with pytest.raises(DomainError):
        secular_eval(sf, sf.mu1 - 0.1)


@settings(max_examples=25, deadline=None)
@given(
    seed=st.integers(0, 10_000),
    k=st.integers(1, 3),
    setting=st.sampled_from([1, 2]),
    scale=st.floats(0.2, 3.0),
)
def test_secular_roots_are_dense_eigenvalues_above_the_bulk(seed, k, setting, scale):
    d = ModelDims(20, 40, 45, k)
    h = tuple(scale * 3.0 * (k - i) for i in range(k))
    spikes = SpikeSpec(setting, h)
    draw = sample_factor_model(d, spikes, seed, 0)
    sf = SecularFunction(draw, d, spikes)
    roots = secular_roots(sf)
    dense = canonical_eigs(draw, d) * d.n_a / d.n1
    above = dense[dense > sf.mu1 * (1 + 1e-9)]
    assert np.all(np.diff(roots) < 0)
    assert roots.size == above.size
    assert np.allclose(roots, above, rtol=1e-8)
