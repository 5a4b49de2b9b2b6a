"""Q-Wiener increments, coefficient hypotheses, and RNG streams."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from burgershuxley.noise import (
    AdditiveNoise,
    CovarianceSpec,
    MultiplicativeNoise,
    hypothesis_margins,
    stream,
)


def test_power_law_trace():
    cov = CovarianceSpec.power_law(4)
    np.testing.assert_allclose(cov.mus, [1.0, 0.25, 1 / 9, 1 / 16])
    assert cov.trace == pytest.approx(1 + 0.25 + 1 / 9 + 1 / 16)
    assert cov.op_norm == pytest.approx(1.0)


def test_rejects_negative_eigenvalues():
    with pytest.raises(ValueError):
        CovarianceSpec(np.array([1.0, -0.1]))
    with pytest.raises(ValueError):
        CovarianceSpec(np.array([np.inf]))


def test_zero_eigenvalue_allowed():
    # modes outside the noise support are legal; they just never move
    cov = CovarianceSpec(np.array([1.0, 0.0]))
    rng = np.random.default_rng(0)
    dw = cov.sample_increment(0.1, rng, n_paths=1000)
    assert np.all(dw[:, 1] == 0.0)


def test_increment_statistics():
    cov = CovarianceSpec.power_law(6)
    rng = np.random.default_rng(12)
    dt = 0.01
    dw = cov.sample_increment(dt, rng, n_paths=200000)
    var = np.var(dw, axis=0)
    np.testing.assert_allclose(var, cov.mus * dt, rtol=0.02)


def test_increment_rejects_bad_dt():
    cov = CovarianceSpec.power_law(3)
    with pytest.raises(ValueError):
        cov.sample_increment(0.0, np.random.default_rng(0))


def test_streams_reproducible_and_distinct():
    a = stream(42, 0).standard_normal(8)
    b = stream(42, 0).standard_normal(8)
    c = stream(42, 1).standard_normal(8)
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)


def test_stream_split_invariance():
    # drawing in blocks gives the same numbers as one big draw; the solver's
    # time-blocked noise depends on this
    whole = stream(7, 3).standard_normal(100)
    rng = stream(7, 3)
    parts = np.concatenate([rng.standard_normal(30), rng.standard_normal(50),
                            rng.standard_normal(20)])
    np.testing.assert_array_equal(whole, parts)


def test_additive_constants():
    cov = CovarianceSpec.power_law(4)
    coef = AdditiveNoise(0.5)
    assert coef.growth_const(cov) == pytest.approx(0.25 * cov.trace)
    assert coef.lipschitz_const(cov) == 0.0
    dw = np.ones(4)
    np.testing.assert_allclose(coef.apply(np.zeros(4), dw), 0.5 * dw)


def test_multiplicative_gains_bounded():
    coef = MultiplicativeNoise(0.3, 0.2)
    a = np.linspace(-50, 50, 101)
    g = coef.gains(a)
    assert np.all(np.abs(g) <= 0.5 + 1e-15)
    cov = CovarianceSpec.power_law(4)
    assert coef.growth_const(cov) == pytest.approx(0.25 * cov.trace)
    assert coef.lipschitz_const(cov) == pytest.approx(0.04 * cov.op_norm)


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=0, max_value=10 ** 6))
def test_hypothesis_margins_respected(seed):
    rng = np.random.default_rng(seed)
    cov = CovarianceSpec.power_law(6)
    coef = MultiplicativeNoise(0.4, 0.7)
    pairs = rng.normal(size=(20, 2, 6))
    out = hypothesis_margins(coef, cov, pairs)
    assert out["K_emp"] <= out["K"] + 1e-12
    assert out["L_emp"] <= out["L"] + 1e-12


def test_hs_norm_additive_vs_multiplicative():
    cov = CovarianceSpec.power_law(5)
    u = np.zeros(5)
    add = AdditiveNoise(1.0)
    mul = MultiplicativeNoise(1.0, 0.0)
    # with c1 = 0 the multiplicative coefficient degenerates to additive
    assert add.hs_norm_sq(u, cov) == pytest.approx(mul.hs_norm_sq(u, cov))