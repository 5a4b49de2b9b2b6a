"""Sine-basis transforms, norms, and batched functionals."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from burgershuxley.spectral import (
    PhysicalField,
    SpectralField,
    batch_h1_sq,
    batch_l2,
    batch_l4_p4,
    coeffs_to_grid,
    eigenvalue,
    eigenvalues,
    grid_to_coeffs,
    inner_product,
    interior_grid,
    norms,
    to_physical,
    to_spectral,
)


def test_eigenvalues():
    assert eigenvalue(1) == pytest.approx(np.pi ** 2)
    assert eigenvalue(3) == pytest.approx(9 * np.pi ** 2)
    np.testing.assert_allclose(eigenvalues(4),
                               np.pi ** 2 * np.array([1.0, 4.0, 9.0, 16.0]))


def test_single_mode_on_grid():
    # e_2(x) = sqrt(2) sin(2 pi x), sampled exactly
    vals = coeffs_to_grid(np.array([0.0, 1.0]), 64)
    x = interior_grid(64)
    np.testing.assert_allclose(vals, np.sqrt(2) * np.sin(2 * np.pi * x),
                               atol=1e-14)


def test_transform_round_trip():
    rng = np.random.default_rng(3)
    coeffs = rng.normal(size=16)
    back = grid_to_coeffs(coeffs_to_grid(coeffs, 64), 16)
    np.testing.assert_allclose(back, coeffs, atol=1e-13)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=1, max_value=32), st.integers(min_value=0, max_value=9999))
def test_round_trip_any_size(n, seed):
    rng = np.random.default_rng(seed)
    coeffs = rng.normal(size=n)
    grid = max(2 * n, 8)
    back = grid_to_coeffs(coeffs_to_grid(coeffs, grid), n)
    np.testing.assert_allclose(back, coeffs, atol=1e-12)


def test_l2_is_parseval():
    rng = np.random.default_rng(7)
    coeffs = rng.normal(size=12)
    u = SpectralField(coeffs)
    assert u.l2() == pytest.approx(np.linalg.norm(coeffs), rel=1e-14)


def test_h1_norm_single_mode():
    # |e_k'|_L2^2 = k^2 pi^2
    u = SpectralField(np.array([0.0, 0.0, 1.0]))
    assert norms(u)["h1"] ** 2 == pytest.approx(9 * np.pi ** 2, rel=1e-13)


def test_inner_product_orthonormality():
    e1 = SpectralField(np.array([1.0, 0.0]))
    e2 = SpectralField(np.array([0.0, 1.0]))
    assert inner_product(e1, e2) == pytest.approx(0.0, abs=1e-15)
    assert inner_product(e1, e1) == pytest.approx(1.0)


def test_l4_against_dense_quadrature():
    rng = np.random.default_rng(11)
    coeffs = rng.normal(size=16)
    vals = coeffs_to_grid(coeffs, 200001)
    dense = np.sum(vals ** 4) / 200002
    assert norms(SpectralField(coeffs))["l4"] ** 4 == pytest.approx(dense, rel=1e-8)


def test_l4_quadrature_is_exact_at_double_resolution():
    # u^4 is a cosine polynomial of bandwidth 4N, integrated exactly by the
    # interior trapezoid rule once the grid resolves it
    rng = np.random.default_rng(13)
    coeffs = rng.normal(size=8)
    a = batch_l4_p4(coeffs, grid_size=16)
    b = batch_l4_p4(coeffs, grid_size=1024)
    assert a == pytest.approx(b, rel=1e-12)


def test_batch_functionals_match_scalar():
    rng = np.random.default_rng(17)
    coeffs = rng.normal(size=(5, 10))
    for i in range(5):
        u = SpectralField(coeffs[i])
        assert batch_l2(coeffs)[i] == pytest.approx(u.l2())
        assert batch_h1_sq(coeffs)[i] == pytest.approx(norms(u)["h1"] ** 2)
        assert batch_l4_p4(coeffs)[i] == pytest.approx(norms(u)["l4"] ** 4)


def test_physical_spectral_round_trip():
    rng = np.random.default_rng(19)
    u = SpectralField(rng.normal(size=8))
    phys = to_physical(u, 32)
    assert isinstance(phys, PhysicalField)
    back = to_spectral(phys, 8)
    np.testing.assert_allclose(back.coeffs, u.coeffs, atol=1e-13)