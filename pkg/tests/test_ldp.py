"""Rate function, skeleton maps, exit-cost minimizer."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from burgershuxley import ldp
from burgershuxley.noise import AdditiveNoise, CovarianceSpec
from burgershuxley.params import ModelParams
from burgershuxley.solver import SolverConfig, integrate
from burgershuxley.spectral import SpectralField

COV = CovarianceSpec.power_law(8)


def test_control_path_validation():
    with pytest.raises(ValueError):
        ldp.ControlPath(np.array([0.1, 0.5]), np.ones((1, 4)))  # not from 0
    with pytest.raises(ValueError):
        ldp.ControlPath(np.array([0.0, 0.5, 0.4]), np.ones((2, 4)))
    with pytest.raises(ValueError):
        ldp.ControlPath(np.array([0.0, 1.0]), np.ones((3, 4)))


def test_rate_cost_zero_control():
    h = ldp.ControlPath.uniform(1.0, np.zeros((4, 8)))
    assert ldp.rate_cost(h, COV) == 0.0


def test_rate_cost_single_mode_oracle():
    # constant control c on mode 1 over [0,T]: cost = T c^2 / (2 mu_1)
    h = ldp.ControlPath.uniform(2.0, np.array([[3.0] + [0.0] * 7]))
    assert ldp.rate_cost(h, COV) == pytest.approx(2.0 * 9.0 / 2.0)


def test_rate_cost_piecewise_matches_exact_sum():
    rng = np.random.default_rng(4)
    bp = np.array([0.0, 0.25, 0.3, 0.9, 1.0])
    vals = rng.normal(size=(4, 8))
    h = ldp.ControlPath(bp, vals)
    expect = 0.5 * sum(
        (bp[i + 1] - bp[i]) * np.sum(vals[i] ** 2 / COV.mus)
        for i in range(4))
    assert ldp.rate_cost(h, COV) == pytest.approx(expect, rel=1e-12, abs=1e-10)


def test_rate_cost_zero_mu_mode_is_infinite():
    cov = CovarianceSpec(np.array([1.0, 0.0]))
    h = ldp.ControlPath.uniform(1.0, np.array([[0.0, 1.0]]))
    assert ldp.rate_cost(h, cov) == np.inf
    # but zero mass on the dead mode stays finite
    h2 = ldp.ControlPath.uniform(1.0, np.array([[1.0, 0.0]]))
    assert np.isfinite(ldp.rate_cost(h2, cov))


@settings(max_examples=30, deadline=None)
@given(st.floats(min_value=-10, max_value=10, allow_nan=False))
def test_rate_cost_quadratic_scaling(c):
    rng = np.random.default_rng(8)
    vals = rng.normal(size=(3, 8))
    h = ldp.ControlPath.uniform(1.0, vals)
    hc = ldp.ControlPath.uniform(1.0, c * vals)
    assert ldp.rate_cost(hc, COV) == pytest.approx(
        c ** 2 * ldp.rate_cost(h, COV), rel=1e-9, abs=1e-12)


def test_zero_control_is_deterministic_flow():
    p = ModelParams(nu=0.5, alpha=1.0, beta=1.0, gamma=0.5)
    u0 = SpectralField.from_function(lambda x: np.sin(np.pi * x), 8)
    cfg = SolverConfig(n_modes=8, dt=1e-3, t_end=0.3)
    ev = ldp.theta_of_control(ldp.ControlPath.uniform(0.3, np.zeros((2, 8))),
                              u0, p, cfg, COV)
    det = integrate(u0, cfg, p, AdditiveNoise(0.0), COV, (0, 0))
    np.testing.assert_array_equal(ev.image.coeffs, det.coeffs)
    assert ev.cost == 0.0
    assert np.all(ev.skeleton.coeffs == 0.0)


def test_linear_case_superposition():
    # alpha = beta = 0: image = heat flow of u0 plus the controlled z
    p = ModelParams(nu=1.0)
    u0 = SpectralField.basis(2, 8)
    cfg = SolverConfig(n_modes=8, dt=1e-3, t_end=0.5)
    rng = np.random.default_rng(14)
    h = ldp.ControlPath.uniform(0.5, rng.normal(size=(4, 8)))
    ev = ldp.theta_of_control(h, u0, p, cfg, COV)
    heat = integrate(u0, cfg, p, AdditiveNoise(0.0), COV, (0, 0))
    np.testing.assert_allclose(ev.image.coeffs,
                               ev.skeleton.coeffs + heat.coeffs, atol=1e-12)


def test_psi_map_stability_in_delta():
    # perturbing the control by delta moves the image linearly in delta
    p = ModelParams(nu=0.5, alpha=1.0, beta=1.0, gamma=0.5)
    u0 = SpectralField.from_function(lambda x: np.sin(np.pi * x), 8)
    cfg = SolverConfig(n_modes=8, dt=1e-3, t_end=0.5)
    rng = np.random.default_rng(15)
    base_vals = rng.normal(size=(4, 8))
    direction = rng.normal(size=(4, 8))
    base = ldp.theta_of_control(ldp.ControlPath.uniform(0.5, base_vals),
                                u0, p, cfg, COV)
    shifts = []
    deltas = [1e-2, 1e-3, 1e-4]
    for d in deltas:
        pert = ldp.theta_of_control(
            ldp.ControlPath.uniform(0.5, base_vals + d * direction),
            u0, p, cfg, COV)
        shifts.append(np.max(np.abs(pert.image.coeffs - base.image.coeffs)))
    slopes = np.array(shifts) / np.array(deltas)
    assert np.max(slopes) / np.min(slopes) < 2.0


def test_control_json_round_trip():
    rng = np.random.default_rng(16)
    h = ldp.ControlPath(np.array([0.0, 0.3, 1.0]), rng.normal(size=(2, 5)))
    back = ldp.ControlPath.from_json(h.to_json())
    np.testing.assert_array_equal(back.breakpoints, h.breakpoints)
    np.testing.assert_array_equal(back.values, h.values)


def test_sample_on_steps_piecewise():
    h = ldp.ControlPath(np.array([0.0, 0.5, 1.0]),
                        np.array([[1.0, 0.0], [2.0, 0.0]]))
    cfg = SolverConfig(n_modes=2, dt=0.25, t_end=1.0)
    out = h.sample_on_steps(cfg)
    np.testing.assert_array_equal(out[:, 0], [1.0, 1.0, 2.0, 2.0])


def test_minimizer_trivial_when_flow_already_exits():
    # starting far outside the ball costs nothing
    p = ModelParams(nu=1.0)
    u0 = SpectralField(np.array([5.0] + [0.0] * 7))
    out = ldp.minimize_rate_to_exit(1.0, 0.2, u0, p, COV, budget=50,
                                    n_intervals=2, dt=1e-2)
    assert out["J_hat"] == 0.0
    assert out["certificate"]


def test_minimizer_rejects_oversized_table():
    p = ModelParams(nu=1.0)
    with pytest.raises(ValueError):
        ldp.minimize_rate_to_exit(1.0, 1.0, SpectralField.zeros(8), p, COV,
                                  n_intervals=32)


def test_minimizer_infeasible_with_dead_noise():
    cov = CovarianceSpec(np.zeros(8))
    p = ModelParams(nu=1.0)
    out = ldp.minimize_rate_to_exit(1.0, 0.5, SpectralField.zeros(8), p, cov,
                                    budget=30, n_intervals=2, dt=1e-2)
    assert not out["feasible"]
    assert out["J_hat"] == np.inf


def test_gramian_formula():
    # nu lam -> 0 limit: G ~ mu T, so the cost approaches r^2/(2 mu T)
    val = ldp.min_energy_to_reach(2.0, 1e-9, 0.5, 1.0)
    assert val == pytest.approx(4.0 / (2 * 0.5), rel=1e-4)


def test_scaling_rejects_bad_eps_grid():
    p = ModelParams(nu=1.0)
    with pytest.raises(ValueError):
        ldp.small_noise_scaling([0.1, 0.2], 1.0, SpectralField.zeros(8), p,
                                COV, n_paths=10)