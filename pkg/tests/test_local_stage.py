"""Local stage: constitutive identities, integration accuracy, dual recovery."""

import numpy as np
import pytest

from latinflow.constitutive import (
    VOIGT_ID,
    Material,
    build_search_directions,
    voigt_viscosity,
)
from latinflow.errors import SolverError
from latinflow.local_stage import (
    LocalInputs,
    compute_local_inputs,
    solve_local_stage,
    solve_rho_hat,
    solve_v_hat,
)


@pytest.fixture(scope="module")
def material():
    return Material(mu=1.0, lam=1000.0)


@pytest.fixture(scope="module")
def sd(material):
    return build_search_directions(material, L_c=2.5, T=5e-3)


def _random_inputs(rng, nt=12, ngp=9):
    return LocalInputs(
        A_bar=rng.standard_normal((nt, ngp, 3)),
        beta_bar=rng.standard_normal((nt, ngp, 2)),
        delta_bar=rng.standard_normal((nt, ngp, 2)),
        gamma_bar=rng.standard_normal((nt, ngp)) + 2.0,
    )


def test_constitutive_identities_hold(material, sd):
    # the hatted fields must satisfy the constitutive relations exactly:
    # sigma = V eps - p(rho) I,  W = rho v,  and each dual sits on the
    # ascending search direction through the bar inputs
    rng = np.random.default_rng(5)
    inputs = _random_inputs(rng)
    dt = 5e-5
    hist = solve_local_stage(inputs, material, sd, dt)

    v = voigt_viscosity(material)
    p = material.r * material.T0 * hist.rho_hat
    sigma_law = hist.eps_hat @ v.T - p[..., None] * VOIGT_ID
    assert np.allclose(hist.sigma_hat, sigma_law, atol=1e-11)

    w_law = hist.rho_hat[..., None] * hist.v_hat
    assert np.allclose(hist.W_hat, w_law, atol=1e-11)


def test_search_direction_identities(material, sd):
    # hat minus bar along each variable pair obeys the ascending direction
    rng = np.random.default_rng(6)
    inputs = _random_inputs(rng)
    hist = solve_local_stage(inputs, material, sd, 5e-5)
    assert np.allclose(
        hist.sigma_hat + hist.eps_hat @ sd.H_eps_sigma.T, inputs.A_bar, atol=1e-11
    )
    assert np.allclose(hist.Gamma_hat + sd.H_v_gamma * hist.v_hat, inputs.beta_bar, atol=1e-11)
    assert np.allclose(hist.W_hat + sd.H_zw * hist.z_hat, inputs.delta_bar, atol=1e-11)
    assert np.allclose(hist.q_hat + sd.H_rho_q * hist.rho_hat, inputs.gamma_bar, atol=1e-11)


def test_density_evolution_identity(material, sd):
    # backward-Euler residual of d(rho)/dt = q with q from the dual update
    rng = np.random.default_rng(7)
    inputs = _random_inputs(rng, nt=8)
    dt = 1e-4
    hist = solve_local_stage(inputs, material, sd, dt)
    drho = (hist.rho_hat[1:] - hist.rho_hat[:-1]) / dt
    assert np.allclose(drho, hist.q_hat[1:], atol=1e-9)


def test_momentum_evolution_identity(material, sd):
    # backward-Euler residual of rho dv/dt = Gamma
    rng = np.random.default_rng(8)
    inputs = _random_inputs(rng, nt=8)
    dt = 1e-4
    hist = solve_local_stage(inputs, material, sd, dt)
    dv = (hist.v_hat[1:] - hist.v_hat[:-1]) / dt
    lhs = hist.rho_hat[1:, :, None] * dv
    assert np.allclose(lhs, hist.Gamma_hat[1:], atol=1e-9)


def test_initial_conditions(material, sd):
    rng = np.random.default_rng(9)
    inputs = _random_inputs(rng)
    hist = solve_local_stage(inputs, material, sd, 5e-5)
    assert np.allclose(hist.rho_hat[0], material.rho0)
    assert np.all(hist.v_hat[0] == 0.0)


def test_local_inputs_round_trip(material, sd):
    # bar combinations of a consistent state reproduce that state exactly
    rng = np.random.default_rng(10)
    eps = rng.standard_normal((6, 4, 3))
    sigma = rng.standard_normal((6, 4, 3))
    v = rng.standard_normal((6, 4, 2))
    gam = rng.standard_normal((6, 4, 2))
    z = rng.standard_normal((6, 4, 2))
    w = rng.standard_normal((6, 4, 2))
    rho = rng.standard_normal((6, 4))
    q = rng.standard_normal((6, 4))
    inputs = compute_local_inputs(eps, sigma, v, gam, z, w, rho, q, sd)
    assert np.allclose(inputs.A_bar, sigma + eps @ sd.H_eps_sigma.T)
    assert np.allclose(inputs.beta_bar, gam + sd.H_v_gamma * v)
    assert np.allclose(inputs.delta_bar, w + sd.H_zw * z)
    assert np.allclose(inputs.gamma_bar, q + sd.H_rho_q * rho)


def test_local_inputs_shape_mismatch(sd):
    a = np.zeros((3, 4, 3))
    v = np.zeros((3, 4, 2))
    s = np.zeros((3, 4))
    with pytest.raises(SolverError, match="shape"):
        compute_local_inputs(a, a, v, v, v, v, s, np.zeros((3, 5)), sd)


def test_rho_hat_rejects_bad_dt():
    with pytest.raises(ValueError):
        solve_rho_hat(np.zeros((3, 2)), 1.0, 0.0, 10.0)


def test_v_hat_rejects_singular_recursion():
    beta = np.zeros((3, 2, 2))
    rho = np.full((3, 2), -1.0)
    with pytest.raises(SolverError, match="singular"):
        solve_v_hat(beta, rho, 1e-3, 100.0)


def test_negative_density_warns(material, sd):
    inputs = LocalInputs(
        A_bar=np.zeros((40, 2, 3)),
        beta_bar=np.zeros((40, 2, 2)),
        delta_bar=np.zeros((40, 2, 2)),
        gamma_bar=np.full((40, 2), -0.05),
    )
    with pytest.warns(RuntimeWarning, match="non-positive density"):
        solve_local_stage(inputs, material, sd, 5e-5)


def test_loc_combinations(material, sd):
    # the descending combinations feed the next global stage: hat duals
    # minus H times hat primals
    rng = np.random.default_rng(11)
    inputs = _random_inputs(rng)
    hist = solve_local_stage(inputs, material, sd, 5e-5)
    assert np.allclose(hist.A_loc, hist.sigma_hat - hist.eps_hat @ sd.H_eps_sigma.T)
    assert np.allclose(hist.beta_loc, hist.Gamma_hat - sd.H_v_gamma * hist.v_hat)
    assert np.allclose(hist.delta_loc, hist.W_hat - sd.H_zw * hist.z_hat)
    assert np.allclose(hist.gamma_loc, hist.q_hat - sd.H_rho_q * hist.rho_hat)
