"""Iterative driver: indicators, determinism, both global-stage paths."""

import dataclasses

import numpy as np
import pytest

from latinflow.constitutive import build_search_directions
from latinflow.driver import IterationRecord, Solution, indicators, run_latin
from latinflow.errors import DivergenceError, SolverError
from latinflow.local_stage import GaussHistory
from latinflow.oracles import monolithic_solve

from conftest import relative_error


def _hist_like(problem, rho_gp, eps_gp):
    nt, ngp = rho_gp.shape
    zeros_v = np.zeros((nt, ngp, 2))
    return GaussHistory(
        rho_hat=rho_gp, v_hat=zeros_v, eps_hat=eps_gp, z_hat=zeros_v,
        sigma_hat=np.zeros((nt, ngp, 3)), Gamma_hat=zeros_v, W_hat=zeros_v,
        q_hat=np.zeros((nt, ngp)), sd=problem.sd,
    )


class TestIndicators:
    def test_identical_stages_give_zero(self, channel_problem):
        p = channel_problem
        nt, ngp = p.n_times, p.gd.n_gp
        rng = np.random.default_rng(0)
        rho = rng.standard_normal((nt, ngp))
        eps = rng.standard_normal((nt, ngp, 3))
        hist = _hist_like(p, rho, eps)
        eta_v, eta_rho = indicators(p, hist, rho, eps)
        assert eta_v == 0.0
        assert eta_rho == 0.0

    def test_doubled_field_ratio(self, channel_problem):
        # |2a - a| / sqrt((|2a|^2 + |a|^2)/2) = 1/sqrt(2.5) = 0.63246
        p = channel_problem
        nt, ngp = p.n_times, p.gd.n_gp
        rng = np.random.default_rng(1)
        rho = rng.standard_normal((nt, ngp))
        eps = rng.standard_normal((nt, ngp, 3))
        hist = _hist_like(p, rho, eps)
        eta_v, eta_rho = indicators(p, hist, 2.0 * rho, 2.0 * eps)
        assert np.isclose(eta_v, 1.0 / np.sqrt(2.5), rtol=1e-12)
        assert np.isclose(eta_rho, 1.0 / np.sqrt(2.5), rtol=1e-12)

    def test_zero_fields_give_zero(self, channel_problem):
        p = channel_problem
        nt, ngp = p.n_times, p.gd.n_gp
        zero_r = np.zeros((nt, ngp))
        zero_e = np.zeros((nt, ngp, 3))
        hist = _hist_like(p, zero_r, zero_e)
        eta_v, eta_rho = indicators(p, hist, zero_r, zero_e)
        assert eta_v == 0.0 and eta_rho == 0.0

    def test_initial_step_carries_no_weight(self, channel_problem):
        # differences confined to t = 0 are invisible to the indicators
        p = channel_problem
        nt, ngp = p.n_times, p.gd.n_gp
        rng = np.random.default_rng(2)
        rho = rng.standard_normal((nt, ngp))
        eps = rng.standard_normal((nt, ngp, 3))
        hist = _hist_like(p, rho, eps)
        rho2, eps2 = rho.copy(), eps.copy()
        rho2[0] += 100.0
        eps2[0] += 100.0
        eta_v, eta_rho = indicators(p, hist, rho2, eps2)
        assert eta_v == 0.0 and eta_rho == 0.0


class TestRunLatin:
    @pytest.fixture(scope="class")
    def monolithic(self, channel_problem):
        return monolithic_solve(channel_problem)

    def test_history_and_metadata(self, channel_problem):
        sol = run_latin(channel_problem, max_iterations=5, path="pgd")
        assert len(sol.history) == 5
        assert [r.iteration for r in sol.history] == [1, 2, 3, 4, 5]
        assert all(isinstance(r, IterationRecord) for r in sol.history)
        assert sol.history[-1].wall_seconds > 0
        assert sol.n_modes_v == sol.pgd_v.n_modes
        assert not sol.converged

    def test_initial_and_boundary_conditions(self, channel_problem):
        p = channel_problem
        sol = run_latin(p, max_iterations=4, path="pgd")
        free0 = np.setdiff1d(np.arange(p.mesh.n_q1), p.fixed_rho)
        assert np.allclose(sol.rho[0, free0], p.material.rho0)
        assert np.allclose(sol.rho[:, p.fixed_rho], p.rho_d)
        assert np.allclose(sol.v[0], 0.0)
        assert np.allclose(sol.v[:, p.fixed_v], p.v_d)

    def test_indicators_decrease(self, channel_problem):
        sol = run_latin(channel_problem, max_iterations=30, path="full")
        eta = np.array([r.eta_v for r in sol.history])
        assert eta[-1] < 0.05 * eta[0]

    def test_full_path_approaches_oracle(self, channel_problem, monolithic):
        sol = run_latin(channel_problem, max_iterations=60, path="full")
        assert relative_error(sol.v, monolithic.v) < 0.02

    def test_pgd_tracks_full_path(self, channel_problem):
        full = run_latin(channel_problem, max_iterations=25, path="full")
        pgd = run_latin(channel_problem, max_iterations=25, path="pgd")
        assert relative_error(pgd.v, full.v) < 0.02
        assert pgd.n_modes_v >= 1
        assert pgd.n_modes_rho >= 1

    def test_bitwise_deterministic(self, channel_problem):
        a = run_latin(channel_problem, max_iterations=8, path="pgd")
        b = run_latin(channel_problem, max_iterations=8, path="pgd")
        assert np.array_equal(a.rho, b.rho)
        assert np.array_equal(a.v, b.v)
        assert [r.eta_v for r in a.history] == [r.eta_v for r in b.history]

    def test_on_iteration_callback(self, channel_problem):
        seen = []
        run_latin(channel_problem, max_iterations=3, on_iteration=seen.append)
        assert [r.iteration for r in seen] == [1, 2, 3]

    def test_pressure_property(self, channel_problem):
        sol = run_latin(channel_problem, max_iterations=3)
        mat = channel_problem.material
        assert np.allclose(sol.pressure, mat.r * mat.T0 * sol.rho)

    def test_invalid_path_rejected(self, channel_problem):
        with pytest.raises(ValueError, match="path"):
            run_latin(channel_problem, path="direct")

    def test_divergent_search_direction_raises(self, channel_problem):
        # a negative relaxation factor amplifies the stage gap until the
        # fields blow up; the driver must fail loudly, not return garbage
        with pytest.raises((DivergenceError, SolverError)):
            run_latin(channel_problem, max_iterations=100, relaxation=-2.0)

    def test_converged_flag_on_loose_tolerance(self, channel_problem):
        sol = run_latin(channel_problem, eta_c=0.5, max_iterations=50, path="full")
        assert sol.converged
        assert len(sol.history) < 50


def test_search_direction_timescales_change_rate(channel_problem):
    # retuning t_v changes the per-iteration contraction of the velocity gap
    p = channel_problem
    T = float(p.times[-1])
    sd2 = build_search_directions(p.material, L_c=0.4, T=T, t_v=250 * T, t_rho=0.3 * T)
    p2 = dataclasses.replace(p, sd=sd2)
    base = run_latin(p, max_iterations=40, path="full")
    tuned = run_latin(p2, max_iterations=40, path="full")
    assert tuned.history[-1].eta_v < base.history[-1].eta_v
