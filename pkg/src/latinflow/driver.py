"""LATIN iteration driver: initialization, alternating stages, indicators.

Each iteration runs the local stage on the latest global Gauss-point fields,
then advances the global stage of every not-yet-converged field (temporal
update, optional greedy mode generation), then evaluates the two energy-norm
convergence indicators.  The loop stops when max(eta_v, eta_rho) < eta_c or
at the iteration cap.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .assembly import (
    constrain,
    global_operators,
    rhs_scalar_from_gauss,
    rhs_vector_from_gauss,
)
from .constitutive import gas_pressure
from .errors import DivergenceError
from .global_stage import (
    PGDField,
    full_order_correction,
    initialize_fields,
    needs_new_mode,
    pgd_generate_mode,
    pgd_update,
    residual_series,
    weighted_norm,
)
from .local_stage import compute_local_inputs, solve_local_stage
from .problem import Problem


@dataclass
class IterationRecord:
    iteration: int
    eta_v: float
    eta_rho: float
    n_modes_v: int
    n_modes_rho: int
    wall_seconds: float


@dataclass
class Solution:
    """Nodal trajectories, derived pressure, and convergence history."""

    times: np.ndarray
    rho: np.ndarray                  # (nt, n1)
    v: np.ndarray                    # (nt, 2 n2) blocked [all x | all y]
    material: object
    history: list = field(default_factory=list)
    converged: bool = False
    n_modes_v: int = 0
    n_modes_rho: int = 0
    gauss_history: object = field(default=None, repr=False)
    pgd_v: object = field(default=None, repr=False)
    pgd_rho: object = field(default=None, repr=False)

    @property
    def pressure(self) -> np.ndarray:
        return gas_pressure(self.rho, self.material)


def indicators(problem: Problem, hist, rho_bar_gp, eps_bar_gp):
    """Energy-norm relative gaps (eta_v, eta_rho) between the two stages.

    Density gap is measured in the H_rho_q-weighted L2 norm, velocity gap in
    the viscous strain energy norm; both are normalized by the mean of the
    two stage norms.  A zero-over-zero gap is reported as 0.
    """
    sd = problem.sd
    wst = problem.time_weights[:, None] * problem.gd.wdet[None, :]

    def rho_norm2(r):
        return float(np.sum(wst * sd.H_rho_q * r * r))

    v_mat = sd.H_eps_sigma

    def eps_norm2(e):
        return float(np.sum(wst * np.einsum("tgi,ij,tgj->tg", e, v_mat, e)))

    num_r = rho_norm2(rho_bar_gp - hist.rho_hat)
    den_r = 0.5 * (rho_norm2(rho_bar_gp) + rho_norm2(hist.rho_hat))
    num_v = eps_norm2(eps_bar_gp - hist.eps_hat)
    den_v = 0.5 * (eps_norm2(eps_bar_gp) + eps_norm2(hist.eps_hat))
    eta_rho = 0.0 if den_r == 0.0 else float(np.sqrt(num_r / den_r))
    eta_v = 0.0 if den_v == 0.0 else float(np.sqrt(num_v / den_v))
    return eta_v, eta_rho


@dataclass
class _GaussFields:
    """Global-stage primal fields sampled at the Gauss points."""

    rho: np.ndarray       # (nt, ngp)
    z: np.ndarray         # (nt, ngp, 2) density gradient
    v: np.ndarray         # (nt, ngp, 2)
    eps: np.ndarray       # (nt, ngp, 3) Voigt strain rate


def _eval_global(problem: Problem, rho_nodal, v_nodal) -> _GaussFields:
    gd = problem.gd
    zx, zy = gd.q1_grad_at_gauss(rho_nodal)
    return _GaussFields(
        rho=gd.q1_at_gauss(rho_nodal),
        z=np.stack([zx, zy], axis=-1),
        v=gd.velocity_at_gauss(v_nodal),
        eps=gd.strain_at_gauss(v_nodal),
    )


def run_latin(
    problem: Problem,
    eta_c: float = 1e-4,
    max_iterations: int = 100,
    kappa: float = 0.1,
    pgd_fixed_point_max: int = 3,
    relaxation: float = 0.9,
    path: str = "pgd",
    on_iteration=None,
    verbose: bool = False,
) -> Solution:
    """Run the LATIN iteration on ``problem`` and return the solution.

    ``path`` selects the global-stage correction: "pgd" (default, update
    step plus greedy rank-one enrichment) or "full" (exact per-time-step
    solves with the same factorized operators, the reference protocol).
    ``on_iteration`` is invoked with each IterationRecord as it is produced.
    """
    if path not in ("pgd", "full"):
        raise ValueError(f"unknown global-stage path {path!r}")
    gd = problem.gd
    sd = problem.sd
    mat = problem.material
    t_start = time.perf_counter()

    h_rho, h_v = global_operators(gd, mat, sd)
    sys_rho = constrain(h_rho, problem.fixed_rho)
    sys_v = constrain(h_v, problem.fixed_v)

    load_rho = np.zeros((problem.n_times, problem.mesh.n_q1))
    rho_origin = initialize_fields(sys_rho, load_rho, problem.rho_d)
    v_origin = initialize_fields(sys_v, problem.load_v, problem.v_d)
    # row 0 is the initial condition, not a quasi-static solve
    rho_origin[0] = mat.rho0
    rho_origin[0, problem.fixed_rho] = problem.rho_d[0]
    v_origin[0] = 0.0
    v_origin[0, problem.fixed_v] = problem.v_d[0]
    # initial fields at the Gauss points, for the local-stage recursions
    rho_init_gp = gd.q1_at_gauss(rho_origin[0])
    v_init_gp = gd.velocity_at_gauss(v_origin[0])

    pgd_rho = PGDField(origin=rho_origin, system=sys_rho, dof_kind="density")
    pgd_v = PGDField(origin=v_origin, system=sys_v, dof_kind="velocity")

    rho_nodal = rho_origin.copy()
    v_nodal = v_origin.copy()
    glob = _eval_global(problem, rho_nodal, v_nodal)

    # combined local-stage terms (sigma_hat - H:eps_hat, ...); zero at
    # initialization so the first duals come from the global fields alone
    a_loc = np.zeros_like(glob.eps)
    beta_loc = np.zeros_like(glob.v)
    delta_loc = np.zeros_like(glob.v)
    gamma_loc = np.zeros_like(glob.rho)

    history: list[IterationRecord] = []
    converged_v = converged_rho = False
    hist = None

    for it in range(1, max_iterations + 1):
        # dual global fields from the search directions
        sigma_bar = a_loc + glob.eps @ sd.H_eps_sigma.T
        Gamma_bar = beta_loc + sd.H_v_gamma * glob.v
        W_bar = delta_loc + sd.H_zw * glob.z
        q_bar = gamma_loc + sd.H_rho_q * glob.rho

        bars = compute_local_inputs(
            glob.eps, sigma_bar, glob.v, Gamma_bar, glob.z, W_bar,
            glob.rho, q_bar, sd,
        )
        hist = solve_local_stage(
            bars, mat, sd, problem.dt, rho_init=rho_init_gp, v_init=v_init_gp,
        )
        # relax the Gauss-point combination terms as well: their components
        # in the null space of the assembly maps never reach the global
        # solves, and without damping they oscillate with factor -1
        a_loc = a_loc + relaxation * (hist.A_loc - a_loc)
        beta_loc = beta_loc + relaxation * (hist.beta_loc - beta_loc)
        delta_loc = delta_loc + relaxation * (hist.delta_loc - delta_loc)
        gamma_loc = gamma_loc + relaxation * (hist.gamma_loc - gamma_loc)

        # global stage: the external loads are balanced by the initialization,
        # so each correction solves against the Gauss-point terms only
        if not converged_rho:
            f_loc = rhs_scalar_from_gauss(gd, delta_loc, gamma_loc)[:, sys_rho.free]
            f_loc[0] = 0.0           # keep the initial condition exact
            _advance_field(pgd_rho, f_loc, problem, kappa, pgd_fixed_point_max, path)
            rho_nodal = rho_nodal + relaxation * (pgd_rho.reconstruct() - rho_nodal)
        if not converged_v:
            f_loc_v = rhs_vector_from_gauss(gd, a_loc, beta_loc)[:, sys_v.free]
            f_loc_v[0] = 0.0
            _advance_field(pgd_v, f_loc_v, problem, kappa, pgd_fixed_point_max, path)
            v_nodal = v_nodal + relaxation * (pgd_v.reconstruct() - v_nodal)

        if not (np.all(np.isfinite(rho_nodal)) and np.all(np.isfinite(v_nodal))):
            raise DivergenceError(f"non-finite global field at iteration {it}")

        glob = _eval_global(problem, rho_nodal, v_nodal)
        eta_v, eta_rho = indicators(problem, hist, glob.rho, glob.eps)
        if not (np.isfinite(eta_v) and np.isfinite(eta_rho)):
            raise DivergenceError(f"non-finite indicator at iteration {it}")

        rec = IterationRecord(
            iteration=it,
            eta_v=eta_v,
            eta_rho=eta_rho,
            n_modes_v=pgd_v.n_modes,
            n_modes_rho=pgd_rho.n_modes,
            wall_seconds=time.perf_counter() - t_start,
        )
        history.append(rec)
        if on_iteration is not None:
            on_iteration(rec)
        if verbose:
            print(
                f"iter {it:3d}: eta_v={eta_v:.3e} eta_rho={eta_rho:.3e} "
                f"modes v/rho = {pgd_v.n_modes}/{pgd_rho.n_modes}"
            )

        converged_v = converged_v or eta_v < eta_c
        converged_rho = converged_rho or eta_rho < eta_c
        if converged_v and converged_rho:
            break

    return Solution(
        times=problem.times,
        rho=rho_nodal,
        v=v_nodal,
        material=mat,
        history=history,
        converged=converged_v and converged_rho,
        n_modes_v=pgd_v.n_modes,
        n_modes_rho=pgd_rho.n_modes,
        gauss_history=hist,
        pgd_v=pgd_v,
        pgd_rho=pgd_rho,
    )


def _advance_field(field_: PGDField, f_loc, problem, kappa, fixed_point_max, path):
    """One global pass for one field: update, test, generate, final update."""
    if path == "full":
        field_.dense = full_order_correction(field_.system, f_loc)
        return

    w = problem.time_weights
    norm_before = weighted_norm(residual_series(field_, f_loc), w)
    if field_.spatial_modes:
        pgd_update(field_, f_loc)
    r_after = residual_series(field_, f_loc)
    norm_after = weighted_norm(r_after, w)
    if needs_new_mode(norm_before, norm_after, kappa, not field_.spatial_modes):
        if pgd_generate_mode(field_, r_after, w, fixed_point_max) is not None:
            pgd_update(field_, f_loc)
