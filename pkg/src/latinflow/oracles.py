"""Independent reference solutions.

Two cross-checks for the iterative solver: the analytical steady Poiseuille
flow of a pressure-driven channel, and a monolithic incremental solver of
the coupled density-velocity system (backward Euler in time, staggered
Picard iterations per step).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .assembly import GaussData, constrain, mass_scalar, viscous_stiffness
from .constitutive import Material, gas_pressure
from .errors import OracleError
from .problem import Problem

PICARD_RTOL = 1e-10
PICARD_MAX = 50


@dataclass(frozen=True)
class ChannelSpec:
    """Pressure-driven channel on [0, L] x [-h/2, h/2]."""

    length: float
    height: float
    p_in: float
    p_out: float
    mu: float

    def __post_init__(self):
        if self.length <= 0 or self.height <= 0:
            raise ValueError("channel dimensions must be positive")


def poiseuille(spec: ChannelSpec, x, y):
    """Steady analytical solution (v_x, p); v_y = 0.

    v_x = ((h/2)^2 - y^2) / (2 mu) * |dp| / L,  p = p_in + (dp / L) x.
    Raises ValueError outside [0, L] x [-h/2, h/2].
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    h2 = spec.height / 2.0
    eps = 1e-12 * max(spec.length, spec.height)
    if np.any(x < -eps) or np.any(x > spec.length + eps) or np.any(np.abs(y) > h2 + eps):
        raise ValueError("point outside channel domain")
    dp = spec.p_out - spec.p_in
    vx = (h2 ** 2 - y ** 2) / (2.0 * spec.mu) * abs(dp) / spec.length
    p = spec.p_in + dp / spec.length * x
    return vx, p


def v_max(spec: ChannelSpec) -> float:
    """Peak mid-line velocity (h/2)^2 / (2 mu) * |dp| / L."""
    return (spec.height / 2.0) ** 2 / (2.0 * spec.mu) * abs(spec.p_out - spec.p_in) / spec.length


@dataclass
class MonolithicSolution:
    times: np.ndarray
    rho: np.ndarray        # (nt, n1)
    v: np.ndarray          # (nt, 2 n2) blocked
    material: Material

    @property
    def pressure(self) -> np.ndarray:
        return gas_pressure(self.rho, self.material)


def monolithic_solve(problem: Problem, verbose: bool = False) -> MonolithicSolution:
    """Incremental backward-Euler solve of the coupled system.

    Per time step, staggered Picard iterations: freeze rho and solve the
    momentum balance for v, then freeze v and solve the continuity equation
    for rho, until both fields change by less than PICARD_RTOL.  The
    convective term is dropped (laminar assumption), matching the iterative
    path.
    """
    gd = problem.gd
    mesh = problem.mesh
    mat = problem.material
    n1, n2 = mesh.n_q1, mesh.n_q2
    nt = problem.n_times
    dt = problem.dt

    k_visc = viscous_stiffness(gd, mat)
    c1 = mass_scalar(gd)
    w = gd.wdet

    sys_v_pattern = constrain(k_visc, problem.fixed_v)
    free_v, fixed_v = sys_v_pattern.free, problem.fixed_v
    mask_r = np.ones(n1, dtype=bool)
    mask_r[problem.fixed_rho] = False
    free_r = np.flatnonzero(mask_r)
    fixed_r = np.asarray(problem.fixed_rho, dtype=int)

    rho = np.empty((nt, n1))
    v = np.zeros((nt, 2 * n2))
    rho[0] = mat.rho0
    rho[0, fixed_r] = problem.rho_d[0]
    v[0, fixed_v] = problem.v_d[0]

    for n in range(1, nt):
        rho_n = rho[n - 1].copy()
        v_n = v[n - 1].copy()
        rho_n[fixed_r] = problem.rho_d[n]
        for it in range(PICARD_MAX):
            v_new = _momentum_step(
                problem, k_visc, rho_n, v[n - 1], problem.load_v[n],
                problem.v_d[n], free_v, fixed_v, dt,
            )
            rho_new = _continuity_step(
                problem, c1, v_new, rho[n - 1], problem.rho_d[n], free_r, fixed_r, dt,
            )
            dv = _rel_change(v_new, v_n)
            dr = _rel_change(rho_new, rho_n)
            v_n, rho_n = v_new, rho_new
            if not (np.all(np.isfinite(v_n)) and np.all(np.isfinite(rho_n))):
                raise OracleError(f"Picard iterations diverged at time step {n}")
            if dv < PICARD_RTOL and dr < PICARD_RTOL:
                break
        if verbose:
            print(f"step {n:4d}: picard {it + 1}, max|v| = {np.abs(v_n).max():.4e}")
        rho[n] = rho_n
        v[n] = v_n

    return MonolithicSolution(times=problem.times, rho=rho, v=v, material=mat)


def _momentum_step(problem, k_visc, rho_nodal, v_prev, load, v_d, free_v, fixed_v, dt):
    """Solve (C_rho/dt + K) v = C_rho v_prev/dt + pressure term + loads."""
    gd = problem.gd
    n2 = problem.mesh.n_q2
    rho_gp = gd.q1_at_gauss(rho_nodal)
    wrho = gd.wdet * rho_gp
    c_rho = (gd.P2.T @ sp.diags(wrho) @ gd.P2).tocsr()
    c_rho = sp.block_diag([c_rho, c_rho], format="csr")
    A = (c_rho / dt + k_visc).tocsr()

    p_gp = gas_pressure(rho_gp, problem.material)
    rhs = c_rho @ v_prev / dt + load
    rhs[:n2] += (p_gp * gd.wdet) @ gd.G2x
    rhs[n2:] += (p_gp * gd.wdet) @ gd.G2y

    mask = np.ones(2 * n2, dtype=bool)
    mask[fixed_v] = False
    Af = A[free_v][:, free_v].tocsc()
    rhs_f = rhs[free_v] - A[free_v][:, fixed_v] @ v_d
    x = splu(Af).solve(rhs_f)
    out = np.empty(2 * n2)
    out[free_v] = x
    out[fixed_v] = v_d
    return out


def _continuity_step(problem, c1, v_nodal, rho_prev, rho_d, free_r, fixed_r, dt):
    """Solve (C/dt - D(v)) rho = C rho_prev / dt with Dirichlet density."""
    gd = problem.gd
    n1 = problem.mesh.n_q1
    v_gp = gd.velocity_at_gauss(v_nodal)
    w = gd.wdet
    # D[i, j] = integral of N_j (v . grad N_i)
    D = (gd.G1x.T @ sp.diags(w * v_gp[:, 0]) @ gd.P1
         + gd.G1y.T @ sp.diags(w * v_gp[:, 1]) @ gd.P1).tocsr()
    A = (c1 / dt - D).tocsr()
    rhs = c1 @ rho_prev / dt
    Af = A[free_r][:, free_r].tocsc()
    rhs_f = rhs[free_r] - A[free_r][:, fixed_r] @ rho_d
    x = splu(Af).solve(rhs_f)
    out = np.empty(n1)
    out[free_r] = x
    out[fixed_r] = rho_d
    return out


def _rel_change(a, b):
    ref = np.linalg.norm(a)
    if ref == 0.0:
        return np.linalg.norm(a - b)
    return np.linalg.norm(a - b) / ref
