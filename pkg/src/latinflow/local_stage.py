"""Local stage: pointwise constitutive solves along the ascending search direction.

At every Gauss point and time step the simplified constitutive system is
integrated (density and velocity by backward Euler, strain and density
gradient algebraically), then the dual quantities are recovered from the
search direction.  Everything is pointwise in space; arrays are shaped
(nt, ngp, ...) and the time recursion is the only sequential axis.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .constitutive import (
    VOIGT_ID,
    Material,
    SearchDirections,
    invert_local_operator,
)
from .errors import SolverError

RHO_FLOOR = 1e-30


@dataclass
class LocalInputs:
    """Search-direction combinations driving the local solves."""

    A_bar: np.ndarray       # (nt, ngp, 3) Voigt
    beta_bar: np.ndarray    # (nt, ngp, 2)
    delta_bar: np.ndarray   # (nt, ngp, 2)
    gamma_bar: np.ndarray   # (nt, ngp)


@dataclass
class GaussHistory:
    """Local-stage outputs: hatted primal fields and their duals."""

    rho_hat: np.ndarray     # (nt, ngp)
    v_hat: np.ndarray       # (nt, ngp, 2)
    eps_hat: np.ndarray     # (nt, ngp, 3)
    z_hat: np.ndarray       # (nt, ngp, 2)
    sigma_hat: np.ndarray   # (nt, ngp, 3)
    Gamma_hat: np.ndarray   # (nt, ngp, 2)
    W_hat: np.ndarray       # (nt, ngp, 2)
    q_hat: np.ndarray       # (nt, ngp)
    sd: SearchDirections = field(repr=False, default=None)

    # H- combinations feeding the next global stage (and its right-hand side)
    @property
    def A_loc(self) -> np.ndarray:
        return self.sigma_hat - self.eps_hat @ self.sd.H_eps_sigma.T

    @property
    def beta_loc(self) -> np.ndarray:
        return self.Gamma_hat - self.sd.H_v_gamma * self.v_hat

    @property
    def delta_loc(self) -> np.ndarray:
        return self.W_hat - self.sd.H_zw * self.z_hat

    @property
    def gamma_loc(self) -> np.ndarray:
        return self.q_hat - self.sd.H_rho_q * self.rho_hat


def compute_local_inputs(
    eps_bar, sigma_bar, v_bar, Gamma_bar, z_bar, W_bar, rho_bar, q_bar,
    sd: SearchDirections,
) -> LocalInputs:
    """Ascending-search-direction combinations of the latest global solution."""
    if rho_bar.shape != q_bar.shape or eps_bar.shape != sigma_bar.shape:
        raise SolverError("shape mismatch between primal and dual Gauss fields")
    return LocalInputs(
        A_bar=sigma_bar + eps_bar @ sd.H_eps_sigma.T,
        beta_bar=Gamma_bar + sd.H_v_gamma * v_bar,
        delta_bar=W_bar + sd.H_zw * z_bar,
        gamma_bar=q_bar + sd.H_rho_q * rho_bar,
    )


def solve_rho_hat(gamma_bar: np.ndarray, rho0, dt: float, h_rho_q: float) -> np.ndarray:
    """Backward-Euler integration of d(rho)/dt + H_rho_q rho = gamma_bar.

    ``rho0`` is the initial density, either a scalar or per-point values
    of shape (ngp,).
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    gamma_bar = np.ascontiguousarray(gamma_bar)
    init = np.ascontiguousarray(np.broadcast_to(np.asarray(rho0, float), gamma_bar.shape[1:]))
    return _kernels.rho_recursion(gamma_bar, init, dt, h_rho_q)


def solve_eps_hat(
    a_bar: np.ndarray, rho_hat: np.ndarray, material: Material, sd: SearchDirections
) -> np.ndarray:
    """Algebraic strain recovery (V + H_eps_sigma) eps = A_bar + f(rho) I."""
    inv = invert_local_operator(material, sd)
    # linear extension of the state law; rho may transiently dip below zero
    p = material.r * material.T0 * rho_hat
    rhs = a_bar + p[..., None] * VOIGT_ID
    return rhs @ inv.T


def solve_v_hat(
    beta_bar: np.ndarray, rho_hat: np.ndarray, dt: float, h_v_gamma: float,
    v0=None,
) -> np.ndarray:
    """Backward-Euler integration of rho dv/dt + H_v_gamma v = beta_bar.

    ``v0`` is the initial velocity, broadcast to shape (ngp, 2); the
    default is rest.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if np.any(rho_hat / dt + h_v_gamma <= 0.0):
        raise SolverError("singular velocity recursion: rho/dt + H_v_gamma <= 0")
    beta_bar = np.ascontiguousarray(beta_bar)
    if v0 is None:
        v0 = 0.0
    init = np.ascontiguousarray(np.broadcast_to(np.asarray(v0, float), beta_bar.shape[1:]))
    return _kernels.v_recursion(
        beta_bar, np.ascontiguousarray(rho_hat), init, dt, h_v_gamma, RHO_FLOOR,
    )


def solve_z_hat(delta_bar: np.ndarray, rho_hat: np.ndarray, v_hat: np.ndarray, h_zw: float) -> np.ndarray:
    """Density-gradient recovery z = (delta_bar - rho v) / H_zw."""
    return (delta_bar - rho_hat[..., None] * v_hat) / h_zw


def dual_update(inputs: LocalInputs, rho_hat, v_hat, eps_hat, z_hat, sd: SearchDirections):
    """Dual quantities along the ascending search direction."""
    sigma_hat = inputs.A_bar - eps_hat @ sd.H_eps_sigma.T
    Gamma_hat = inputs.beta_bar - sd.H_v_gamma * v_hat
    W_hat = inputs.delta_bar - sd.H_zw * z_hat
    q_hat = inputs.gamma_bar - sd.H_rho_q * rho_hat
    return sigma_hat, Gamma_hat, W_hat, q_hat


def solve_local_stage(
    inputs: LocalInputs, material: Material, sd: SearchDirections, dt: float,
    rho_init=None, v_init=None,
) -> GaussHistory:
    """Full local stage: density, strain, velocity, density gradient, duals.

    Solve order follows the dependency chain: rho first (uncoupled ODE),
    then strain, velocity, and the density gradient.  ``rho_init`` and
    ``v_init`` override the initial values of the time recursions (per
    Gauss point); they default to the uniform reference density and rest.
    Prescribing the interpolated initial fields matters near Dirichlet
    boundaries whose values differ from the uniform initial state.
    """
    rho_hat = solve_rho_hat(
        inputs.gamma_bar, material.rho0 if rho_init is None else rho_init,
        dt, sd.H_rho_q,
    )
    if np.any(rho_hat <= 0.0):
        warnings.warn(
            "non-positive density at the local stage; clamped in the velocity recursion",
            RuntimeWarning,
            stacklevel=2,
        )
    eps_hat = solve_eps_hat(inputs.A_bar, rho_hat, material, sd)
    v_hat = solve_v_hat(inputs.beta_bar, rho_hat, dt, sd.H_v_gamma, v0=v_init)
    z_hat = solve_z_hat(inputs.delta_bar, rho_hat, v_hat, sd.H_zw)
    sigma_hat, Gamma_hat, W_hat, q_hat = dual_update(inputs, rho_hat, v_hat, eps_hat, z_hat, sd)
    return GaussHistory(
        rho_hat=rho_hat, v_hat=v_hat, eps_hat=eps_hat, z_hat=z_hat,
        sigma_hat=sigma_hat, Gamma_hat=Gamma_hat, W_hat=W_hat, q_hat=q_hat,
        sd=sd,
    )
