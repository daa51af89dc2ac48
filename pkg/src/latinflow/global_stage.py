"""Global stage: initialization solves, full-order corrections, and the PGD path.

Each primal field (density, velocity) is advanced independently.  The PGD
representation stores the initialization trajectory plus a growing basis of
orthonormal spatial modes with time-sampled coefficient functions.  Every
global pass starts with an update step (all temporal coefficients recomputed
by a small Galerkin solve per time step); a new rank-one mode is generated
only when the update alone does not shrink the residual enough.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .assembly import ConstrainedSystem

UPDATE_COND_LIMIT = 1e12
FIXED_POINT_TOL = 1e-2
ORTHO_DROP_RATIO = 1e-8


@dataclass
class PGDField:
    """Space-time field: origin trajectory plus separated correction modes."""

    origin: np.ndarray                 # (nt, ndof) full DoF trajectory
    system: ConstrainedSystem = field(repr=False)
    dof_kind: str = "density"
    spatial_modes: list = field(default_factory=list)    # free-DoF vectors, unit norm
    temporal_modes: list = field(default_factory=list)   # (nt,) coefficient samples
    dense: np.ndarray = None           # (nt, nfree) correction on the full-order path

    @property
    def n_modes(self) -> int:
        return len(self.spatial_modes)

    def basis_matrix(self) -> np.ndarray:
        """(nfree, m) matrix of spatial modes."""
        return np.column_stack(self.spatial_modes)

    def correction_free(self) -> np.ndarray:
        """(nt, nfree) reconstruction of the correction sum."""
        if self.dense is not None:
            return self.dense
        nt = self.origin.shape[0]
        if not self.spatial_modes:
            return np.zeros((nt, self.system.free.size))
        return np.array(self.temporal_modes).T @ self.basis_matrix().T

    def reconstruct(self) -> np.ndarray:
        """(nt, ndof) full trajectory origin + sum of modes."""
        out = self.origin.copy()
        out[:, self.system.free] += self.correction_free()
        return out


def initialize_fields(system: ConstrainedSystem, load_full: np.ndarray, fixed_values: np.ndarray) -> np.ndarray:
    """Initialization trajectory: solve H x = load with Dirichlet lifting, per step.

    The Gauss-point source terms vanish at initialization, so the load is the
    external one only.  One factorization serves all time steps.
    """
    return system.solve_full(load_full, fixed_values)


def residual_series(field: PGDField, f_loc: np.ndarray) -> np.ndarray:
    """Free-DoF residual r(t) = F_loc(t) - H (reconstruct - origin)(t)."""
    r = f_loc.copy()
    if field.spatial_modes or field.dense is not None:
        r -= field.system.apply_free(field.correction_free())
    return r


def weighted_norm(r: np.ndarray, time_weights: np.ndarray) -> float:
    """Discrete space-time residual norm (sum_t w_t |r_t|^2)^0.5."""
    return float(np.sqrt(np.sum(time_weights * np.sum(r * r, axis=-1).T)))


def full_order_correction(system: ConstrainedSystem, rhs: np.ndarray) -> np.ndarray:
    """Exact per-time-step correction (the PGD oracle path)."""
    return system.solve_free(rhs)


def pgd_update(field: PGDField, f_loc: np.ndarray) -> None:
    """Recompute all temporal coefficients for the fixed spatial basis.

    Solves (Phi' H Phi) a(t) = Phi' F_loc(t) for every time step; replaces
    temporal_modes wholesale.  Ill-conditioned reduced operators drop the
    most recent mode.
    """
    while field.spatial_modes:
        phi = field.basis_matrix()
        red = phi.T @ field.system.apply_free(phi.T).T
        red = 0.5 * (red + red.T)
        if np.linalg.cond(red) > UPDATE_COND_LIMIT:
            warnings.warn(
                f"ill-conditioned reduced operator for {field.dof_kind}; dropping last mode",
                RuntimeWarning,
                stacklevel=2,
            )
            field.spatial_modes.pop()
            field.temporal_modes.pop()
            continue
        coeffs = np.linalg.solve(red, (f_loc @ phi).T).T   # (nt, m)
        field.temporal_modes = [coeffs[:, i].copy() for i in range(phi.shape[1])]
        return


def needs_new_mode(norm_before: float, norm_after: float, kappa: float, basis_empty: bool) -> bool:
    """Generate a mode when the update step did not improve the residual enough."""
    if basis_empty:
        return norm_after > 0.0
    return norm_after > kappa * norm_before


def pgd_generate_mode(
    field: PGDField,
    residual: np.ndarray,
    time_weights: np.ndarray,
    max_fixed_point: int = 3,
):
    """Greedy rank-one enrichment by a fixed-point iteration.

    Alternates (i) spatial solve Lam = H^-1 (sum_t w_t lam_t r_t) / (sum_t
    w_t lam_t^2) with normalization and (ii) temporal projection
    lam_t = Lam' r_t / (Lam' H Lam), starting from lam_t = |r_t|.  The new
    spatial mode is orthogonalized against the basis (modified Gram-Schmidt);
    returns None on degenerate input or when the residual already lies in the
    basis span.
    """
    w = time_weights
    lam = np.linalg.norm(residual, axis=-1)
    if not np.any(w * lam > 0.0):
        return None
    mode = None
    for _ in range(max_fixed_point):
        denom = float(np.sum(w * lam * lam))
        if denom <= 0.0:
            return None
        rhs = (w * lam) @ residual / denom
        mode = field.system.solve_free(rhs)
        nrm = np.linalg.norm(mode)
        if nrm == 0.0:
            return None
        mode /= nrm
        h_mode = field.system.apply_free(mode)
        lam_new = residual @ mode / float(mode @ h_mode)
        change = np.sqrt(np.sum(w * (lam_new - lam) ** 2))
        scale = np.sqrt(np.sum(w * lam_new ** 2))
        lam = lam_new
        if scale == 0.0 or change < FIXED_POINT_TOL * scale:
            break

    pre_norm = np.linalg.norm(mode)
    for existing in field.spatial_modes:
        mode -= (existing @ mode) * existing
    post_norm = np.linalg.norm(mode)
    if post_norm < ORTHO_DROP_RATIO * pre_norm:
        return None
    mode /= post_norm
    # reproducible sign: largest-magnitude entry positive
    k = int(np.argmax(np.abs(mode)))
    if mode[k] < 0.0:
        mode = -mode
    h_mode = field.system.apply_free(mode)
    lam = residual @ mode / float(mode @ h_mode)
    field.spatial_modes.append(mode)
    field.temporal_modes.append(lam)
    return mode, lam
