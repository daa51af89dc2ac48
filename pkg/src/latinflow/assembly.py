"""Sparse operator assembly and constrained SPD solves.

All volume integrals use the shared 3x3 Gauss rule, so every Gauss-point
quantity of the solver is collocated.  Assembly goes through fixed
interpolation/gradient scatter matrices:

    P1, G1x, G1y : (ngp, n1)  Q1 values / physical gradients at Gauss points
    P2, G2x, G2y : (ngp, n2)  Q2 counterparts

so bilinear operators are sparse triple products (e.g. C = P1' W P1 with
W = diag(w detJ)) and right-hand sides from Gauss-point data are transposed
scatters.  Velocity DoFs are blocked: dof = component * n2 + node.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from . import _kernels
from .constitutive import Material, SearchDirections, voigt_viscosity
from .elements import edge_quadrature, gauss_3x3, shape_q1, shape_q2
from .errors import GeometryError, SolverError
from .mesh import Mesh

SOLVE_RTOL = 1e-10


class GaussData:
    """Precomputed quadrature geometry and scatter matrices for one mesh."""

    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        rule = gauss_3x3()
        ng = rule.weights.size
        ne = mesh.n_elements
        self.n_gp = ne * ng

        n2_ref = np.array([shape_q2(x, e)[0] for x, e in rule.points])
        dn2_ref = np.array([shape_q2(x, e)[1] for x, e in rule.points])
        n1_ref = np.array([shape_q1(x, e)[0] for x, e in rule.points])
        dn1_ref = np.array([shape_q1(x, e)[1] for x, e in rule.points])

        coords = mesh.q2_coords[mesh.elem_q2]  # (E, 9, 2)
        detj, grad2, grad1 = _kernels.geometry(coords, dn2_ref, dn1_ref)
        if np.any(detj <= 0.0):
            e, g = np.argwhere(detj <= 0.0)[0]
            raise GeometryError(
                f"element {e}: det J = {detj[e, g]:.3e} at Gauss point {g}"
            )
        self.wdet = (detj * rule.weights[None, :]).ravel()  # (ngp,)
        self.gp_coords = np.einsum("gn,end->egd", n2_ref, coords).reshape(-1, 2)

        rows = np.repeat(np.arange(self.n_gp), 9)
        cols2 = np.repeat(mesh.elem_q2, ng, axis=0).ravel()
        q1_glob = mesh.q1_to_q2[mesh.elem_q1]  # corner Q2 ids, for validation only
        del q1_glob
        cols1 = np.repeat(mesh.elem_q1, ng, axis=0).ravel()
        rows1 = np.repeat(np.arange(self.n_gp), 4)

        shape2 = (self.n_gp, mesh.n_q2)
        shape1 = (self.n_gp, mesh.n_q1)
        tile2 = np.tile(n2_ref, (ne, 1)).ravel()
        self.P2 = sp.csr_matrix((tile2, (rows, cols2)), shape=shape2)
        self.G2x = sp.csr_matrix((grad2[..., 0].reshape(-1, 9).ravel(), (rows, cols2)), shape=shape2)
        self.G2y = sp.csr_matrix((grad2[..., 1].reshape(-1, 9).ravel(), (rows, cols2)), shape=shape2)
        tile1 = np.tile(n1_ref, (ne, 1)).ravel()
        self.P1 = sp.csr_matrix((tile1, (rows1, cols1)), shape=shape1)
        self.G1x = sp.csr_matrix((grad1[..., 0].reshape(-1, 4).ravel(), (rows1, cols1)), shape=shape1)
        self.G1y = sp.csr_matrix((grad1[..., 1].reshape(-1, 4).ravel(), (rows1, cols1)), shape=shape1)

    # --- Gauss-point evaluation of nodal fields -------------------------

    def q1_at_gauss(self, rho: np.ndarray) -> np.ndarray:
        """Q1 nodal trajectory (..., n1) -> Gauss values (..., ngp)."""
        return rho @ self.P1.T

    def q1_grad_at_gauss(self, rho: np.ndarray):
        return rho @ self.G1x.T, rho @ self.G1y.T

    def velocity_at_gauss(self, v: np.ndarray) -> np.ndarray:
        """Blocked velocity (..., 2 n2) -> (..., ngp, 2)."""
        n2 = self.mesh.n_q2
        vx = v[..., :n2] @ self.P2.T
        vy = v[..., n2:] @ self.P2.T
        return np.stack([vx, vy], axis=-1)

    def strain_at_gauss(self, v: np.ndarray) -> np.ndarray:
        """Blocked velocity (..., 2 n2) -> Voigt strain rate (..., ngp, 3)."""
        n2 = self.mesh.n_q2
        vx, vy = v[..., :n2], v[..., n2:]
        exx = vx @ self.G2x.T
        eyy = vy @ self.G2y.T
        gxy = vx @ self.G2y.T + vy @ self.G2x.T
        return np.stack([exx, eyy, gxy], axis=-1)


def _weighted(gd: GaussData, A: sp.csr_matrix, B: sp.csr_matrix, w=None) -> sp.csr_matrix:
    wd = gd.wdet if w is None else gd.wdet * w
    return (A.T @ sp.diags(wd) @ B).tocsr()


def mass_scalar(gd: GaussData) -> sp.csr_matrix:
    """Q1 mass matrix C[i,j] = integral of N_i N_j."""
    return _weighted(gd, gd.P1, gd.P1)


def stiffness_scalar(gd: GaussData) -> sp.csr_matrix:
    """Q1 stiffness K[i,j] = integral of grad N_i . grad N_j."""
    return (_weighted(gd, gd.G1x, gd.G1x) + _weighted(gd, gd.G1y, gd.G1y)).tocsr()


def mass_vector(gd: GaussData, rho_gp: np.ndarray | None = None) -> sp.csr_matrix:
    """Blocked Q2 vector mass matrix, optionally weighted by a Gauss field."""
    c = _weighted(gd, gd.P2, gd.P2, rho_gp)
    return sp.block_diag([c, c], format="csr")


def viscous_stiffness(gd: GaussData, material: Material) -> sp.csr_matrix:
    """Blocked stiffness assembling strain(N_i) : V : strain(N_j)."""
    v = voigt_viscosity(material)
    d = float(v[0, 0])   # 2 mu + lam
    lam = float(v[0, 1])
    mu = float(v[2, 2])
    kxx = d * _weighted(gd, gd.G2x, gd.G2x) + mu * _weighted(gd, gd.G2y, gd.G2y)
    kyy = d * _weighted(gd, gd.G2y, gd.G2y) + mu * _weighted(gd, gd.G2x, gd.G2x)
    kxy = lam * _weighted(gd, gd.G2x, gd.G2y) + mu * _weighted(gd, gd.G2y, gd.G2x)
    return sp.bmat([[kxx, kxy], [kxy.T, kyy]], format="csr")


def global_operators(gd: GaussData, material: Material, sd: SearchDirections):
    """SPD single-field operators of the decoupled global problems.

    H_rho = (-H_zw) K_rho + H_rho_q C_rho;  H_v = K_visc + H_v_gamma C_v.
    """
    h_rho = (-sd.H_zw) * stiffness_scalar(gd) + sd.H_rho_q * mass_scalar(gd)
    h_v = viscous_stiffness(gd, material) + sd.H_v_gamma * mass_vector(gd)
    return h_rho.tocsr(), h_v.tocsr()


def rhs_scalar_from_gauss(gd: GaussData, delta_hat: np.ndarray, gamma_hat: np.ndarray) -> np.ndarray:
    """F[j] = sum_gp w detJ (delta . grad N_j - gamma N_j).

    delta_hat: (..., ngp, 2), gamma_hat: (..., ngp); returns (..., n1).
    """
    w = gd.wdet
    return (
        (delta_hat[..., 0] * w) @ gd.G1x
        + (delta_hat[..., 1] * w) @ gd.G1y
        - (gamma_hat * w) @ gd.P1
    )


def rhs_vector_from_gauss(
    gd: GaussData,
    a_hat: np.ndarray | None = None,
    beta_hat: np.ndarray | None = None,
    load: np.ndarray | None = None,
) -> np.ndarray:
    """Blocked velocity RHS: -int A:strain(v*) - int beta . v* + loads.

    a_hat: (..., ngp, 3) Voigt, beta_hat: (..., ngp, 2); ``load`` is an
    already-assembled DoF vector (body force + Neumann tractions).
    """
    w = gd.wdet
    shape = (np.broadcast_shapes(
        () if a_hat is None else a_hat.shape[:-2],
        () if beta_hat is None else beta_hat.shape[:-2],
    )) + (2 * gd.mesh.n_q2,)
    f = np.zeros(shape)
    n2 = gd.mesh.n_q2
    if a_hat is not None:
        f[..., :n2] -= (a_hat[..., 0] * w) @ gd.G2x + (a_hat[..., 2] * w) @ gd.G2y
        f[..., n2:] -= (a_hat[..., 1] * w) @ gd.G2y + (a_hat[..., 2] * w) @ gd.G2x
    if beta_hat is not None:
        f[..., :n2] -= (beta_hat[..., 0] * w) @ gd.P2
        f[..., n2:] -= (beta_hat[..., 1] * w) @ gd.P2
    if load is not None:
        f += load
    return f


def neumann_load(mesh: Mesh, set_name: str, traction_pressure: float) -> np.ndarray:
    """Velocity load vector of the traction F_d = -p_d n on one boundary set."""
    n2 = mesh.n_q2
    f = np.zeros(2 * n2)
    for e, le in mesh._edges(set_name):
        coords = mesh.element_coords(e)
        _, wts, normals, shp = edge_quadrature(coords, le)
        conn = mesh.elem_q2[e]
        for k in range(wts.size):
            t = -traction_pressure * normals[k]
            f[conn] += wts[k] * shp[k] * t[0]
            f[n2 + conn] += wts[k] * shp[k] * t[1]
    return f


def body_load(gd: GaussData, b: np.ndarray) -> np.ndarray:
    """Velocity load vector of a constant body force b = (bx, by)."""
    n2 = gd.mesh.n_q2
    f = np.zeros(2 * n2)
    w = gd.wdet
    f[:n2] = b[0] * (w @ gd.P2)
    f[n2:] = b[1] * (w @ gd.P2)
    return f


@dataclass
class ConstrainedSystem:
    """Symmetric elimination of Dirichlet DoFs with a cached factorization."""

    H: sp.csr_matrix
    fixed: np.ndarray
    free: np.ndarray = field(init=False)
    _lu: object = field(init=False, repr=False)
    _H_free_fixed: sp.csr_matrix = field(init=False, repr=False)
    _H_free: sp.csr_matrix = field(init=False, repr=False)

    def __post_init__(self):
        n = self.H.shape[0]
        self.fixed = np.asarray(self.fixed, dtype=int)
        mask = np.ones(n, dtype=bool)
        mask[self.fixed] = False
        self.free = np.flatnonzero(mask)
        if self.free.size == 0:
            self._lu = None
            self._H_free_fixed = None
            self._H_free = None
            return
        hcsr = self.H.tocsr()
        self._H_free = hcsr[self.free][:, self.free].tocsc()
        self._H_free_fixed = hcsr[self.free][:, self.fixed].tocsr()
        try:
            self._lu = splu(self._H_free)
        except RuntimeError as err:
            raise SolverError(f"factorization failed: {err}") from None

    @property
    def n_dofs(self) -> int:
        return self.H.shape[0]

    def reduce_load(self, load_full: np.ndarray, fixed_values: np.ndarray) -> np.ndarray:
        """Move fixed contributions to the RHS: F_free - H_fc x_c."""
        out = load_full[..., self.free].copy()
        if self.fixed.size:
            out -= np.asarray(fixed_values) @ self._H_free_fixed.T
        return out

    def solve_free(self, rhs_free: np.ndarray) -> np.ndarray:
        """Solve on free DoFs; rhs (..., nfree).  Checks the residual."""
        if self.free.size == 0:
            return np.zeros_like(rhs_free)
        flat = np.atleast_2d(rhs_free)
        x = self._lu.solve(flat.T).T
        res = np.linalg.norm(x @ self._H_free.T - flat)
        ref = np.linalg.norm(flat)
        if ref > 0 and res / ref > SOLVE_RTOL:
            raise SolverError(f"solve residual {res / ref:.2e} exceeds {SOLVE_RTOL:.0e}")
        return x.reshape(np.shape(rhs_free))

    def embed(self, x_free: np.ndarray, fixed_values=0.0) -> np.ndarray:
        """Assemble a full DoF vector from free values and fixed values."""
        out = np.zeros(x_free.shape[:-1] + (self.n_dofs,))
        out[..., self.free] = x_free
        if self.fixed.size:
            out[..., self.fixed] = fixed_values
        return out

    def solve_full(self, load_full: np.ndarray, fixed_values) -> np.ndarray:
        """Solve H x = load with prescribed values on the fixed DoFs."""
        rhs = self.reduce_load(load_full, fixed_values)
        return self.embed(self.solve_free(rhs), fixed_values)

    def apply_free(self, x_free: np.ndarray) -> np.ndarray:
        """Matrix-vector product with the reduced operator."""
        return x_free @ self._H_free.T


def constrain(H: sp.spmatrix, fixed: np.ndarray) -> ConstrainedSystem:
    """Build a ConstrainedSystem (SPD operators; one factorization per run)."""
    return ConstrainedSystem(H=H.tocsr(), fixed=np.unique(np.asarray(fixed, dtype=int)))
