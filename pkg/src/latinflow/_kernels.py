"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The numba path is used when numba imports successfully and the environment
variable ``LATINFLOW_NUMBA`` is not set to ``0``/``off``/``false``.  Both
paths produce bitwise-identical results for the geometry kernel and agree
to rounding for the recursions; ``benchmarks/bench_kernels.py`` compares
their throughput.
"""

from __future__ import annotations

import os

import numpy as np


def _numba_enabled() -> bool:
    flag = os.environ.get("LATINFLOW_NUMBA", "1").strip().lower()
    if flag in ("0", "off", "false", "no"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


USING_NUMBA = _numba_enabled()


# ---------------------------------------------------------------------------
# geometry: Jacobians and physical gradients at all Gauss points

def _geometry_numpy(coords, dn2_ref, dn1_ref):
    """Per-element, per-Gauss-point Jacobian data.

    coords: (E, 9, 2) node positions; dn2_ref: (G, 9, 2) reference Q2
    gradients; dn1_ref: (G, 4, 2).  Returns (detj (E, G), grad2 (E, G, 9, 2),
    grad1 (E, G, 4, 2)).
    """
    # jac[e, g, a, b] = d x_b / d xi_a
    jac = np.einsum("gna,enb->egab", dn2_ref, coords)
    detj = jac[..., 0, 0] * jac[..., 1, 1] - jac[..., 0, 1] * jac[..., 1, 0]
    # transposed inverse: physical gradient g_b = sum_a dn_a (J^-T)_{a b}
    jinv = np.empty_like(jac)
    jinv[..., 0, 0] = jac[..., 1, 1]
    jinv[..., 0, 1] = -jac[..., 1, 0]
    jinv[..., 1, 0] = -jac[..., 0, 1]
    jinv[..., 1, 1] = jac[..., 0, 0]
    jinv /= detj[..., None, None]
    grad2 = np.einsum("gna,egab->egnb", dn2_ref, jinv)
    grad1 = np.einsum("gna,egab->egnb", dn1_ref, jinv)
    return detj, grad2, grad1


def _rho_recursion_numpy(gamma, rho0, dt, h_rho_q):
    """Backward-Euler recursion rho_n = (gamma_n + rho_{n-1}/dt) / (1/dt + H).

    gamma: (nt, m); row 0 is ignored (initial condition).  rho0: (m,)
    initial values.  Returns (nt, m).
    """
    nt, m = gamma.shape
    rho = np.empty_like(gamma)
    rho[0] = rho0
    denom = 1.0 / dt + h_rho_q
    for n in range(1, nt):
        rho[n] = (gamma[n] + rho[n - 1] / dt) / denom
    return rho


def _v_recursion_numpy(beta, rho, v0, dt, h_v_gamma, rho_floor):
    """Backward-Euler recursion v_n = (beta_n + rho_n v_{n-1}/dt) / (rho_n/dt + H).

    beta: (nt, m, 2), rho: (nt, m), v0: (m, 2) initial values.  rho is
    clamped to rho_floor inside the denominator only.  Returns (nt, m, 2).
    """
    nt, m, _ = beta.shape
    v = np.empty_like(beta)
    v[0] = v0
    for n in range(1, nt):
        r = np.maximum(rho[n], rho_floor)
        denom = (r / dt + h_v_gamma)[:, None]
        v[n] = (beta[n] + rho[n][:, None] * v[n - 1] / dt) / denom
    return v


if USING_NUMBA:
    import numba as nb

    @nb.njit(cache=True)
    def _geometry_numba(coords, dn2_ref, dn1_ref):
        ne = coords.shape[0]
        ng = dn2_ref.shape[0]
        detj = np.empty((ne, ng))
        grad2 = np.empty((ne, ng, 9, 2))
        grad1 = np.empty((ne, ng, 4, 2))
        for e in range(ne):
            for g in range(ng):
                j00 = 0.0
                j01 = 0.0
                j10 = 0.0
                j11 = 0.0
                for n in range(9):
                    j00 += dn2_ref[g, n, 0] * coords[e, n, 0]
                    j01 += dn2_ref[g, n, 0] * coords[e, n, 1]
                    j10 += dn2_ref[g, n, 1] * coords[e, n, 0]
                    j11 += dn2_ref[g, n, 1] * coords[e, n, 1]
                det = j00 * j11 - j01 * j10
                detj[e, g] = det
                # transposed inverse Jacobian (for physical gradients)
                i00 = j11 / det
                i01 = -j10 / det
                i10 = -j01 / det
                i11 = j00 / det
                for n in range(9):
                    grad2[e, g, n, 0] = dn2_ref[g, n, 0] * i00 + dn2_ref[g, n, 1] * i10
                    grad2[e, g, n, 1] = dn2_ref[g, n, 0] * i01 + dn2_ref[g, n, 1] * i11
                for n in range(4):
                    grad1[e, g, n, 0] = dn1_ref[g, n, 0] * i00 + dn1_ref[g, n, 1] * i10
                    grad1[e, g, n, 1] = dn1_ref[g, n, 0] * i01 + dn1_ref[g, n, 1] * i11
        return detj, grad2, grad1

    @nb.njit(cache=True)
    def _rho_recursion_numba(gamma, rho0, dt, h_rho_q):
        nt, m = gamma.shape
        rho = np.empty_like(gamma)
        denom = 1.0 / dt + h_rho_q
        for k in range(m):
            rho[0, k] = rho0[k]
        for n in range(1, nt):
            for k in range(m):
                rho[n, k] = (gamma[n, k] + rho[n - 1, k] / dt) / denom
        return rho

    @nb.njit(cache=True)
    def _v_recursion_numba(beta, rho, v0, dt, h_v_gamma, rho_floor):
        nt, m, _ = beta.shape
        v = np.empty_like(beta)
        for k in range(m):
            v[0, k, 0] = v0[k, 0]
            v[0, k, 1] = v0[k, 1]
        for n in range(1, nt):
            for k in range(m):
                r = rho[n, k]
                rd = r if r > rho_floor else rho_floor
                denom = rd / dt + h_v_gamma
                v[n, k, 0] = (beta[n, k, 0] + r * v[n - 1, k, 0] / dt) / denom
                v[n, k, 1] = (beta[n, k, 1] + r * v[n - 1, k, 1] / dt) / denom
        return v

    geometry = _geometry_numba
    rho_recursion = _rho_recursion_numba
    v_recursion = _v_recursion_numba
else:
    geometry = _geometry_numpy
    rho_recursion = _rho_recursion_numpy
    v_recursion = _v_recursion_numpy

# numpy reference implementations, always available (benchmark/tests)
geometry_numpy = _geometry_numpy
rho_recursion_numpy = _rho_recursion_numpy
v_recursion_numpy = _v_recursion_numpy
