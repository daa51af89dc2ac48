"""Reference-element bases and quadrature for Q1/Q2 quadrilaterals.

Node ordering for the 9-node quadrilateral: corners counter-clockwise
(0..3), then mid-edge nodes in edge order (4: edge 0-1, 5: edge 1-2,
6: edge 2-3, 7: edge 3-0), then the center node (8).  Local edges are
numbered 0..3 counter-clockwise starting from corner 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GeometryError

# reference coordinates of the 9 nodes
Q2_REF_NODES = np.array(
    [
        [-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0],
        [0.0, -1.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0],
        [0.0, 0.0],
    ]
)
Q1_REF_NODES = Q2_REF_NODES[:4]

# corner pairs of the local edges, CCW
EDGE_CORNERS = ((0, 1), (1, 2), (2, 3), (3, 0))


@dataclass(frozen=True)
class QuadratureRule:
    """Tensor-product Gauss rule on the reference square [-1, 1]^2."""

    points: np.ndarray   # (n, 2)
    weights: np.ndarray  # (n,)


@dataclass(frozen=True)
class MappedPoint:
    """Isoparametric image of one reference point inside one element."""

    x: np.ndarray          # physical coordinates (2,)
    det_jacobian: float
    n_q1: np.ndarray       # (4,) shape values
    grad_q1: np.ndarray    # (4, 2) physical gradients
    n_q2: np.ndarray       # (9,)
    grad_q2: np.ndarray    # (9, 2)


def shape_q1(xi: float, eta: float):
    """Bilinear basis: values (4,) and reference gradients (4, 2)."""
    xi = float(xi)
    eta = float(eta)
    n = 0.25 * np.array(
        [
            (1 - xi) * (1 - eta),
            (1 + xi) * (1 - eta),
            (1 + xi) * (1 + eta),
            (1 - xi) * (1 + eta),
        ]
    )
    dn = 0.25 * np.array(
        [
            [-(1 - eta), -(1 - xi)],
            [(1 - eta), -(1 + xi)],
            [(1 + eta), (1 + xi)],
            [-(1 + eta), (1 - xi)],
        ]
    )
    return n, dn


def _lag3(s: float):
    """1D quadratic Lagrange basis on nodes (-1, 0, 1) with derivatives."""
    vals = np.array([0.5 * s * (s - 1.0), 1.0 - s * s, 0.5 * s * (s + 1.0)])
    ders = np.array([s - 0.5, -2.0 * s, s + 0.5])
    return vals, ders

# tensor indices (i_xi, i_eta) of the 9 nodes in the fixed ordering,
# with 1D node order (-1, 0, 1)
_Q2_TENSOR_IDX = np.array(
    [(0, 0), (2, 0), (2, 2), (0, 2), (1, 0), (2, 1), (1, 2), (0, 1), (1, 1)]
)


def shape_q2(xi: float, eta: float):
    """Biquadratic basis: values (9,) and reference gradients (9, 2)."""
    lx, dlx = _lag3(float(xi))
    ly, dly = _lag3(float(eta))
    i = _Q2_TENSOR_IDX[:, 0]
    j = _Q2_TENSOR_IDX[:, 1]
    n = lx[i] * ly[j]
    dn = np.column_stack([dlx[i] * ly[j], lx[i] * dly[j]])
    return n, dn


_GAUSS_1D_PTS = np.array([-np.sqrt(3.0 / 5.0), 0.0, np.sqrt(3.0 / 5.0)])
_GAUSS_1D_WTS = np.array([5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])


def gauss_3x3() -> QuadratureRule:
    """3x3 tensor-product Gauss-Legendre rule (exact through degree 5)."""
    pts = []
    wts = []
    for j, (eta, we) in enumerate(zip(_GAUSS_1D_PTS, _GAUSS_1D_WTS)):
        for i, (xi, wx) in enumerate(zip(_GAUSS_1D_PTS, _GAUSS_1D_WTS)):
            pts.append((xi, eta))
            wts.append(wx * we)
    return QuadratureRule(points=np.array(pts), weights=np.array(wts))


def gauss_1d():
    """3-point Gauss-Legendre rule on [-1, 1]."""
    return _GAUSS_1D_PTS.copy(), _GAUSS_1D_WTS.copy()


def map_point(coords: np.ndarray, xi: float, eta: float) -> MappedPoint:
    """Isoparametric Q2 mapping of one reference point.

    ``coords`` holds the 9 physical node positions, shape (9, 2).
    Raises GeometryError when the Jacobian determinant is non-positive.
    """
    coords = np.asarray(coords, dtype=float)
    n2, dn2 = shape_q2(xi, eta)
    n1, dn1 = shape_q1(xi, eta)
    jac = dn2.T @ coords  # rows: d(x,y)/d(xi), d(x,y)/d(eta)
    det = jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0]
    if det <= 0.0:
        raise GeometryError(
            f"degenerate element: det J = {det:.3e} at (xi, eta) = ({xi}, {eta})"
        )
    # transposed inverse: physical gradients are dn @ J^-T
    jinv = np.array([[jac[1, 1], -jac[1, 0]], [-jac[0, 1], jac[0, 0]]]) / det
    return MappedPoint(
        x=n2 @ coords,
        det_jacobian=det,
        n_q1=n1,
        grad_q1=dn1 @ jinv,
        n_q2=n2,
        grad_q2=dn2 @ jinv,
    )


def edge_quadrature(coords: np.ndarray, local_edge: int):
    """Mapped 1D rule on one element edge.

    Returns (points (3, 2), weights (3,), normals (3, 2), n_q2 (3, 9)):
    physical positions, arc-length weights, unit outward normals, and
    Q2 shape values at the quadrature points.
    """
    coords = np.asarray(coords, dtype=float)
    if local_edge not in (0, 1, 2, 3):
        raise ValueError(f"local edge index out of range: {local_edge}")
    s_pts, s_wts = gauss_1d()
    pts = np.empty((3, 2))
    wts = np.empty(3)
    nrm = np.empty((3, 2))
    shp = np.empty((3, 9))
    for k, (s, w) in enumerate(zip(s_pts, s_wts)):
        xi, eta, dxi, deta = _edge_param(local_edge, s)
        n2, dn2 = shape_q2(xi, eta)
        jac = dn2.T @ coords
        tang = dxi * jac[0] + deta * jac[1]
        arc = float(np.hypot(tang[0], tang[1]))
        if arc <= 0.0:
            raise GeometryError(f"zero-length edge {local_edge}")
        pts[k] = n2 @ coords
        wts[k] = w * arc
        # CCW traversal: outward normal is the tangent rotated by -90 deg
        nrm[k] = np.array([tang[1], -tang[0]]) / arc
        shp[k] = n2
    return pts, wts, nrm, shp


def _edge_param(local_edge: int, s: float):
    """Reference coordinates and tangent direction along edge parameter s."""
    if local_edge == 0:
        return s, -1.0, 1.0, 0.0
    if local_edge == 1:
        return 1.0, s, 0.0, 1.0
    if local_edge == 2:
        return -s, 1.0, -1.0, 0.0
    return -1.0, -s, 0.0, -1.0
