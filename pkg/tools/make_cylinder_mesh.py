"""Generate the bundled cylinder-in-channel mesh.

Channel [0, 2.2] x [0, 0.4] with a cylinder of radius 0.05 centred at
(0.2, 0.2).  A butterfly layout surrounds the cylinder: four transfinite
ring quadrants between the circle and the square |x-c|_inf = 0.15, and a
conforming block-Cartesian grid everywhere else.  Quadratic mid-edge nodes
on the circle are placed on the circle (the ring is generated at half-step
resolution from the smooth map).

Usage: python tools/make_cylinder_mesh.py [output.mesh]
"""

import sys

import numpy as np

from latinflow.mesh import _finalize, check_jacobians, write_mesh

CX, CY = 0.2, 0.2
RADIUS = 0.05
HALF = 0.15                       # inner-square half width
LENGTH, HEIGHT = 2.2, 0.4

X_CUTS = [0.0, CX - HALF, CX + HALF, LENGTH]
Y_CUTS = [0.0, CY - HALF, CY + HALF, HEIGHT]
NX = [2, 6, 22]                   # elements per x interval
NY = [2, 6, 2]
N_RING = 3                        # radial element layers in the ring
N_SIDE = 6                        # elements per inner-square side (= NX[1] = NY[1])

ROUND = 10                        # node dedup rounding (decimal digits)


class NodePool:
    def __init__(self):
        self.coords = []
        self.index = {}

    def add(self, x, y):
        key = (round(x, ROUND), round(y, ROUND))
        if key not in self.index:
            self.index[key] = len(self.coords)
            self.coords.append((x, y))
        return self.index[key]


def fine_grid_block(pool, xs, ys):
    """Elements of one Cartesian block from half-step coordinate vectors."""
    nid = np.array([[pool.add(x, y) for x in xs] for y in ys])
    elems = []
    for j in range(0, len(ys) - 1, 2):
        for i in range(0, len(xs) - 1, 2):
            elems.append(
                [
                    nid[j, i], nid[j, i + 2], nid[j + 2, i + 2], nid[j + 2, i],
                    nid[j, i + 1], nid[j + 1, i + 2], nid[j + 2, i + 1],
                    nid[j + 1, i],
                    nid[j + 1, i + 1],
                ]
            )
    return elems


def square_perimeter_fine():
    """Fine (half-step) nodes of the inner square, CCW from (cx+h, cy-h)."""
    n = 2 * N_SIDE
    lo, hi = -HALF, HALF
    side = np.linspace(lo, hi, n + 1)
    rev = side[::-1]
    pts = []
    pts += [(hi, s) for s in side[:-1]]              # right, upward
    pts += [(s, hi) for s in rev[:-1]]               # top, leftward
    pts += [(lo, s) for s in rev[:-1]]               # left, downward
    pts += [(s, lo) for s in side[:-1]]              # bottom, rightward
    return np.array(pts) + [CX, CY]


def ring_elements(pool):
    """Transfinite ring between the circle and the inner square."""
    per = square_perimeter_fine()
    nu = per.shape[0]                                # periodic fine index
    theta = np.arctan2(per[:, 1] - CY, per[:, 0] - CX)
    circ = np.column_stack([CX + RADIUS * np.cos(theta), CY + RADIUS * np.sin(theta)])
    nr = 2 * N_RING
    nid = np.empty((nr + 1, nu), dtype=int)
    for k in range(nr + 1):
        t = k / nr
        layer = (1.0 - t) * circ + t * per
        for u in range(nu):
            nid[k, u] = pool.add(layer[u, 0], layer[u, 1])
    elems = []
    for k in range(0, nr - 1, 2):
        for u in range(0, nu, 2):
            up = (u + 2) % nu
            um = (u + 1) % nu
            elems.append(
                [
                    nid[k, u], nid[k + 2, u], nid[k + 2, up], nid[k, up],
                    nid[k + 1, u], nid[k + 2, um], nid[k + 1, up], nid[k, um],
                    nid[k + 1, um],
                ]
            )
    return elems


def build_mesh():
    pool = NodePool()
    elems = []
    for bi in range(3):
        xs = np.linspace(X_CUTS[bi], X_CUTS[bi + 1], 2 * NX[bi] + 1)
        for bj in range(3):
            if bi == 1 and bj == 1:
                continue                              # ring replaces this block
            ys = np.linspace(Y_CUTS[bj], Y_CUTS[bj + 1], 2 * NY[bj] + 1)
            elems += fine_grid_block(pool, xs, ys)
    elems += ring_elements(pool)

    coords = np.array(pool.coords)
    elem_q2 = np.array(elems, dtype=int)

    # geometric boundary detection: an edge belongs to a set when its two
    # corners and mid-edge node all lie on that curve
    curves = {
        "inflow": lambda x, y: abs(x) < 1e-9,
        "outflow": lambda x, y: abs(x - LENGTH) < 1e-9,
        "walls": lambda x, y: abs(y) < 1e-9 or abs(y - HEIGHT) < 1e-9,
        "cylinder": lambda x, y: abs(np.hypot(x - CX, y - CY) - RADIUS) < 1e-9,
    }
    boundary = {name: [] for name in curves}
    edge_corner = [(0, 1), (1, 2), (2, 3), (3, 0)]
    for e, conn in enumerate(elem_q2):
        for le in range(4):
            c0, c1 = edge_corner[le]
            pts = coords[[conn[c0], conn[c1], conn[4 + le]]]
            for name, on_curve in curves.items():
                if all(on_curve(x, y) for x, y in pts):
                    boundary[name].append((e, le))
                    break

    mesh = _finalize(coords, elem_q2, boundary)
    check_jacobians(mesh)
    return mesh


def main():
    out = sys.argv[1] if len(sys.argv) > 1 else "src/latinflow/cases/cylinder.mesh"
    mesh = build_mesh()
    with open(out, "w", encoding="ascii") as fh:
        write_mesh(mesh, fh)
    counts = {k: len(v) for k, v in mesh.boundary_edges.items()}
    print(
        f"wrote {out}: {mesh.n_elements} elements, {mesh.n_q2} quadratic nodes, "
        f"{mesh.n_q1} linear nodes, boundary edges {counts}"
    )


if __name__ == "__main__":
    main()
