"""Serialization: legacy ASCII VTK fields, history/probe CSVs, mode export.

VTK files use the unstructured-grid legacy format with biquadratic
quadrilateral cells (type 28), whose node ordering matches the element
connectivity used here (corners counter-clockwise, then mid-edge nodes,
then the centre).  Scalar fields stored on the linear sub-mesh are
interpolated to the quadratic nodes before writing.
"""

from __future__ import annotations

import csv
import os

import numpy as np

from .elements import shape_q1, shape_q2
from .errors import GeometryError, LatinflowError
from .mesh import Mesh

VTK_BIQUADRATIC_QUAD = 28


def q1_to_q2_field(mesh: Mesh, values_q1: np.ndarray) -> np.ndarray:
    """Interpolate a Q1 nodal field onto the Q2 nodes.

    Mid-edge nodes average the two adjacent corners; centre nodes average
    all four.  Exact for bilinear fields on parallelogram elements.
    """
    out = np.zeros(values_q1.shape[:-1] + (mesh.n_q2,))
    out[..., mesh.q1_to_q2] = values_q1
    corner = values_q1[..., mesh.elem_q1]            # (..., E, 4)
    for edge in range(4):
        c0, c1 = edge, (edge + 1) % 4
        out[..., mesh.elem_q2[:, 4 + edge]] = 0.5 * (
            corner[..., c0] + corner[..., c1]
        )
    out[..., mesh.elem_q2[:, 8]] = corner.mean(axis=-1)
    return out


def write_vtk(path: str, mesh: Mesh, velocity: np.ndarray, pressure_q1: np.ndarray,
              density_q1: np.ndarray, title: str = "latinflow fields") -> None:
    """One time snapshot: velocity (2 n2 blocked), pressure/density on Q1."""
    n2 = mesh.n_q2
    press = q1_to_q2_field(mesh, pressure_q1)
    dens = q1_to_q2_field(mesh, density_q1)
    with open(path, "w", encoding="ascii") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(title[:255] + "\n")
        fh.write("ASCII\nDATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {n2} double\n")
        for x, y in mesh.q2_coords:
            fh.write(f"{x:.16e} {y:.16e} 0.0\n")
        ne = mesh.n_elements
        fh.write(f"CELLS {ne} {ne * 10}\n")
        for conn in mesh.elem_q2:
            fh.write("9 " + " ".join(str(int(c)) for c in conn) + "\n")
        fh.write(f"CELL_TYPES {ne}\n")
        fh.write("\n".join([str(VTK_BIQUADRATIC_QUAD)] * ne) + "\n")
        fh.write(f"POINT_DATA {n2}\n")
        fh.write("VECTORS velocity double\n")
        for i in range(n2):
            fh.write(f"{velocity[i]:.16e} {velocity[n2 + i]:.16e} 0.0\n")
        fh.write("SCALARS pressure double 1\nLOOKUP_TABLE default\n")
        fh.write("\n".join(f"{v:.16e}" for v in press) + "\n")
        fh.write("SCALARS density double 1\nLOOKUP_TABLE default\n")
        fh.write("\n".join(f"{v:.16e}" for v in dens) + "\n")


def read_vtk(path: str) -> dict:
    """Read back a file produced by write_vtk.

    Returns {"points": (n, 3), "velocity": (n, 3), "pressure": (n,),
    "density": (n,)}.
    """
    with open(path, encoding="ascii") as fh:
        tokens_by_line = [line.split() for line in fh]
    out: dict[str, np.ndarray] = {}
    i = 0
    n_lines = len(tokens_by_line)

    def _read_floats(start: int, count: int) -> tuple[np.ndarray, int]:
        vals: list[float] = []
        j = start
        while len(vals) < count and j < n_lines:
            vals.extend(float(t) for t in tokens_by_line[j])
            j += 1
        if len(vals) < count:
            raise LatinflowError(f"{path}: truncated data block")
        return np.array(vals[:count]), j

    while i < n_lines:
        tok = tokens_by_line[i]
        if not tok:
            i += 1
            continue
        key = tok[0].upper()
        if key == "POINTS":
            n = int(tok[1])
            vals, i = _read_floats(i + 1, 3 * n)
            out["points"] = vals.reshape(n, 3)
            continue
        if key == "VECTORS":
            n = out["points"].shape[0]
            vals, i = _read_floats(i + 1, 3 * n)
            out[tok[1]] = vals.reshape(n, 3)
            continue
        if key == "SCALARS":
            n = out["points"].shape[0]
            vals, i = _read_floats(i + 2, n)   # skip LOOKUP_TABLE line
            out[tok[1]] = vals
            continue
        i += 1
    if "points" not in out:
        raise LatinflowError(f"{path}: not a legacy VTK unstructured grid file")
    return out


def write_history_csv(path: str, history) -> None:
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh)
        w.writerow(
            ["iteration", "eta_v", "eta_rho", "n_modes_v", "n_modes_rho",
             "wall_seconds"]
        )
        for rec in history:
            w.writerow(
                [rec.iteration, repr(rec.eta_v), repr(rec.eta_rho),
                 rec.n_modes_v, rec.n_modes_rho, repr(rec.wall_seconds)]
            )


def locate_point(mesh: Mesh, xy, tol: float = 1e-10):
    """Find (element, (xi, eta)) containing a physical point.

    Newton inversion of the biquadratic map, tried on candidate elements in
    order of corner-centroid distance.  Raises GeometryError if the point
    lies outside the mesh.
    """
    xy = np.asarray(xy, dtype=float)
    centroids = mesh.q2_coords[mesh.elem_q2[:, 8]]
    order = np.argsort(np.sum((centroids - xy) ** 2, axis=1))
    for e in order[: min(32, order.size)]:
        coords = mesh.element_coords(e)
        ref = np.zeros(2)
        ok = False
        for _ in range(30):
            n, dn = shape_q2(ref[0], ref[1])
            r = n @ coords - xy
            if np.linalg.norm(r) < tol:
                ok = True
                break
            jac = dn.T @ coords          # d(x)/d(xi) transposed pieces
            ref -= np.linalg.solve(jac.T, r)
            ref = np.clip(ref, -1.5, 1.5)
        if ok and np.all(np.abs(ref) <= 1.0 + 1e-8):
            return int(e), np.clip(ref, -1.0, 1.0)
    raise GeometryError(f"point {tuple(xy)} lies outside the mesh")


def sample_solution(mesh: Mesh, solution, xy):
    """Time series (v_x, v_y, pressure) at a physical point."""
    e, (xi, eta) = locate_point(mesh, xy)
    n2_shape, _ = shape_q2(xi, eta)
    n1_shape, _ = shape_q1(xi, eta)
    conn2 = mesh.elem_q2[e]
    conn1 = mesh.elem_q1[e]
    n2 = mesh.n_q2
    vx = solution.v[:, conn2] @ n2_shape
    vy = solution.v[:, n2 + conn2] @ n2_shape
    press = solution.pressure[:, conn1] @ n1_shape
    return vx, vy, press


def write_probes_csv(path: str, mesh: Mesh, solution, probes) -> None:
    """Columns: time, then per probe v_x, v_y, pressure."""
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    series = [sample_solution(mesh, solution, p) for p in probes]
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh)
        header = ["time"]
        for k, (x, y) in enumerate(probes):
            header += [f"p{k}_vx", f"p{k}_vy", f"p{k}_pressure"]
        w.writerow(header)
        for n, t in enumerate(solution.times):
            row = [repr(float(t))]
            for vx, vy, press in series:
                row += [repr(float(vx[n])), repr(float(vy[n])), repr(float(press[n]))]
            w.writerow(row)


def export_modes(directory: str, mesh: Mesh, field, prefix: str) -> None:
    """One ASCII file of nodal values per spatial mode, plus one CSV with
    every temporal coefficient function."""
    os.makedirs(directory, exist_ok=True)
    for k, mode in enumerate(field.spatial_modes):
        full = np.zeros(field.origin.shape[1])
        full[field.system.free] = mode
        fname = os.path.join(directory, f"{prefix}_mode_{k:03d}.txt")
        np.savetxt(fname, full, fmt="%.16e",
                   header=f"{prefix} spatial mode {k} ({full.size} dofs)")
    csv_path = os.path.join(directory, f"{prefix}_temporal.csv")
    with open(csv_path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh)
        w.writerow(["step"] + [f"mode_{k}" for k in range(field.n_modes)])
        for n in range(field.origin.shape[0]):
            w.writerow([n] + [repr(float(lam[n])) for lam in field.temporal_modes])


def solution_l2_difference(dir_a: str, dir_b: str) -> dict:
    """Space-time relative L2 differences per field between two VTK series.

    Matches files by name; both directories must contain the same set of
    .vtk files on the same mesh.
    """
    names_a = sorted(f for f in os.listdir(dir_a) if f.endswith(".vtk"))
    names_b = sorted(f for f in os.listdir(dir_b) if f.endswith(".vtk"))
    if not names_a or names_a != names_b:
        raise LatinflowError(
            f"directories {dir_a!r} and {dir_b!r} do not contain matching .vtk files"
        )
    num = {"velocity": 0.0, "pressure": 0.0, "density": 0.0}
    den = dict(num)
    for name in names_a:
        a = read_vtk(os.path.join(dir_a, name))
        b = read_vtk(os.path.join(dir_b, name))
        if a["points"].shape != b["points"].shape:
            raise LatinflowError(f"{name}: meshes differ between directories")
        for fieldname in num:
            da, db = a[fieldname], b[fieldname]
            num[fieldname] += float(np.sum((da - db) ** 2))
            den[fieldname] += float(np.sum(db ** 2))
    return {
        f: (np.sqrt(num[f] / den[f]) if den[f] > 0 else
            (0.0 if num[f] == 0.0 else np.inf))
        for f in num
    }
