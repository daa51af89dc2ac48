"""Taylor-Hood quadrilateral meshes: structured generation, file I/O, boundaries.

Every element carries 9 velocity (Q2) nodes and, through its corner
subsequence, 4 density (Q1) nodes.  Q1 nodes are a renumbered subset of
the Q2 nodes; ``q1_to_q2`` maps Q1 indices to their Q2 counterparts.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .elements import EDGE_CORNERS, gauss_3x3, map_point
from .errors import GeometryError, LatinflowError, MeshFormatError

MESH_HEADER = "latinflow-mesh v1 dim 2"


@dataclass
class Mesh:
    """2D Taylor-Hood mesh (immutable after construction)."""

    q2_coords: np.ndarray              # (n2, 2)
    elem_q2: np.ndarray                # (E, 9) indices into q2_coords
    q1_to_q2: np.ndarray               # (n1,) Q2 index of each Q1 node
    elem_q1: np.ndarray                # (E, 4) indices into Q1 numbering
    boundary_edges: dict[str, list[tuple[int, int]]] = field(default_factory=dict)

    dimension: int = 2

    @property
    def n_q2(self) -> int:
        return self.q2_coords.shape[0]

    @property
    def n_q1(self) -> int:
        return self.q1_to_q2.shape[0]

    @property
    def n_elements(self) -> int:
        return self.elem_q2.shape[0]

    @property
    def q1_coords(self) -> np.ndarray:
        return self.q2_coords[self.q1_to_q2]

    def element_coords(self, e: int) -> np.ndarray:
        return self.q2_coords[self.elem_q2[e]]

    def boundary_q2_nodes(self, name: str) -> np.ndarray:
        """Sorted Q2 node indices lying on the named boundary set."""
        nodes: set[int] = set()
        for e, edge in self._edges(name):
            c0, c1 = EDGE_CORNERS[edge]
            conn = self.elem_q2[e]
            nodes.update((int(conn[c0]), int(conn[c1]), int(conn[4 + edge])))
        return np.array(sorted(nodes), dtype=int)

    def boundary_q1_nodes(self, name: str) -> np.ndarray:
        """Sorted Q1 node indices lying on the named boundary set."""
        q2_nodes = set(self.boundary_q2_nodes(name).tolist())
        return np.array(
            [i for i, g in enumerate(self.q1_to_q2) if int(g) in q2_nodes], dtype=int
        )

    def _edges(self, name: str):
        if name not in self.boundary_edges:
            avail = ", ".join(sorted(self.boundary_edges))
            raise LatinflowError(
                f"unknown boundary set {name!r}; available sets: {avail}"
            )
        return self.boundary_edges[name]


def generate_rectangle(
    length: float,
    height: float,
    nx: int,
    ny: int,
    set_names: tuple[str, str, str, str] = ("inflow", "outflow", "walls", "walls"),
) -> Mesh:
    """Structured rectangle mesh on [0, length] x [-height/2, height/2].

    ``set_names`` names the (x=0, x=length, y=-h/2, y=+h/2) boundary sets;
    equal names merge the sets (default: both horizontal sides are "walls").
    """
    if length <= 0 or height <= 0:
        raise GeometryError(f"non-positive dimensions: {length} x {height}")
    if nx < 1 or ny < 1:
        raise GeometryError(f"subdivisions must be >= 1, got nx={nx}, ny={ny}")

    mx, my = 2 * nx + 1, 2 * ny + 1
    xs = np.linspace(0.0, length, mx)
    ys = np.linspace(-height / 2.0, height / 2.0, my)
    xx, yy = np.meshgrid(xs, ys, indexing="ij")
    q2_coords = np.column_stack([xx.ravel(), yy.ravel()])

    def gid(i, j):
        return i * my + j

    elem_q2 = np.empty((nx * ny, 9), dtype=int)
    for ex in range(nx):
        for ey in range(ny):
            i, j = 2 * ex, 2 * ey
            elem_q2[ex * ny + ey] = [
                gid(i, j), gid(i + 2, j), gid(i + 2, j + 2), gid(i, j + 2),
                gid(i + 1, j), gid(i + 2, j + 1), gid(i + 1, j + 2), gid(i, j + 1),
                gid(i + 1, j + 1),
            ]

    boundary: dict[str, list[tuple[int, int]]] = {}
    left, right, bottom, top = set_names
    for name in set_names:
        boundary.setdefault(name, [])
    for ey in range(ny):
        boundary[left].append((0 * ny + ey, 3))
        boundary[right].append(((nx - 1) * ny + ey, 1))
    for ex in range(nx):
        boundary[bottom].append((ex * ny + 0, 0))
        boundary[top].append((ex * ny + (ny - 1), 2))

    return _finalize(q2_coords, elem_q2, boundary)


def _finalize(q2_coords, elem_q2, boundary) -> Mesh:
    """Derive the Q1 numbering from element corners and build the mesh."""
    corner_nodes = np.unique(elem_q2[:, :4])
    q2_to_q1 = -np.ones(q2_coords.shape[0], dtype=int)
    q2_to_q1[corner_nodes] = np.arange(corner_nodes.size)
    elem_q1 = q2_to_q1[elem_q2[:, :4]]
    return Mesh(
        q2_coords=np.asarray(q2_coords, dtype=float),
        elem_q2=np.asarray(elem_q2, dtype=int),
        q1_to_q2=corner_nodes,
        elem_q1=elem_q1,
        boundary_edges=boundary,
    )


def check_jacobians(mesh: Mesh) -> None:
    """Raise GeometryError if any element has det J <= 0 at a Gauss point."""
    rule = gauss_3x3()
    for e in range(mesh.n_elements):
        coords = mesh.element_coords(e)
        for xi, eta in rule.points:
            try:
                map_point(coords, xi, eta)
            except GeometryError as err:
                raise GeometryError(f"element {e}: {err}") from None


def boundary_set(mesh: Mesh, name: str):
    """Edges of a named set with unit outward normals.

    Returns a list of (element, local_edge, normal) where the normal is
    evaluated at the edge midpoint.
    """
    out = []
    for e, edge in mesh._edges(name):
        coords = mesh.element_coords(e)
        from .elements import edge_quadrature

        _, _, normals, _ = edge_quadrature(coords, edge)
        out.append((e, edge, normals[1]))
    return out


def write_mesh(mesh: Mesh, stream: io.TextIOBase) -> None:
    """Serialize to the ASCII mesh format (see import_mesh)."""
    stream.write(MESH_HEADER + "\n")
    stream.write(f"nodes {mesh.n_q2}\n")
    for x, y in mesh.q2_coords:
        stream.write(f"{float(x)!r} {float(y)!r}\n")
    stream.write(f"elements {mesh.n_elements}\n")
    for conn in mesh.elem_q2:
        stream.write(" ".join(str(int(i)) for i in conn) + "\n")
    for name in sorted(mesh.boundary_edges):
        edges = mesh.boundary_edges[name]
        stream.write(f"boundary {name} {len(edges)}\n")
        for e, le in edges:
            stream.write(f"{e} {le}\n")


def import_mesh(stream) -> Mesh:
    """Parse the line-oriented ASCII mesh format.

    Format: header ``latinflow-mesh v1 dim 2``; block ``nodes <N>`` with N
    ``x y`` lines (Q2 nodes); block ``elements <E>`` with E lines of 9
    zero-based node indices (corners CCW, mid-edges, center); zero or more
    ``boundary <name> <K>`` blocks with ``element local_edge`` lines.
    ``#`` starts a comment.  Jacobian positivity is checked on load.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    lines = _content_lines(stream)
    try:
        lineno, text = next(lines)
    except StopIteration:
        raise MeshFormatError("empty mesh file") from None
    if text != MESH_HEADER:
        raise MeshFormatError(f"line {lineno}: expected header {MESH_HEADER!r}")

    n_nodes = _block_count(lines, "nodes")
    coords = np.empty((n_nodes, 2))
    for k in range(n_nodes):
        lineno, text = _next_line(lines, "node coordinates")
        parts = text.split()
        if len(parts) != 2:
            raise MeshFormatError(f"line {lineno}: expected 'x y', got {text!r}")
        try:
            coords[k] = [float(parts[0]), float(parts[1])]
        except ValueError:
            raise MeshFormatError(f"line {lineno}: bad coordinate in {text!r}") from None

    n_elems = _block_count(lines, "elements")
    elem_q2 = np.empty((n_elems, 9), dtype=int)
    for k in range(n_elems):
        lineno, text = _next_line(lines, "element connectivity")
        parts = text.split()
        if len(parts) != 9:
            raise MeshFormatError(f"line {lineno}: expected 9 node indices")
        try:
            conn = [int(p) for p in parts]
        except ValueError:
            raise MeshFormatError(f"line {lineno}: bad index in {text!r}") from None
        for c in conn:
            if c < 0 or c >= n_nodes:
                raise MeshFormatError(
                    f"line {lineno}: node index {c} out of range (have {n_nodes} nodes)"
                )
        elem_q2[k] = conn

    boundary: dict[str, list[tuple[int, int]]] = {}
    for lineno, text in lines:
        parts = text.split()
        if parts[0] != "boundary" or len(parts) != 3:
            raise MeshFormatError(f"line {lineno}: expected 'boundary <name> <K>'")
        name = parts[1]
        count = int(parts[2])
        edges = []
        for _ in range(count):
            lineno2, text2 = _next_line(lines, "boundary edge")
            p = text2.split()
            if len(p) != 2:
                raise MeshFormatError(f"line {lineno2}: expected 'element local_edge'")
            e, le = int(p[0]), int(p[1])
            if e < 0 or e >= n_elems:
                raise MeshFormatError(f"line {lineno2}: element index {e} out of range")
            if le < 0 or le > 3:
                raise MeshFormatError(f"line {lineno2}: local edge {le} out of range")
            edges.append((e, le))
        boundary.setdefault(name, []).extend(edges)

    mesh = _finalize(coords, elem_q2, boundary)
    check_jacobians(mesh)
    return mesh


def _content_lines(stream):
    for lineno, raw in enumerate(stream, start=1):
        text = raw.split("#", 1)[0].strip()
        if text:
            yield lineno, text


def _next_line(lines, what):
    try:
        return next(lines)
    except StopIteration:
        raise MeshFormatError(f"unexpected end of file while reading {what}") from None


def _block_count(lines, keyword):
    lineno, text = _next_line(lines, f"'{keyword}' block")
    parts = text.split()
    if len(parts) != 2 or parts[0] != keyword:
        raise MeshFormatError(f"line {lineno}: expected '{keyword} <count>'")
    try:
        return int(parts[1])
    except ValueError:
        raise MeshFormatError(f"line {lineno}: bad count {parts[1]!r}") from None
