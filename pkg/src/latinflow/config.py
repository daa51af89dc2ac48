"""Case configuration: flat ``section.key = value`` ASCII files.

The format is line-oriented and human-diffable.  ``#`` starts a comment,
blank lines are skipped, and every setting is a single ``dotted.key = value``
pair.  Boundary conditions live under ``bc.<set_name>.*`` where the set name
must exist in the mesh.  All quantities are SI; no unit checking is done.
"""

from __future__ import annotations

import difflib
import os
from dataclasses import dataclass, field

import numpy as np

from .assembly import GaussData, neumann_load
from .constitutive import Material, build_search_directions
from .errors import ConfigError
from .mesh import Mesh, generate_rectangle, import_mesh
from .problem import Problem

BC_KINDS = ("pressure", "no_slip", "velocity")

# keys with a fixed spelling; bc.* keys are validated separately
_KNOWN_KEYS = {
    "case.name": str,
    "case.mesh_file": str,
    "geometry.length": float,
    "geometry.height": float,
    "mesh.nx": int,
    "mesh.ny": int,
    "material.mu": float,
    "material.lam": float,
    "material.R": float,
    "material.M": float,
    "material.T0": float,
    "material.p0": float,
    "time.t_end": float,
    "time.n_steps": int,
    "solver.eta_c": float,
    "solver.max_iterations": int,
    "solver.t_v": float,
    "solver.t_rho": float,
    "solver.L_c": float,
    "solver.kappa": float,
    "solver.relaxation": float,
    "solver.pgd_fixed_point_max": int,
    "solver.reference_mode": bool,
    "solver.path": str,
    "output.directory": str,
    "output.vtk_stride": int,
    "output.probes": str,
}

_REQUIRED = ("case.name", "time.t_end", "time.n_steps")


@dataclass
class BoundaryCondition:
    kind: str                       # pressure | no_slip | velocity
    value: np.ndarray = None        # () for pressure, (2,) for velocity
    table: np.ndarray = None        # (k, 1+m) rows of (t, value...)

    def trajectory(self, times: np.ndarray) -> np.ndarray:
        """Sampled value trajectory on the time grid, shape (nt, m)."""
        if self.kind == "no_slip":
            return np.zeros((times.size, 2))
        if self.table is not None:
            cols = [
                np.interp(times, self.table[:, 0], self.table[:, j])
                for j in range(1, self.table.shape[1])
            ]
            return np.column_stack(cols)
        v = np.atleast_1d(self.value)
        return np.broadcast_to(v, (times.size, v.size)).copy()


@dataclass
class CaseConfig:
    name: str
    mesh_file: str = None
    length: float = None
    height: float = None
    nx: int = None
    ny: int = None
    material: Material = field(default_factory=lambda: Material(mu=1.0, lam=1000.0))
    bcs: dict = field(default_factory=dict)      # set name -> BoundaryCondition
    t_end: float = 5e-3
    n_steps: int = 100
    eta_c: float = 1e-4
    max_iterations: int = 100
    t_v: float = None                # default 250 t_end
    t_rho: float = None              # default 0.06 t_end
    L_c: float = None                # default y-extent / 10
    kappa: float = 0.1
    relaxation: float = 0.9
    pgd_fixed_point_max: int = 3
    reference_mode: bool = False
    path: str = "pgd"
    output_directory: str = "output"
    vtk_stride: int = 1
    probes: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))

    @property
    def effective_eta_c(self) -> float:
        return 1e-8 if self.reference_mode else self.eta_c

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_end, self.n_steps + 1)


def _coerce(key: str, raw: str, typ):
    try:
        if typ is bool:
            low = raw.strip().lower()
            if low in ("true", "1", "yes", "on"):
                return True
            if low in ("false", "0", "no", "off"):
                return False
            raise ValueError(raw)
        return typ(raw.strip())
    except ValueError as exc:
        raise ConfigError(f"invalid value {raw.strip()!r} for key {key!r}") from exc


def _suggest(key: str, candidates) -> str:
    near = difflib.get_close_matches(key, list(candidates), n=1)
    return f"; nearest valid key: {near[0]!r}" if near else ""


def _parse_floats(raw: str) -> np.ndarray:
    try:
        return np.array([float(tok) for tok in raw.replace(",", " ").split()])
    except ValueError as exc:
        raise ConfigError(f"expected numbers, got {raw!r}") from exc


def parse_config(text: str) -> CaseConfig:
    """Parse and validate a case file, applying documented defaults."""
    pairs: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {body!r}")
        key, raw = (s.strip() for s in body.split("=", 1))
        if key in pairs:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        pairs[key] = raw

    bc_specs: dict[str, dict[str, str]] = {}
    values: dict[str, object] = {}
    for key, raw in pairs.items():
        if key.startswith("bc."):
            parts = key.split(".")
            if len(parts) != 3 or parts[2] not in ("kind", "value", "table"):
                raise ConfigError(
                    f"unknown key {key!r}; boundary keys are bc.<set>.kind, "
                    "bc.<set>.value, bc.<set>.table"
                )
            bc_specs.setdefault(parts[1], {})[parts[2]] = raw
        elif key in _KNOWN_KEYS:
            values[key] = _coerce(key, raw, _KNOWN_KEYS[key])
        else:
            raise ConfigError(f"unknown key {key!r}{_suggest(key, _KNOWN_KEYS)}")

    for req in _REQUIRED:
        if req not in values:
            raise ConfigError(f"missing required key {req!r}")

    bcs = {}
    for name, spec in bc_specs.items():
        if "kind" not in spec:
            raise ConfigError(f"boundary set {name!r}: missing bc.{name}.kind")
        kind = spec["kind"]
        if kind not in BC_KINDS:
            raise ConfigError(
                f"boundary set {name!r}: unknown kind {kind!r}"
                f"{_suggest(kind, BC_KINDS)}"
            )
        bc = BoundaryCondition(kind=kind)
        if "table" in spec:
            rows = [_parse_floats(r) for r in spec["table"].split(";") if r.strip()]
            widths = {r.size for r in rows}
            if len(widths) != 1 or min(widths) < 2:
                raise ConfigError(f"boundary set {name!r}: malformed table")
            bc.table = np.array(rows)
        elif "value" in spec:
            vals = _parse_floats(spec["value"])
            expected = 1 if kind == "pressure" else 2
            if kind != "no_slip" and vals.size != expected:
                raise ConfigError(
                    f"boundary set {name!r}: kind {kind!r} takes {expected} value(s)"
                )
            bc.value = vals if vals.size > 1 else vals[0]
        elif kind != "no_slip":
            raise ConfigError(f"boundary set {name!r}: missing bc.{name}.value")
        bcs[name] = bc

    mat_kwargs = {
        attr: values[f"material.{attr}"]
        for attr in ("mu", "lam", "R", "M", "T0", "p0")
        if f"material.{attr}" in values
    }
    if "mu" not in mat_kwargs or "lam" not in mat_kwargs:
        raise ConfigError("material.mu and material.lam are required")

    cfg = CaseConfig(
        name=values["case.name"],
        mesh_file=values.get("case.mesh_file"),
        length=values.get("geometry.length"),
        height=values.get("geometry.height"),
        nx=values.get("mesh.nx"),
        ny=values.get("mesh.ny"),
        material=Material(**mat_kwargs),
        bcs=bcs,
        t_end=values["time.t_end"],
        n_steps=values["time.n_steps"],
    )
    for attr, key in (
        ("eta_c", "solver.eta_c"),
        ("max_iterations", "solver.max_iterations"),
        ("t_v", "solver.t_v"),
        ("t_rho", "solver.t_rho"),
        ("L_c", "solver.L_c"),
        ("kappa", "solver.kappa"),
        ("relaxation", "solver.relaxation"),
        ("pgd_fixed_point_max", "solver.pgd_fixed_point_max"),
        ("reference_mode", "solver.reference_mode"),
        ("path", "solver.path"),
        ("output_directory", "output.directory"),
        ("vtk_stride", "output.vtk_stride"),
    ):
        if key in values:
            setattr(cfg, attr, values[key])
    if "output.probes" in values:
        flat = _parse_floats(values["output.probes"].replace(";", " "))
        if flat.size % 2:
            raise ConfigError("output.probes needs an even number of coordinates")
        cfg.probes = flat.reshape(-1, 2)

    if cfg.t_end <= 0:
        raise ConfigError("time.t_end must be positive")
    if cfg.n_steps < 1:
        raise ConfigError("time.n_steps must be at least 1")
    if cfg.eta_c <= 0 or cfg.max_iterations < 1:
        raise ConfigError("solver.eta_c and solver.max_iterations must be positive")
    if cfg.path not in ("pgd", "full"):
        raise ConfigError(f"solver.path must be 'pgd' or 'full', got {cfg.path!r}")
    if cfg.mesh_file is None and None in (cfg.length, cfg.height, cfg.nx, cfg.ny):
        raise ConfigError(
            "either case.mesh_file or the full geometry/mesh block "
            "(geometry.length, geometry.height, mesh.nx, mesh.ny) is required"
        )
    return cfg


def serialize_config(cfg: CaseConfig) -> str:
    """Inverse of parse_config (up to key order); round-trips exactly."""
    lines = [f"case.name = {cfg.name}"]
    if cfg.mesh_file is not None:
        lines.append(f"case.mesh_file = {cfg.mesh_file}")
    else:
        lines += [
            f"geometry.length = {cfg.length!r}",
            f"geometry.height = {cfg.height!r}",
            f"mesh.nx = {cfg.nx}",
            f"mesh.ny = {cfg.ny}",
        ]
    m = cfg.material
    lines += [
        f"material.mu = {m.mu!r}",
        f"material.lam = {m.lam!r}",
        f"material.R = {m.R!r}",
        f"material.M = {m.M!r}",
        f"material.T0 = {m.T0!r}",
        f"material.p0 = {m.p0!r}",
    ]
    for name, bc in cfg.bcs.items():
        lines.append(f"bc.{name}.kind = {bc.kind}")
        if bc.table is not None:
            rows = " ; ".join(" ".join(repr(float(x)) for x in r) for r in bc.table)
            lines.append(f"bc.{name}.table = {rows}")
        elif bc.value is not None:
            vals = np.atleast_1d(bc.value)
            lines.append(f"bc.{name}.value = {' '.join(repr(float(x)) for x in vals)}")
    lines += [
        f"time.t_end = {cfg.t_end!r}",
        f"time.n_steps = {cfg.n_steps}",
        f"solver.eta_c = {cfg.eta_c!r}",
        f"solver.max_iterations = {cfg.max_iterations}",
    ]
    if cfg.t_v is not None:
        lines.append(f"solver.t_v = {cfg.t_v!r}")
    if cfg.t_rho is not None:
        lines.append(f"solver.t_rho = {cfg.t_rho!r}")
    if cfg.L_c is not None:
        lines.append(f"solver.L_c = {cfg.L_c!r}")
    lines += [
        f"solver.kappa = {cfg.kappa!r}",
        f"solver.relaxation = {cfg.relaxation!r}",
        f"solver.pgd_fixed_point_max = {cfg.pgd_fixed_point_max}",
        f"solver.reference_mode = {str(cfg.reference_mode).lower()}",
        f"solver.path = {cfg.path}",
        f"output.directory = {cfg.output_directory}",
        f"output.vtk_stride = {cfg.vtk_stride}",
    ]
    if cfg.probes.size:
        lines.append(
            "output.probes = "
            + " ; ".join(f"{float(x)!r} {float(y)!r}" for x, y in cfg.probes)
        )
    return "\n".join(lines) + "\n"


def load_config(path: str) -> CaseConfig:
    with open(path, encoding="utf-8") as fh:
        cfg = parse_config(fh.read())
    if cfg.mesh_file is not None and not os.path.isabs(cfg.mesh_file):
        cfg.mesh_file = os.path.join(os.path.dirname(os.path.abspath(path)), cfg.mesh_file)
    return cfg


def build_mesh(cfg: CaseConfig) -> Mesh:
    if cfg.mesh_file is not None:
        with open(cfg.mesh_file, encoding="ascii") as fh:
            return import_mesh(fh)
    return generate_rectangle(cfg.length, cfg.height, cfg.nx, cfg.ny)


def build_problem(cfg: CaseConfig, mesh: Mesh) -> Problem:
    """Translate the configured boundary conditions into a discrete Problem.

    Pressure sets prescribe the density (p_d / (r T0)) and load the velocity
    with the traction -p_d n; no_slip and velocity sets fix the velocity
    DoFs.  Velocity Dirichlet values win over tractions on shared nodes.
    """
    for name in cfg.bcs:
        if name not in mesh.boundary_edges:
            avail = ", ".join(sorted(mesh.boundary_edges))
            raise ConfigError(
                f"boundary set {name!r} not in mesh; available sets: {avail}"
            )
    gd = GaussData(mesh)
    times = cfg.times
    L_c = cfg.L_c
    if L_c is None:
        # a fraction of the transverse extent: the density-gradient
        # direction tolerates a wide range but favors short length scales
        y = mesh.q2_coords[:, 1]
        L_c = float(y.max() - y.min()) / 10.0
    sd = build_search_directions(
        cfg.material, L_c=L_c, T=cfg.t_end, t_v=cfg.t_v, t_rho=cfg.t_rho
    )

    n2 = mesh.n_q2
    rt0 = cfg.material.r * cfg.material.T0
    fixed_rho, rho_cols = [], []
    fixed_v, v_cols = [], []
    load_v = np.zeros((times.size, 2 * n2))
    for name, bc in cfg.bcs.items():
        traj = bc.trajectory(times)
        if bc.kind == "pressure":
            nodes = mesh.boundary_q1_nodes(name)
            fixed_rho.append(nodes)
            rho_cols.append(np.repeat(traj[:, :1] / rt0, nodes.size, axis=1))
            # unit-pressure traction load, scaled by the pressure trajectory
            load_v += traj[:, :1] * neumann_load(mesh, name, 1.0)
        else:
            nodes = mesh.boundary_q2_nodes(name)
            fixed_v.append(np.concatenate([nodes, n2 + nodes]))
            v_cols.append(
                np.concatenate(
                    [
                        np.repeat(traj[:, :1], nodes.size, axis=1),
                        np.repeat(traj[:, 1:2], nodes.size, axis=1),
                    ],
                    axis=1,
                )
            )

    def _merge(idx_parts, col_parts, width):
        if not idx_parts:
            return np.zeros(0, dtype=int), np.zeros((times.size, 0))
        idx = np.concatenate(idx_parts)
        cols = np.concatenate(col_parts, axis=1)
        # deduplicate (corner nodes shared by two sets); first set wins
        _, keep = np.unique(idx, return_index=True)
        return idx[keep], cols[:, keep]

    fixed_rho, rho_d = _merge(fixed_rho, rho_cols, mesh.n_q1)
    fixed_v, v_d = _merge(fixed_v, v_cols, 2 * n2)
    return Problem(
        mesh=mesh, gd=gd, material=cfg.material, sd=sd, times=times,
        fixed_rho=fixed_rho, rho_d=rho_d, fixed_v=fixed_v, v_d=v_d,
        load_v=load_v,
    )
