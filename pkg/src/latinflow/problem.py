"""Discrete problem description shared by the iterative solver and the oracles.

A Problem bundles the mesh-level operators, the time grid, and the fully
resolved boundary data: Dirichlet DoF indices with value trajectories and
assembled load vectors (body force and Neumann tractions).  Pressure
boundary conditions induce both a density Dirichlet value p_d/(r T0) and a
velocity traction -p_d n; that translation happens in the config layer.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .assembly import GaussData
from .constitutive import Material, SearchDirections
from .mesh import Mesh


@dataclass
class Problem:
    mesh: Mesh
    gd: GaussData
    material: Material
    sd: SearchDirections
    times: np.ndarray               # (nt,), times[0] = 0
    fixed_rho: np.ndarray           # Q1 DoF indices with prescribed density
    rho_d: np.ndarray               # (nt, len(fixed_rho))
    fixed_v: np.ndarray             # blocked velocity DoF indices
    v_d: np.ndarray                 # (nt, len(fixed_v))
    load_v: np.ndarray              # (nt, 2 n2) assembled tractions + body force
    time_weights: np.ndarray = field(init=False)

    def __post_init__(self):
        nt = self.times.size
        dt = np.diff(self.times)
        # rectangle rule excluding t=0, consistent with backward Euler
        self.time_weights = np.concatenate([[0.0], dt])
        self.rho_d = np.broadcast_to(self.rho_d, (nt, self.fixed_rho.size)).copy()
        self.v_d = np.broadcast_to(self.v_d, (nt, self.fixed_v.size)).copy()
        self.load_v = np.broadcast_to(self.load_v, (nt, 2 * self.mesh.n_q2)).copy()

    @property
    def n_times(self) -> int:
        return self.times.size

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])
