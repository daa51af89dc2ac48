"""Shared fixtures: a small pressure-driven channel case."""

import numpy as np
import pytest

from latinflow.config import build_mesh, build_problem, parse_config

CHANNEL_TEXT = """\
case.name = channel-test
geometry.length = 2.5
geometry.height = 0.4
mesh.nx = 8
mesh.ny = 2
material.mu = 1.0
material.lam = 1000.0
time.t_end = 5e-3
time.n_steps = 20
bc.inflow.kind = pressure
bc.inflow.value = 2.0
bc.outflow.kind = pressure
bc.outflow.value = 1.0
bc.walls.kind = no_slip
output.probes = 1.25 0.0
"""


@pytest.fixture(scope="session")
def channel_cfg():
    return parse_config(CHANNEL_TEXT)


@pytest.fixture(scope="session")
def channel_mesh(channel_cfg):
    return build_mesh(channel_cfg)


@pytest.fixture(scope="session")
def channel_problem(channel_cfg, channel_mesh):
    return build_problem(channel_cfg, channel_mesh)


def relative_error(a, b):
    """Relative L2 difference over all time steps after t = 0."""
    return np.linalg.norm(a[1:] - b[1:]) / np.linalg.norm(b[1:])
