"""VTK/CSV writers, point sampling, and solution comparison."""

import numpy as np
import pytest

from latinflow.driver import run_latin
from latinflow.errors import GeometryError
from latinflow.mesh import generate_rectangle
from latinflow.output import (
    export_modes,
    locate_point,
    q1_to_q2_field,
    read_vtk,
    sample_solution,
    solution_l2_difference,
    write_history_csv,
    write_probes_csv,
    write_vtk,
)


@pytest.fixture(scope="module")
def mesh():
    return generate_rectangle(2.5, 0.4, 4, 2)


@pytest.fixture(scope="module")
def solution(channel_problem):
    return run_latin(channel_problem, max_iterations=40, path="full")


def test_q1_to_q2_linear_exact(mesh):
    # prolongation of a Q1 field that is linear in x, y is exact on Q2 nodes
    f1 = 2.0 * mesh.q1_coords[:, 0] - 3.0 * mesh.q1_coords[:, 1] + 0.5
    f2 = q1_to_q2_field(mesh, f1)
    expected = 2.0 * mesh.q2_coords[:, 0] - 3.0 * mesh.q2_coords[:, 1] + 0.5
    assert np.allclose(f2, expected, atol=1e-12)


def test_q1_to_q2_matches_on_corners(mesh):
    rng = np.random.default_rng(0)
    f1 = rng.standard_normal(mesh.n_q1)
    f2 = q1_to_q2_field(mesh, f1)
    assert np.allclose(f2[mesh.q1_to_q2], f1)


def test_vtk_round_trip(tmp_path, mesh):
    rng = np.random.default_rng(1)
    n2 = mesh.n_q2
    velocity = rng.standard_normal(2 * n2)       # blocked [all x | all y]
    pressure = rng.standard_normal(mesh.n_q1)
    density = rng.standard_normal(mesh.n_q1)
    path = tmp_path / "snap.vtk"
    write_vtk(str(path), mesh, velocity, pressure, density)
    data = read_vtk(str(path))
    assert np.allclose(data["points"][:, :2], mesh.q2_coords)
    assert np.allclose(data["velocity"][:, 0], velocity[:n2])
    assert np.allclose(data["velocity"][:, 1], velocity[n2:])
    assert np.allclose(data["velocity"][:, 2], 0.0)
    # Q1 scalars are prolonged to the quadratic nodes before writing
    assert np.allclose(data["pressure"], q1_to_q2_field(mesh, pressure))
    assert np.allclose(data["density"], q1_to_q2_field(mesh, density))


def test_history_csv(tmp_path, solution):
    path = tmp_path / "history.csv"
    write_history_csv(str(path), solution.history)
    rows = path.read_text().strip().splitlines()
    header = rows[0].split(",")
    assert header == [
        "iteration", "eta_v", "eta_rho", "n_modes_v", "n_modes_rho", "wall_seconds",
    ]
    assert len(rows) == 1 + len(solution.history)
    first = rows[1].split(",")
    assert int(first[0]) == 1
    assert float(first[1]) == solution.history[0].eta_v


def test_locate_point(mesh):
    e, (xi, eta) = locate_point(mesh, np.array([1.3, 0.07]))
    from latinflow.elements import shape_q2

    n, _ = shape_q2(xi, eta)
    mapped = n @ mesh.q2_coords[mesh.elem_q2[e]]
    assert np.allclose(mapped, [1.3, 0.07], atol=1e-10)


def test_locate_point_at_node(mesh):
    target = mesh.q2_coords[mesh.elem_q2[0, 2]]
    e, (xi, eta) = locate_point(mesh, target)
    from latinflow.elements import shape_q2

    n, _ = shape_q2(xi, eta)
    mapped = n @ mesh.q2_coords[mesh.elem_q2[e]]
    assert np.allclose(mapped, target, atol=1e-10)


def test_locate_point_outside(mesh):
    with pytest.raises(GeometryError):
        locate_point(mesh, np.array([3.2, 0.0]))


def test_sample_solution_series(channel_problem, solution):
    vx, vy, press = sample_solution(
        channel_problem.mesh, solution, np.array([1.25, 0.0])
    )
    nt = channel_problem.n_times
    assert vx.shape == (nt,)
    assert vx[0] == 0.0
    assert np.all(vx[1:] > 0.0)
    assert 0.9 < press[-1] < 2.1


def test_probes_csv(tmp_path, channel_problem, solution):
    path = tmp_path / "probes.csv"
    write_probes_csv(
        str(path), channel_problem.mesh, solution, np.array([[1.25, 0.0], [0.5, 0.1]])
    )
    rows = path.read_text().strip().splitlines()
    assert rows[0].split(",") == [
        "time", "p0_vx", "p0_vy", "p0_pressure", "p1_vx", "p1_vy", "p1_pressure",
    ]
    assert len(rows) == 1 + channel_problem.n_times
    last = np.array(rows[-1].split(","), dtype=float)
    assert np.isclose(last[0], 5e-3)


def test_export_modes(tmp_path, channel_problem):
    sol = run_latin(channel_problem, max_iterations=3, path="pgd")
    assert sol.pgd_v.n_modes >= 1
    out = tmp_path / "modes"
    export_modes(str(out), channel_problem.mesh, sol.pgd_v, "velocity")
    files = sorted(f.name for f in out.iterdir())
    assert f"velocity_mode_000.txt" in files
    assert "velocity_temporal.csv" in files
    rows = (out / "velocity_temporal.csv").read_text().strip().splitlines()
    assert len(rows) == 1 + channel_problem.n_times
    assert len(rows[0].split(",")) == 1 + sol.pgd_v.n_modes


def _write_series(tmp_path, mesh, name, scale):
    d = tmp_path / name
    d.mkdir()
    rng = np.random.default_rng(7)
    for k in range(3):
        v = rng.standard_normal(2 * mesh.n_q2)
        p = rng.standard_normal(mesh.n_q1)
        r = rng.standard_normal(mesh.n_q1)
        write_vtk(str(d / f"case_{k:04d}.vtk"), mesh, scale * v, scale * p, scale * r)
    return d


def test_compare_identical_series(tmp_path, mesh):
    a = _write_series(tmp_path, mesh, "a", 1.0)
    b = _write_series(tmp_path, mesh, "b", 1.0)
    diffs = solution_l2_difference(str(a), str(b))
    assert set(diffs) == {"velocity", "pressure", "density"}
    assert all(v == 0.0 for v in diffs.values())


def test_compare_scaled_series(tmp_path, mesh):
    a = _write_series(tmp_path, mesh, "a", 1.0)
    b = _write_series(tmp_path, mesh, "b", 1.1)
    diffs = solution_l2_difference(str(a), str(b))
    for v in diffs.values():
        assert np.isclose(v, 0.1 / 1.1, rtol=1e-10)


def test_compare_mismatched_series(tmp_path, mesh):
    a = _write_series(tmp_path, mesh, "a", 1.0)
    empty = tmp_path / "empty"
    empty.mkdir()
    with pytest.raises(Exception):
        solution_l2_difference(str(a), str(empty))
