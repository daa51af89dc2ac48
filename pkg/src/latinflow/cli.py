"""Command-line entry points.

Subcommands: ``run`` (iterative space-time solver), ``oracle`` (monolithic
time-stepping solver), ``analytic`` (steady-channel field dump), ``compare``
(space-time L2 differences between two output directories), ``meshgen``
(write the mesh of a case to a file).  Exit status: 0 on success/converged,
2 on non-converged or threshold exceeded, 1 on error.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .config import build_mesh, build_problem, load_config
from .driver import Solution, run_latin
from .errors import LatinflowError
from .mesh import write_mesh
from .oracles import ChannelSpec, monolithic_solve, poiseuille
from .output import (
    export_modes,
    solution_l2_difference,
    write_history_csv,
    write_probes_csv,
    write_vtk,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_CONVERGED = 2


def _write_solution(cfg, mesh, solution, history=None, pgd_fields=None) -> None:
    out = cfg.output_directory
    os.makedirs(out, exist_ok=True)
    n1 = mesh.n_q1
    press = solution.pressure
    for n in range(0, solution.times.size, max(1, cfg.vtk_stride)):
        write_vtk(
            os.path.join(out, f"{cfg.name}_{n:04d}.vtk"),
            mesh,
            solution.v[n],
            press[n],
            solution.rho[n],
            title=f"{cfg.name} t={solution.times[n]:.6e}",
        )
    if history:
        write_history_csv(os.path.join(out, f"{cfg.name}_history.csv"), history)
    if cfg.probes.size:
        write_probes_csv(
            os.path.join(out, f"{cfg.name}_probes.csv"), mesh, solution, cfg.probes
        )
    if pgd_fields is not None:
        for prefix, fld in pgd_fields.items():
            export_modes(os.path.join(out, "modes"), mesh, fld, prefix)


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    mesh = build_mesh(cfg)
    problem = build_problem(cfg, mesh)
    solution = run_latin(
        problem,
        eta_c=cfg.effective_eta_c,
        max_iterations=cfg.max_iterations,
        kappa=cfg.kappa,
        pgd_fixed_point_max=cfg.pgd_fixed_point_max,
        relaxation=cfg.relaxation,
        path=cfg.path,
        verbose=not args.quiet,
    )
    pgd_fields = None
    if cfg.path == "pgd" and solution.pgd_v is not None:
        pgd_fields = {"velocity": solution.pgd_v, "density": solution.pgd_rho}
    _write_solution(cfg, mesh, solution, history=solution.history, pgd_fields=pgd_fields)
    if not args.quiet:
        last = solution.history[-1]
        state = "converged" if solution.converged else "NOT converged"
        print(
            f"{state} after {last.iteration} iterations: "
            f"eta_v={last.eta_v:.3e} eta_rho={last.eta_rho:.3e} "
            f"modes v/rho = {solution.n_modes_v}/{solution.n_modes_rho}"
        )
    return EXIT_OK if solution.converged else EXIT_NOT_CONVERGED


def cmd_oracle(args) -> int:
    cfg = load_config(args.config)
    mesh = build_mesh(cfg)
    problem = build_problem(cfg, mesh)
    mono = monolithic_solve(problem)
    solution = Solution(
        times=mono.times, rho=mono.rho, v=mono.v, material=cfg.material,
        converged=True,
    )
    _write_solution(cfg, mesh, solution)
    if not args.quiet:
        print(f"monolithic solve finished: {mono.times.size - 1} steps")
    return EXIT_OK


def cmd_analytic(args) -> int:
    cfg = load_config(args.config)
    mesh = build_mesh(cfg)
    x = mesh.q2_coords[:, 0]
    if cfg.length is None:
        raise LatinflowError(
            "analytic requires a rectangle case (geometry.length/height)"
        )
    p_vals = {
        name: float(np.atleast_1d(bc.value)[0])
        for name, bc in cfg.bcs.items()
        if bc.kind == "pressure" and bc.value is not None
    }
    p_in = p_vals.get("inflow", 2.0)
    p_out = p_vals.get("outflow", 1.0)
    spec = ChannelSpec(
        length=cfg.length, height=cfg.height, mu=cfg.material.mu,
        p_in=p_in, p_out=p_out,
    )
    vx, _ = poiseuille(spec, x, mesh.q2_coords[:, 1])
    n2 = mesh.n_q2
    v = np.concatenate([vx, np.zeros(n2)])
    x1 = mesh.q1_coords[:, 0]
    press = p_in + (p_out - p_in) * x1 / cfg.length
    rho = press / (cfg.material.r * cfg.material.T0)
    os.makedirs(cfg.output_directory, exist_ok=True)
    path = os.path.join(cfg.output_directory, f"{cfg.name}_analytic.vtk")
    write_vtk(path, mesh, v, press, rho, title=f"{cfg.name} steady analytic")
    if not args.quiet:
        print(f"wrote {path}")
    return EXIT_OK


def cmd_compare(args) -> int:
    diffs = solution_l2_difference(args.dir_a, args.dir_b)
    worst = max(diffs.values())
    for name, val in sorted(diffs.items()):
        print(f"{name}: {val:.6e}")
    return EXIT_OK if worst < args.tol else EXIT_NOT_CONVERGED


def cmd_meshgen(args) -> int:
    cfg = load_config(args.config)
    mesh = build_mesh(cfg)
    with open(args.output, "w", encoding="ascii") as fh:
        write_mesh(mesh, fh)
    if not args.quiet:
        print(
            f"wrote {args.output}: {mesh.n_elements} elements, "
            f"{mesh.n_q2} quadratic / {mesh.n_q1} linear nodes"
        )
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="latinflow",
        description="Space-time iterative solver for 2D compressible laminar flow",
    )
    parser.add_argument("-q", "--quiet", action="store_true", help="suppress progress output")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="iterative space-time (reduced-order) solve")
    p_run.add_argument("config")
    p_run.set_defaults(func=cmd_run)

    p_oracle = sub.add_parser("oracle", help="monolithic time-stepping solve")
    p_oracle.add_argument("config")
    p_oracle.set_defaults(func=cmd_oracle)

    p_ana = sub.add_parser("analytic", help="steady analytic channel field dump")
    p_ana.add_argument("config")
    p_ana.set_defaults(func=cmd_analytic)

    p_cmp = sub.add_parser("compare", help="L2 differences between two output directories")
    p_cmp.add_argument("dir_a")
    p_cmp.add_argument("dir_b")
    p_cmp.add_argument("--tol", type=float, default=0.01,
                       help="threshold for exit status (default 0.01)")
    p_cmp.set_defaults(func=cmd_compare)

    p_msh = sub.add_parser("meshgen", help="write the case mesh to a file")
    p_msh.add_argument("config")
    p_msh.add_argument("output")
    p_msh.set_defaults(func=cmd_meshgen)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except LatinflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
