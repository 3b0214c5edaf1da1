"""Command-line harness for the six benchmarks.

Each subcommand prints its table, and with ``--out-dir`` also writes the
CSV report plus matplotlib figures; ``--vtk`` adds legacy VTK exports of
meshes and solutions and ``--dump-mesh`` the plain-text mesh files.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import bench, plots, vtk_io
from .mesh import dump_mesh
from .solver import SolveOptions


def _parse_levels(args, default):
    if args.levels:
        return [int(tok) for tok in args.levels.split(",")]
    if getattr(args, "level", None) is not None:
        return [args.level]
    return default


def _solve_options(args) -> SolveOptions:
    return SolveOptions(
        solver={"tr": "tr", "lbfgs": "lbfgs"}[args.solver],
        verbose=args.verbose,
    )


def _emit(report, args, figures=()):
    print(report.format_table())
    out_dir = args.out_dir or ("." if args.csv else None)
    if out_dir is None:
        return
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, f"{report.benchmark}.csv")
    report.to_csv(path)
    print(f"wrote {path}", file=sys.stderr)
    for fig_fn in figures:
        fig_fn(out_dir)


def _add_common(sub, minimizing=False):
    sub.add_argument("--level", type=int, default=None)
    sub.add_argument("--levels", type=str, default=None, help="comma separated")
    sub.add_argument("--out-dir", type=str, default=None)
    sub.add_argument("--csv", action="store_true", help="write the CSV report")
    sub.add_argument("--vtk", action="store_true", help="write VTK exports")
    sub.add_argument("--dump-mesh", action="store_true")
    sub.add_argument("--verbose", action="store_true")
    sub.add_argument("--eps", type=float, default=None, help="central-difference step")
    if minimizing:
        sub.add_argument("--solver", choices=("tr", "lbfgs"), default="tr")
        sub.add_argument("--grad", choices=("exact", "numeric"), default="exact")


def _dump_meshes(args, meshes):
    if not (args.dump_mesh and args.out_dir):
        return
    for name, mesh in meshes:
        path = os.path.join(args.out_dir, f"{name}.txt")
        dump_mesh(mesh, path)
        print(f"wrote {path}", file=sys.stderr)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="femmin",
        description="Vectorized P1 energy evaluation and minimization benchmarks",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    for name, minimizing in (
        ("bench1", False),
        ("bench2", False),
        ("bench3", False),
        ("bench4", True),
        ("bench5", True),
        ("bench6", True),
    ):
        sub = subs.add_parser(name)
        _add_common(sub, minimizing=minimizing)
        if name in ("bench2", "bench3"):
            sub.add_argument("--repeats", type=int, default=10)
        if name == "bench4":
            sub.add_argument("--steps", type=int, default=24)
        if name == "bench6":
            sub.add_argument("--p", type=float, default=3.0)
            sub.add_argument("--f", type=float, default=-10.0)

    args = parser.parse_args(argv)
    command = args.command

    if command == "bench1":
        levels = _parse_levels(args, [1, 2, 3])
        report = bench.bench1(levels)
        figures = [
            lambda d: plots.save_report_figure(
                report, "free_dofs",
                ["mesh_time_s", "patches_time_s"],
                os.path.join(d, "bench1_times.png"), logx=True, logy=True,
            )
        ]
        _emit(report, args, figures)
        _dump_meshes(
            args, [(f"bar_level{l}", bench.bar_problem(l)) for l in levels]
        )

    elif command == "bench2":
        levels = _parse_levels(args, [1, 2, 3])
        report = bench.bench2(levels, repeats=args.repeats)
        figures = [
            lambda d: plots.save_report_figure(
                report, "free_dofs", ["J_grad"],
                os.path.join(d, "bench2_energy.png"), logx=True,
            )
        ]
        _emit(report, args, figures)

    elif command == "bench3":
        levels = _parse_levels(args, [1, 2])
        report = bench.bench3(levels, repeats=args.repeats,
                              eps=args.eps or 1e-6)
        figures = [
            lambda d: plots.save_report_figure(
                report, "free_dofs", ["exact_time_s", "numeric_time_s"],
                os.path.join(d, "bench3_times.png"), logx=True, logy=True,
            )
        ]
        _emit(report, args, figures)

    elif command == "bench4":
        level = args.level if args.level is not None else 1
        report, mesh, results = bench.bench4(
            level,
            T=args.steps,
            grad_mode=args.grad,
            eps=args.eps or 1e-6,
            opts=_solve_options(args),
        )
        figures = [
            lambda d: plots.save_report_figure(
                report, "step", ["J_grad"], os.path.join(d, "bench4_energy.png")
            )
        ]
        _emit(report, args, figures)
        if args.out_dir and args.vtk:
            from .assembly import energy
            from .models import NeoHookean
            model = NeoHookean(bench.BAR_MATERIAL, dim=3)
            for t, res in enumerate(results, start=1):
                _, densities = energy(res.u, mesh, model)
                vtk_io.write_vtk(
                    os.path.join(args.out_dir, f"bench4_step{t:02d}.vtk"),
                    res.u.reshape(mesh.nn, 3),
                    mesh.elems2nodes,
                    cell_data={"density": densities},
                )
        if args.out_dir:
            plots.save_deformation_figure(
                mesh, results[-1].u, None,
                os.path.join(args.out_dir, "bench4_final.png"),
                title=f"twisted bar, step {len(results)}",
            )
        _dump_meshes(args, [(f"bar_level{level}", mesh)])

    elif command == "bench5":
        levels = _parse_levels(args, [1, 2, 3])
        report, artifacts = bench.bench5(
            levels, eps=args.eps or 1e-6, opts=_solve_options(args)
        )
        figures = [
            lambda d: plots.save_report_figure(
                report, "free_dofs", ["exact_J", "numeric_J"],
                os.path.join(d, "bench5_energy.png"), logx=True,
            )
        ]
        _emit(report, args, figures)
        if args.out_dir:
            for level, (mesh, res, densities) in artifacts.items():
                plots.save_deformation_figure(
                    mesh, res.u, densities,
                    os.path.join(args.out_dir, f"bench5_level{level}.png"),
                )
                if args.vtk:
                    vtk_io.write_vtk(
                        os.path.join(args.out_dir, f"bench5_level{level}.vtk"),
                        res.u.reshape(mesh.nn, 2),
                        mesh.elems2nodes,
                        cell_data={"density": densities},
                    )
            _dump_meshes(
                args,
                [(f"hole_level{l}", artifacts[l][0]) for l in artifacts],
            )

    elif command == "bench6":
        levels = _parse_levels(args, [1, 2, 3, 4])
        report, artifacts = bench.bench6(
            levels, p=args.p, f=args.f, grad_mode=args.grad,
            eps=args.eps or 1e-5, opts=_solve_options(args),
        )
        figures = [
            lambda d: plots.save_report_figure(
                report, "free_dofs", ["J"],
                os.path.join(d, "bench6_energy.png"), logx=True,
            )
        ]
        _emit(report, args, figures)
        if args.out_dir:
            for level, (mesh, res) in artifacts.items():
                plots.save_scalar_solution_figure(
                    mesh, res.u,
                    os.path.join(args.out_dir, f"bench6_level{level}.png"),
                )
                if args.vtk:
                    vtk_io.write_vtk(
                        os.path.join(args.out_dir, f"bench6_level{level}.vtk"),
                        mesh.nodes2coord,
                        mesh.elems2nodes,
                        point_data={"u": res.u},
                    )
            _dump_meshes(
                args,
                [(f"lshape_level{l}", artifacts[l][0]) for l in artifacts],
            )

    return 0


if __name__ == "__main__":
    raise SystemExit(main())
