"""The six benchmark drivers and their delimited reports.

Each driver returns a :class:`BenchmarkReport` (rows mirroring the
corresponding result table) plus, where meaningful, the computed fields so
the CLI can export VTK files and figures without recomputation.
"""

from __future__ import annotations

import csv
import io
import os
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import assembly, gradients, patches as patches_mod, solver
from .mesh import (
    DirichletRegion,
    DirichletSpec,
    Mesh,
    generate_bar_mesh_3d,
    generate_lshape_mesh_2d,
    generate_square_with_hole_mesh_2d,
    mark_dirichlet,
)
from .models import (
    ElasticParams,
    NeoHookean,
    PLaplaceParams,
    PLaplacian,
)

BAR_LX, BAR_LY, BAR_LZ = 0.4, 0.01, 0.01
BAR_MATERIAL = ElasticParams(E=2e8, nu=0.3)
HOLE_RADIUS = 1.0 / 3.0
HOLE_LOAD = (-3.5e7, -3.5e7)
TWIST_ANALYTIC_LIMIT = 6.326670


@dataclass
class BenchmarkReport:
    benchmark: str
    columns: list
    rows: list = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def add_row(self, *values):
        if len(values) != len(self.columns):
            raise ValueError("row length does not match the report columns")
        self.rows.append(list(values))

    def to_csv_string(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
        return buf.getvalue()

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_csv_string())

    @classmethod
    def from_csv_string(cls, benchmark: str, text: str) -> "BenchmarkReport":
        reader = csv.reader(io.StringIO(text))
        columns = next(reader)
        report = cls(benchmark=benchmark, columns=columns)
        for row in reader:
            parsed = []
            for tok in row:
                try:
                    parsed.append(int(tok))
                except ValueError:
                    try:
                        parsed.append(float(tok))
                    except ValueError:
                        parsed.append(tok)
            report.rows.append(parsed)
        return report

    def column(self, name):
        idx = self.columns.index(name)
        return [row[idx] for row in self.rows]

    def format_table(self) -> str:
        widths = [
            max(len(str(c)), *(len(_fmt(row[i])) for row in self.rows)) if self.rows else len(str(c))
            for i, c in enumerate(self.columns)
        ]
        lines = ["  ".join(str(c).rjust(w) for c, w in zip(self.columns, widths))]
        for row in self.rows:
            lines.append("  ".join(_fmt(v).rjust(w) for v, w in zip(row, widths)))
        return "\n".join(lines)


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def _base_config(**kwargs):
    cfg = {"threads": int(os.environ.get("OMP_NUM_THREADS", os.cpu_count() or 1))}
    cfg.update(kwargs)
    return cfg


def _best_of(fn, repeats):
    best = np.inf
    result = None
    for _ in range(max(1, repeats)):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


# ---------------------------------------------------------------------------
# problem setups

def bar_dirichlet_spec(lx=BAR_LX, tol=1e-9) -> DirichletSpec:
    return DirichletSpec(
        [
            DirichletRegion(where=lambda x: x[:, 0] < tol),
            DirichletRegion(where=lambda x, lx=lx: x[:, 0] > lx - tol),
        ]
    )


def bar_problem(level: int) -> Mesh:
    mesh = generate_bar_mesh_3d(BAR_LX, BAR_LY, BAR_LZ, level)
    return mark_dirichlet(mesh, bar_dirichlet_spec(), d=3)


def twist_map(alpha: float, lx: float = BAR_LX):
    """The bar torsion deformation: rotation of (y, z) linear in x."""

    def fn(coords):
        x, y, z = coords[:, 0], coords[:, 1], coords[:, 2]
        c = np.cos(alpha * x / lx)
        s = np.sin(alpha * x / lx)
        return np.column_stack([x, c * y + s * z, -s * y + c * z])

    return fn


def lshape_problem(level: int) -> Mesh:
    mesh = generate_lshape_mesh_2d(level)

    def on_boundary(x, h=2.0 ** -(level + 1)):
        tol = 1e-9
        outer = (
            (np.abs(x[:, 0] + 1) < tol)
            | (np.abs(x[:, 0] - 1) < tol)
            | (np.abs(x[:, 1] + 1) < tol)
            | (np.abs(x[:, 1] - 1) < tol)
        )
        reentrant = ((np.abs(x[:, 0]) < tol) & (x[:, 1] < tol)) | (
            (np.abs(x[:, 1]) < tol) & (x[:, 0] > -tol)
        )
        return outer | reentrant

    spec = DirichletSpec([DirichletRegion(where=on_boundary)])
    return mark_dirichlet(mesh, spec, d=1)


def hole_problem(level: int) -> Mesh:
    mesh = generate_square_with_hole_mesh_2d(level, HOLE_RADIUS)
    tol = 1e-9
    spec = DirichletSpec(
        [
            DirichletRegion(where=lambda x: x[:, 1] < tol),
            DirichletRegion(where=lambda x: x[:, 0] < tol),
        ]
    )
    return mark_dirichlet(mesh, spec, d=2)


def _entry_count(mesh: Mesh) -> int:
    return (
        mesh.nodes2coord.size
        + mesh.elems2nodes.size
        + mesh.volumes.size
        + sum(g.size for g in mesh.dphi)
    )


def _patch_entry_count(p) -> int:
    return (
        p.lengths.size
        + p.elems.size
        + p.volumes.size
        + p.elems2nodes.size
        + sum(g.size for g in p.dphi)
        + p.logical.size
        + p.prefix.size
    )


# ---------------------------------------------------------------------------
# benchmarks

def bench1(levels) -> BenchmarkReport:
    """Mesh and patches setup: times and structure sizes."""
    report = BenchmarkReport(
        benchmark="bench1",
        columns=[
            "level",
            "nodes",
            "elements",
            "free_dofs",
            "patch_rows",
            "mesh_time_s",
            "patches_time_s",
            "mesh_entries",
            "patches_entries",
        ],
        config=_base_config(),
    )
    for level in levels:
        t0 = time.perf_counter()
        mesh = bar_problem(level)
        t_mesh = time.perf_counter() - t0
        t0 = time.perf_counter()
        patches = patches_mod.build_patches(mesh)
        t_patches = time.perf_counter() - t0
        report.add_row(
            level,
            mesh.nn,
            mesh.ne,
            int(mesh.dofs_minim.size),
            int(patches.total_rows),
            t_mesh,
            t_patches,
            _entry_count(mesh),
            _patch_entry_count(patches),
        )
    return report


def bench2(levels, repeats=10, alpha=2 * np.pi):
    """Twisted-bar gradient energy on refined meshes."""
    report = BenchmarkReport(
        benchmark="bench2",
        columns=["level", "free_dofs", "energy_time_s", "J_grad"],
        config=_base_config(repeats=repeats, alpha=alpha),
    )
    model = NeoHookean(BAR_MATERIAL, dim=3)
    for level in levels:
        mesh = bar_problem(level)
        v = assembly.interpolate(twist_map(alpha), mesh, d=3)
        t_best, (J, _) = _best_of(
            lambda: assembly.energy(v, mesh, model), repeats
        )
        report.add_row(level, int(mesh.dofs_minim.size), t_best, J)
    return report


def bench3(levels, repeats=10, eps=1e-6, alpha=2 * np.pi):
    """Exact vs numeric gradient of the twisted bar: timing and agreement."""
    report = BenchmarkReport(
        benchmark="bench3",
        columns=[
            "level",
            "free_dofs",
            "exact_time_s",
            "numeric_time_s",
            "rel_agreement",
        ],
        config=_base_config(repeats=repeats, eps=eps, alpha=alpha),
    )
    if repeats <= 0:
        return report
    model = NeoHookean(BAR_MATERIAL, dim=3)
    for level in levels:
        mesh = bar_problem(level)
        patches = patches_mod.build_patches(mesh)
        v = assembly.interpolate(twist_map(alpha), mesh, d=3)
        t_exact, g_exact = _best_of(
            lambda: gradients.exact_gradient(v, mesh, patches, model), repeats
        )
        t_numeric, g_numeric = _best_of(
            lambda: gradients.numeric_gradient(v, mesh, patches, model, eps=eps),
            repeats,
        )
        scale = max(np.abs(g_exact).max(), 1e-300)
        agreement = float(np.abs(g_exact - g_numeric).max() / scale)
        report.add_row(
            level, int(mesh.dofs_minim.size), t_exact, t_numeric, agreement
        )
    return report


def bench4(
    level,
    T=24,
    alpha_max=8 * np.pi,
    grad_mode="exact",
    eps=1e-6,
    opts: solver.SolveOptions | None = None,
    callback=None,
):
    """Continuation over the twisting boundary condition, f = 0.

    Returns (report, mesh, results) so solutions can be exported per step.
    """
    mesh = bar_problem(level)
    patches = patches_mod.build_patches(mesh)
    model = NeoHookean(BAR_MATERIAL, dim=3)
    cfg = gradients.GradientConfig(mode=grad_mode, eps=eps)

    def J(v):
        return assembly.energy(v, mesh, model)[0]

    def g(v):
        return gradients.gradient(v, mesh, patches, model, cfg=cfg)

    v0 = assembly.interpolate(lambda x: x, mesh, d=3)
    schedule = [
        assembly.interpolate(twist_map(alpha_max * t / T), mesh, d=3)[
            mesh.dofs_dirichlet
        ]
        for t in range(1, T + 1)
    ]
    results = solver.continuation_solve(
        J, g, v0, mesh.dofs_minim, mesh.dofs_dirichlet, schedule,
        opts or solver.SolveOptions(), callback=callback,
    )
    report = BenchmarkReport(
        benchmark="bench4",
        columns=["step", "alpha", "time_s", "iters", "J_grad"],
        config=_base_config(
            level=level, T=T, alpha_max=alpha_max, grad_mode=grad_mode, eps=eps
        ),
    )
    for t, res in enumerate(results, start=1):
        res.J_grad_u = res.J_u  # no loading: the energy is all gradient part
        report.add_row(t, alpha_max * t / T, res.time, res.iters, res.J_grad_u)
    return report, mesh, results


def bench5(
    levels,
    eps=1e-6,
    opts: solver.SolveOptions | None = None,
):
    """2D hyperelasticity on the perforated square, both gradient modes.

    Returns (report, artifacts) where artifacts maps level -> (mesh, result,
    densities) from the exact-gradient run.
    """
    report = BenchmarkReport(
        benchmark="bench5",
        columns=[
            "level",
            "free_dofs",
            "exact_time_s",
            "exact_iters",
            "exact_J",
            "numeric_time_s",
            "numeric_iters",
            "numeric_J",
        ],
        config=_base_config(
            eps=eps, E=BAR_MATERIAL.E, nu=BAR_MATERIAL.nu, load=HOLE_LOAD
        ),
    )
    artifacts = {}
    model = NeoHookean(BAR_MATERIAL, dim=2)
    for level in levels:
        mesh = hole_problem(level)
        patches = patches_mod.build_patches(mesh)
        load = assembly.LinearLoad.assemble(mesh, HOLE_LOAD, d=2)
        v0 = assembly.interpolate(lambda x: x, mesh, d=2)

        def J(v):
            return assembly.energy(v, mesh, model, load)[0]

        row = [level, int(mesh.dofs_minim.size)]
        for mode in ("exact", "numeric"):
            cfg = gradients.GradientConfig(mode=mode, eps=eps)

            def g(v):
                return gradients.gradient(v, mesh, patches, model, load, cfg=cfg)

            res = solver.minimize(
                J, g, v0, mesh.dofs_minim, opts or solver.SolveOptions()
            )
            row += [res.time, res.iters, res.J_u]
            if mode == "exact":
                _, densities = assembly.energy(res.u, mesh, model, load)
                artifacts[level] = (mesh, res, densities)
        report.add_row(*row)
    return report, artifacts


def bench6(
    levels,
    p=3.0,
    f=-10.0,
    grad_mode="exact",
    eps=1e-5,
    opts: solver.SolveOptions | None = None,
):
    """p-Laplacian minimization on the L-shape with constant loading.

    Returns (report, artifacts) with artifacts mapping level -> (mesh, result).
    """
    report = BenchmarkReport(
        benchmark="bench6",
        columns=["level", "free_dofs", "time_s", "iters", "J"],
        config=_base_config(p=p, f=f, grad_mode=grad_mode, eps=eps),
    )
    artifacts = {}
    model = PLaplacian(PLaplaceParams(p=p), dim=2)
    cfg = gradients.GradientConfig(mode=grad_mode, eps=eps)
    for level in levels:
        mesh = lshape_problem(level)
        patches = patches_mod.build_patches(mesh)
        load = assembly.LinearLoad.assemble(mesh, f, d=1)
        v0 = np.zeros(mesh.nn)

        def J(v):
            return assembly.energy(v, mesh, model, load)[0]

        def g(v):
            return gradients.gradient(v, mesh, patches, model, load, cfg=cfg)

        res = solver.minimize(
            J, g, v0, mesh.dofs_minim, opts or solver.SolveOptions()
        )
        report.add_row(level, int(mesh.dofs_minim.size), res.time, res.iters, res.J_u)
        artifacts[level] = (mesh, res)
    return report, artifacts


# ---------------------------------------------------------------------------
# oracles shared with the test suite

def assemble_stiffness_matrix(mesh: Mesh) -> sp.csr_matrix:
    """P1 stiffness matrix (the p = 2 Laplacian), assembled elementwise."""
    nv = mesh.dim + 1
    local = np.zeros((mesh.ne, nv, nv))
    for m in range(mesh.dim):
        local += mesh.dphi[m][:, :, None] * mesh.dphi[m][:, None, :]
    local *= mesh.volumes[:, None, None]
    rows = np.repeat(mesh.elems2nodes, nv, axis=1).ravel()
    cols = np.tile(mesh.elems2nodes, (1, nv)).ravel()
    return sp.coo_matrix(
        (local.ravel(), (rows, cols)), shape=(mesh.nn, mesh.nn)
    ).tocsr()


def poisson_solve_energy(mesh: Mesh, f=-10.0):
    """Direct sparse solve of the p = 2 problem and its Dirichlet energy.

    Returns (u_full, J) with J = 1/2 u'Ku - b'u; zero boundary values.
    """
    K = assemble_stiffness_matrix(mesh)
    load = assembly.LinearLoad.assemble(mesh, f, d=1)
    free = mesh.dofs_minim
    Kff = K[free][:, free].tocsc()
    bf = load.b[free]
    uf = spla.spsolve(Kff, bf)
    u = np.zeros(mesh.nn)
    u[free] = uf
    J = 0.5 * float(uf @ (Kff @ uf)) - float(bf @ uf)
    return u, J
