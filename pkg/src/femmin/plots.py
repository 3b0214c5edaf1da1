"""Matplotlib figure rendering for the benchmark reports.

Figures are written to files next to the CSV output; nothing here opens a
window (the Agg backend is forced on import).
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import matplotlib.tri as mtri
import numpy as np

from .mesh import Mesh


def _triangulation(mesh: Mesh, coords=None):
    pts = mesh.nodes2coord if coords is None else coords
    return mtri.Triangulation(pts[:, 0], pts[:, 1], mesh.elems2nodes)


def save_mesh_figure(mesh: Mesh, path, title=None):
    fig, ax = plt.subplots(figsize=(5, 5))
    if mesh.dim == 2:
        ax.triplot(_triangulation(mesh), lw=0.4, color="tab:blue")
        ax.set_aspect("equal")
    else:
        ax = fig.add_subplot(projection="3d")
        pts = mesh.nodes2coord
        ax.scatter(pts[:, 0], pts[:, 1], pts[:, 2], s=1)
    ax.set_title(title or f"mesh level {mesh.level}: {mesh.ne} elements")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_deformation_figure(mesh: Mesh, v, densities, path, title=None):
    """Deformed configuration colored by the per-element densities."""
    V = v.reshape(mesh.nn, -1)
    fig = plt.figure(figsize=(6, 5))
    if mesh.dim == 2:
        ax = fig.add_subplot()
        tri = _triangulation(mesh, coords=V)
        tpc = ax.tripcolor(tri, facecolors=densities, lw=0.1)
        fig.colorbar(tpc, ax=ax, label="density")
        ax.set_aspect("equal")
    else:
        ax = fig.add_subplot(projection="3d")
        ax.scatter(V[:, 0], V[:, 1], V[:, 2], s=1, c=V[:, 0], cmap="viridis")
        ax.set_box_aspect((np.ptp(V[:, 0]), np.ptp(V[:, 1]), np.ptp(V[:, 2])))
    ax.set_title(title or "deformed configuration")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_scalar_solution_figure(mesh: Mesh, u, path, title=None):
    """Filled contour of a scalar nodal field on a 2D mesh."""
    fig, ax = plt.subplots(figsize=(6, 5))
    tri = _triangulation(mesh)
    tpc = ax.tripcolor(tri, u.ravel(), shading="gouraud")
    fig.colorbar(tpc, ax=ax, label="u")
    ax.set_aspect("equal")
    ax.set_title(title or "scalar solution")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_report_figure(report, x_col, y_cols, path, logx=False, logy=False):
    """Line plot of selected report columns against one x column."""
    cols = {name: idx for idx, name in enumerate(report.columns)}
    xs = [row[cols[x_col]] for row in report.rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    for y in y_cols:
        ys = [row[cols[y]] for row in report.rows]
        ax.plot(xs, ys, marker="o", label=y)
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(x_col)
    ax.legend()
    ax.set_title(report.benchmark)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
