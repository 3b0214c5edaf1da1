"""Structured simplex meshes with precomputed P1 element data.

A mesh stores geometry, connectivity, element measures and the (constant)
gradients of the P1 basis functions on every element.  Node and dof indices
are 0-based throughout; dofs are interleaved node-major, i.e. dof of node i,
component j is ``d*i + j``.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

logger = logging.getLogger(__name__)

_EMPTY = np.empty(0, dtype=np.int64)


class MeshError(ValueError):
    pass


class DegenerateElementError(MeshError):
    """A simplex with zero or negative measure was encountered."""


@dataclass(frozen=True)
class Mesh:
    dim: int
    level: int
    nodes2coord: np.ndarray          # (nn, dim) coordinates
    elems2nodes: np.ndarray          # (ne, dim+1) node indices, 0-based
    volumes: np.ndarray              # (ne,) element measures
    dphi: list                       # dim arrays (ne, dim+1): dphi[m][k, l]
    d: int = 1                       # components used for the dof partition
    nodes_dirichlet: np.ndarray = field(default_factory=lambda: _EMPTY)
    nodes_minim: np.ndarray = field(default_factory=lambda: _EMPTY)
    dofs_dirichlet: np.ndarray = field(default_factory=lambda: _EMPTY)
    dofs_minim: np.ndarray = field(default_factory=lambda: _EMPTY)
    # positions of the free dofs inside the dof block of the free nodes
    dofs_minim_local: np.ndarray = field(default_factory=lambda: _EMPTY)

    @property
    def nn(self) -> int:
        return self.nodes2coord.shape[0]

    @property
    def ne(self) -> int:
        return self.elems2nodes.shape[0]


@dataclass(frozen=True)
class DirichletRegion:
    """One boundary region: a coordinate predicate plus fixed components.

    ``where`` maps an (n, dim) coordinate array to a boolean node mask.
    ``components`` lists the fixed components (0-based); None fixes all.
    ``value`` maps (coords, t) to prescribed values for the fixed
    components; None means homogeneous (zero) data.
    """

    where: Callable[[np.ndarray], np.ndarray]
    components: tuple | None = None
    value: Callable | None = None


@dataclass(frozen=True)
class DirichletSpec:
    regions: tuple

    def __init__(self, regions: Sequence[DirichletRegion]):
        object.__setattr__(self, "regions", tuple(regions))


def compute_p1_gradients(nodes2coord: np.ndarray, elems2nodes: np.ndarray):
    """Element measures and P1 basis gradients for all simplices at once.

    Returns ``(volumes, dphi)`` where ``dphi[m][k, l]`` is the derivative of
    the l-th local basis function on element k with respect to x_m.
    Raises :class:`DegenerateElementError` for nonpositive signed measures.
    """
    dim = nodes2coord.shape[1]
    coords = nodes2coord[elems2nodes]                # (ne, dim+1, dim)
    edges = coords[:, 1:, :] - coords[:, :1, :]      # rows are x_l - x_0
    dets = np.linalg.det(edges)
    factorial = {1: 1.0, 2: 2.0, 3: 6.0}[dim]
    volumes = dets / factorial
    bad = np.flatnonzero(volumes <= 0.0)
    if bad.size:
        raise DegenerateElementError(
            f"element {bad[0]} has nonpositive measure {volumes[bad[0]]:.3e}"
        )
    inv = np.linalg.inv(edges)                       # column l-1 is grad(phi_l)
    dphi = []
    for m in range(dim):
        g = np.empty((elems2nodes.shape[0], dim + 1))
        g[:, 1:] = inv[:, m, :]
        g[:, 0] = -inv[:, m, :].sum(axis=1)
        dphi.append(g)
    return volumes, dphi


def _make_mesh(dim, level, nodes2coord, elems2nodes) -> Mesh:
    volumes, dphi = compute_p1_gradients(nodes2coord, elems2nodes)
    nn = nodes2coord.shape[0]
    return Mesh(
        dim=dim,
        level=level,
        nodes2coord=nodes2coord,
        elems2nodes=elems2nodes,
        volumes=volumes,
        dphi=dphi,
        nodes_dirichlet=_EMPTY,
        nodes_minim=np.arange(nn, dtype=np.int64),
        dofs_dirichlet=_EMPTY,
        dofs_minim=np.arange(nn, dtype=np.int64),
        dofs_minim_local=np.arange(nn, dtype=np.int64),
    )


def generate_bar_mesh_3d(lx: float, ly: float, lz: float, level: int) -> Mesh:
    """Tetrahedral mesh of the bar (0,lx) x (-ly/2,ly/2) x (-lz/2,lz/2).

    The structured grid has ``80*2**(level-1) x 2*2**(level-1) x 2*2**(level-1)``
    cubes, each split into six tetrahedra sharing the main diagonal (Kuhn
    subdivision).  Node numbering is lexicographic with x fastest.
    """
    if lx <= 0 or ly <= 0 or lz <= 0:
        raise ValueError("bar dimensions must be positive")
    if level < 1:
        raise ValueError("level must be >= 1")
    nx = 80 * 2 ** (level - 1)
    ny = nz = 2 * 2 ** (level - 1)

    xs = np.linspace(0.0, lx, nx + 1)
    ys = np.linspace(-ly / 2, ly / 2, ny + 1)
    zs = np.linspace(-lz / 2, lz / 2, nz + 1)
    Z, Y, X = np.meshgrid(zs, ys, xs, indexing="ij")
    nodes2coord = np.column_stack([X.ravel(), Y.ravel(), Z.ravel()])

    def nid(ix, iy, iz):
        return ix + (nx + 1) * (iy + (ny + 1) * iz)

    IZ, IY, IX = np.meshgrid(
        np.arange(nz), np.arange(ny), np.arange(nx), indexing="ij"
    )
    base = (IX.ravel(), IY.ravel(), IZ.ravel())
    ncubes = base[0].size

    tets = np.empty((ncubes, 6, 4), dtype=np.int64)
    for t, perm in enumerate(itertools.permutations(range(3))):
        corner = np.array([0, 0, 0])
        path = [corner.copy()]
        for axis in perm:
            corner = corner.copy()
            corner[axis] += 1
            path.append(corner)
        local = [
            nid(base[0] + c[0], base[1] + c[1], base[2] + c[2]) for c in path
        ]
        tets[:, t, :] = np.column_stack(local)
    tets = tets.reshape(-1, 4)

    # orient all tetrahedra positively (odd axis permutations flip the sign)
    coords = nodes2coord[tets]
    dets = np.linalg.det(coords[:, 1:, :] - coords[:, :1, :])
    flip = dets < 0
    tets[flip, 2], tets[flip, 3] = tets[flip, 3], tets[flip, 2].copy()

    return _make_mesh(3, level, nodes2coord, tets)


def _grid_triangles(n_x, n_y):
    """Triangle pairs (lower-left-to-upper-right diagonal) of an n_x x n_y grid.

    Returns (ne, 3) connectivity into the lexicographic node grid
    (x fastest), both triangles counterclockwise.
    """
    IY, IX = np.meshgrid(np.arange(n_y), np.arange(n_x), indexing="ij")
    ix, iy = IX.ravel(), IY.ravel()
    ll = ix + (n_x + 1) * iy
    lr = ll + 1
    ul = ll + (n_x + 1)
    ur = ul + 1
    tri = np.empty((ix.size, 2, 3), dtype=np.int64)
    tri[:, 0, :] = np.column_stack([ll, lr, ur])
    tri[:, 1, :] = np.column_stack([ll, ur, ul])
    return tri.reshape(-1, 3), ix, iy


def _compress_nodes(nodes2coord, elems2nodes):
    used, inverse = np.unique(elems2nodes, return_inverse=True)
    return nodes2coord[used], inverse.reshape(elems2nodes.shape)


def generate_lshape_mesh_2d(level: int) -> Mesh:
    """Triangulation of (-1,1)^2 minus the closed quadrant [0,1] x [-1,0].

    Mesh size is ``2**-(level+1)``; level 0 gives the 24-element, 21-node
    triangulation.
    """
    if level < 0:
        raise ValueError("level must be >= 0")
    n = 2 ** (level + 2)  # grid cells per side over (-1,1)^2
    xs = np.linspace(-1.0, 1.0, n + 1)
    Y, X = np.meshgrid(xs, xs, indexing="ij")
    nodes2coord = np.column_stack([X.ravel(), Y.ravel()])

    tris, ix, iy = _grid_triangles(n, n)
    h = 2.0 / n
    cx = -1.0 + (ix + 0.5) * h
    cy = -1.0 + (iy + 0.5) * h
    keep = ~((cx > 0.0) & (cy < 0.0))
    tris = tris.reshape(-1, 2, 3)[keep].reshape(-1, 3)

    nodes2coord, tris = _compress_nodes(nodes2coord, tris)
    return _make_mesh(2, level, nodes2coord, tris)


def _point_triangle_distance(point, coords):
    """Distance from one point to many triangles, vectorized.

    ``coords`` has shape (ne, 3, 2); triangles must be positively oriented.
    """
    p = np.asarray(point, dtype=float)
    dmin = np.full(coords.shape[0], np.inf)
    inside = np.ones(coords.shape[0], dtype=bool)
    for a_idx, b_idx in ((0, 1), (1, 2), (2, 0)):
        a = coords[:, a_idx, :]
        b = coords[:, b_idx, :]
        ab = b - a
        ap = p[None, :] - a
        cross = ab[:, 0] * ap[:, 1] - ab[:, 1] * ap[:, 0]
        inside &= cross >= 0.0
        t = np.clip((ap * ab).sum(1) / (ab * ab).sum(1), 0.0, 1.0)
        closest = a + t[:, None] * ab
        dmin = np.minimum(dmin, np.hypot(*(p[None, :] - closest).T))
    dmin[inside] = 0.0
    return dmin


def generate_square_with_hole_mesh_2d(level: int, radius: float) -> Mesh:
    """Triangulation of (0,2)^2 minus the open disk around (1,1).

    Starts from a structured grid of ``12*2**(level-1)`` cells per side,
    removes triangles overlapping the disk and projects the cavity boundary
    nodes radially onto the circle.
    """
    if not 0.0 < radius < 1.0:
        raise ValueError("radius must lie in (0, 1)")
    if level < 1:
        raise ValueError("level must be >= 1")
    n = 12 * 2 ** (level - 1)
    xs = np.linspace(0.0, 2.0, n + 1)
    Y, X = np.meshgrid(xs, xs, indexing="ij")
    nodes2coord = np.column_stack([X.ravel(), Y.ravel()])
    tris, _, _ = _grid_triangles(n, n)

    center = np.array([1.0, 1.0])
    dist = _point_triangle_distance(center, nodes2coord[tris])
    removed = tris[dist < radius]
    tris = tris[dist >= radius]

    # cavity boundary: nodes shared by removed and kept triangles
    cavity = np.intersect1d(np.unique(removed), np.unique(tris))
    vec = nodes2coord[cavity] - center
    nodes2coord = nodes2coord.copy()
    nodes2coord[cavity] = center + radius * vec / np.hypot(
        vec[:, 0], vec[:, 1]
    )[:, None]

    # projection can flatten slivers next to the cavity; drop them
    for _ in range(4):
        c = nodes2coord[tris]
        areas = 0.5 * np.linalg.det(c[:, 1:, :] - c[:, :1, :])
        bad = areas <= 1e-14
        if not bad.any():
            break
        tris = tris[~bad]

    nodes2coord, tris = _compress_nodes(nodes2coord, tris)
    return _make_mesh(2, level, nodes2coord, tris)


def mark_dirichlet(mesh: Mesh, spec: DirichletSpec, d: int) -> Mesh:
    """Return a copy of the mesh with node/dof partitions filled.

    Nodes with every component fixed go to the Dirichlet set; nodes with at
    least one free component stay in the minimization set and the final
    restriction is done per dof.
    """
    nn = mesh.nn
    fixed = np.zeros((nn, d), dtype=bool)
    for region in spec.regions:
        mask = np.asarray(region.where(mesh.nodes2coord), dtype=bool)
        if not mask.any():
            logger.warning("Dirichlet region matched no nodes")
            continue
        comps = range(d) if region.components is None else region.components
        for j in comps:
            fixed[mask, j] = True

    node_fixed = fixed.all(axis=1)
    nodes_dirichlet = np.flatnonzero(node_fixed).astype(np.int64)
    nodes_minim = np.flatnonzero(~node_fixed).astype(np.int64)
    flat_fixed = fixed.ravel()
    dofs_dirichlet = np.flatnonzero(flat_fixed).astype(np.int64)
    dofs_minim = np.flatnonzero(~flat_fixed).astype(np.int64)
    dofs_minim_local = np.flatnonzero(~fixed[nodes_minim].ravel()).astype(np.int64)
    return replace(
        mesh,
        d=d,
        nodes_dirichlet=nodes_dirichlet,
        nodes_minim=nodes_minim,
        dofs_dirichlet=dofs_dirichlet,
        dofs_minim=dofs_minim,
        dofs_minim_local=dofs_minim_local,
    )


def dirichlet_values(mesh: Mesh, spec: DirichletSpec, d: int, t=None) -> np.ndarray:
    """Prescribed values on all dofs (free entries are zero).

    Later regions override earlier ones where they overlap.
    """
    values = np.zeros((mesh.nn, d))
    for region in spec.regions:
        mask = np.asarray(region.where(mesh.nodes2coord), dtype=bool)
        if not mask.any():
            continue
        comps = list(range(d)) if region.components is None else list(region.components)
        if region.value is not None:
            vals = np.asarray(region.value(mesh.nodes2coord[mask], t), dtype=float)
            values[np.ix_(np.flatnonzero(mask), comps)] = vals
        else:
            values[np.ix_(np.flatnonzero(mask), comps)] = 0.0
    return values.ravel()


def dump_mesh(mesh: Mesh, path) -> None:
    """Plain-text export: header ``dim nn ne``, coordinates, connectivity.

    Connectivity indices are written 1-based.
    """
    with open(path, "w") as fh:
        fh.write(f"{mesh.dim} {mesh.nn} {mesh.ne}\n")
        for row in mesh.nodes2coord:
            fh.write(" ".join(repr(float(c)) for c in row) + "\n")
        for row in mesh.elems2nodes + 1:
            fh.write(" ".join(str(int(i)) for i in row) + "\n")


def load_mesh(path) -> Mesh:
    """Read the plain-text format written by :func:`dump_mesh`."""
    with open(path) as fh:
        dim, nn, ne = (int(tok) for tok in fh.readline().split())
        coords = np.array(
            [[float(tok) for tok in fh.readline().split()] for _ in range(nn)]
        )
        elems = np.array(
            [[int(tok) - 1 for tok in fh.readline().split()] for _ in range(ne)],
            dtype=np.int64,
        )
    return _make_mesh(dim, -1, coords, elems)
