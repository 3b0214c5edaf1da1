"""Flattened dof handling, gradient assembly and total energy evaluation.

A nodal field is either a coefficient matrix V of shape (nn, d) or its
interleaved flat vector v with ``v[d*i + j] = V[i, j]``; the two views are
plain reshapes of each other.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .mesh import Mesh


def flatten(V: np.ndarray) -> np.ndarray:
    """Interleaved flat vector of a (nn, d) coefficient matrix."""
    return np.ascontiguousarray(V).ravel()


def unflatten(v: np.ndarray, d: int) -> np.ndarray:
    return v.reshape(-1, d)


def gather(V: np.ndarray, connectivity: np.ndarray):
    """Per-component nodal values on element (or patch) rows.

    Returns a list of d arrays shaped like ``connectivity``.
    """
    return [V[connectivity, j] for j in range(V.shape[1])]


def evaluate_F(dphi, v_vals):
    """Batched field gradient F[j][m] = sum_l v[j][:, l] * dphi[m][:, l].

    Works identically on element arrays and on patch row arrays; ``dphi``
    and every ``v_vals[j]`` must share the shape (rows, dim+1).
    """
    rows = dphi[0].shape
    for vj in v_vals:
        if vj.shape != rows:
            raise ValueError(
                f"shape mismatch: values {vj.shape} vs gradients {rows}"
            )
    return [
        [np.einsum("rl,rl->r", vj, dm) for dm in dphi] for vj in v_vals
    ]


def assemble_mass_matrix(mesh: Mesh) -> sp.csr_matrix:
    """P1 mass matrix from the exact local simplex formula."""
    nv = mesh.dim + 1
    local = (np.ones((nv, nv)) + np.eye(nv)) / ((nv) * (nv + 1))
    vals = mesh.volumes[:, None, None] * local[None, :, :]
    rows = np.repeat(mesh.elems2nodes, nv, axis=1).ravel()
    cols = np.tile(mesh.elems2nodes, (1, nv)).ravel()
    M = sp.coo_matrix(
        (vals.ravel(), (rows, cols)), shape=(mesh.nn, mesh.nn)
    )
    return M.tocsr()


@dataclass(frozen=True)
class LinearLoad:
    """Consistent nodal load: b[j] = M f[j], flattened to dof order."""

    b: np.ndarray  # (d*nn,) interleaved

    @classmethod
    def assemble(cls, mesh: Mesh, f, d: int, M: sp.csr_matrix | None = None):
        """Build from a constant d-vector or a nodal (nn, d) array of f."""
        if M is None:
            M = assemble_mass_matrix(mesh)
        f = np.asarray(f, dtype=float)
        if f.ndim <= 1:
            F = np.broadcast_to(np.atleast_1d(f), (mesh.nn, d))
        else:
            F = f
        B = np.column_stack([M @ F[:, j] for j in range(d)])
        return cls(b=flatten(B))

    @classmethod
    def zero(cls, mesh: Mesh, d: int):
        return cls(b=np.zeros(d * mesh.nn))


def linear_term(load: LinearLoad, v: np.ndarray) -> float:
    """Value of the loading integral for the P1 interpolants."""
    return float(load.b @ v)


def energy(v: np.ndarray, mesh: Mesh, model, load: LinearLoad | None = None):
    """Total energy J(v) plus the per-element densities.

    Inadmissible states (infinite density) propagate as J = +inf.
    """
    V = unflatten(v, model.d)
    v_elems = gather(V, mesh.elems2nodes)
    F = evaluate_F(mesh.dphi, v_elems)
    densities = model.density(F)
    J = float(mesh.volumes @ densities)
    if load is not None:
        J -= linear_term(load, v)
    return J, densities


def interpolate(fn, mesh: Mesh, d: int) -> np.ndarray:
    """Flat nodal interpolant of a coordinate function.

    ``fn`` maps an (nn, dim) coordinate array to (nn, d) values (a 1-d
    return is accepted for scalar fields).
    """
    V = np.asarray(fn(mesh.nodes2coord), dtype=float)
    if V.ndim == 1:
        V = V[:, None]
    if V.shape != (mesh.nn, d):
        raise ValueError(f"interpolant has shape {V.shape}, expected {(mesh.nn, d)}")
    return flatten(V)
