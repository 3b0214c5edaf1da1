"""Flat, prefix-indexed concatenation of all nodal patches.

All per-patch data (element indices, volumes, connectivity, basis gradients)
are stacked into long arrays whose row blocks follow the free-node order;
prefix indices delimit the blocks and drive the segmented sums used by both
gradient engines.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import Mesh, MeshError


class PatchStructureError(MeshError):
    """A free node without adjacent elements was found."""


@dataclass(frozen=True)
class Patches:
    lengths: np.ndarray      # (|M|,) patch sizes
    elems: np.ndarray        # (||T||,) element indices
    volumes: np.ndarray      # (||T||,)
    elems2nodes: np.ndarray  # (||T||, dim+1)
    dphi: list               # dim arrays (||T||, dim+1)
    logical: np.ndarray      # (||T||, dim+1) one-hot owner mask
    prefix: np.ndarray       # (|M|,) cumulative patch sizes p_i

    @property
    def total_rows(self) -> int:
        return self.elems.shape[0]


def build_patches(mesh: Mesh) -> Patches:
    """Collect the patch data of all free nodes into flat arrays.

    Rows of patch i are contiguous and ordered by ascending element index.
    """
    ne, nv = mesh.elems2nodes.shape
    node_of = mesh.elems2nodes.ravel()
    elem_of = np.repeat(np.arange(ne, dtype=np.int64), nv)

    free_pos = np.full(mesh.nn, -1, dtype=np.int64)
    free_pos[mesh.nodes_minim] = np.arange(mesh.nodes_minim.size)
    sel = free_pos[node_of] >= 0
    keys = free_pos[node_of[sel]]
    elems = elem_of[sel]

    order = np.lexsort((elems, keys))
    keys = keys[order]
    elems = elems[order]

    lengths = np.bincount(keys, minlength=mesh.nodes_minim.size)
    if (lengths == 0).any():
        isolated = mesh.nodes_minim[np.flatnonzero(lengths == 0)[0]]
        raise PatchStructureError(f"free node {isolated} has an empty patch")

    owners = mesh.nodes_minim[keys]
    elems2nodes = mesh.elems2nodes[elems]
    return Patches(
        lengths=lengths.astype(np.int64),
        elems=elems,
        volumes=mesh.volumes[elems],
        elems2nodes=elems2nodes,
        dphi=[g[elems] for g in mesh.dphi],
        logical=elems2nodes == owners[:, None],
        prefix=np.cumsum(lengths).astype(np.int64),
    )


def patch_prefix_indices(patches: Patches, d: int) -> np.ndarray:
    """Prefix indices extended d-fold: block b is shifted by ``b * ||T||``."""
    total = patches.total_rows
    return np.concatenate([patches.prefix + b * total for b in range(d)])


def segment_sums(values: np.ndarray, indx: np.ndarray) -> np.ndarray:
    """Per-patch sums of a flat per-row vector via cumulative sums at indx."""
    csep = np.cumsum(values)
    return np.diff(csep[indx - 1], prepend=0.0)
