"""The two engines computing the energy gradient on free dofs.

Both localize the work onto the flat patch arrays: the numeric engine
central-differences the per-patch energies, the exact engine applies the
chain rule through dW/dF.  Segmented sums over the prefix indices turn the
per-row contributions into per-dof values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import evaluate_F, gather, unflatten, LinearLoad
from .mesh import Mesh
from .models import InadmissibleStateError
from .patches import Patches, patch_prefix_indices, segment_sums

DEFAULT_EPS = 1e-8


@dataclass(frozen=True)
class GradientConfig:
    mode: str = "numeric"          # "numeric" | "exact"
    eps: float = DEFAULT_EPS

    def __post_init__(self):
        if self.mode not in ("numeric", "exact"):
            raise ValueError(f"unknown gradient mode {self.mode!r}")
        if self.mode == "numeric" and self.eps <= 0:
            raise ValueError("central-difference step must be positive")


def evaluate_GG(patches: Patches, G, F_patches, d: int):
    """Stack d perturbation blocks: block b keeps row j of F except b == j.

    ``G`` holds the perturbed patch-row gradients, ``F_patches`` the
    unperturbed ones; both are nested lists ``[j][m]`` of length-||T||
    arrays.  For d = 1 the stacking degenerates to G itself.
    """
    dim = len(F_patches[0])
    return [
        [
            np.concatenate(
                [G[j][m] if b == j else F_patches[j][m] for b in range(d)]
            )
            for m in range(dim)
        ]
        for j in range(len(F_patches))
    ]


def dF_dv_table(patches: Patches):
    """dF[j,m]/dv_n on every patch row: the owner node's basis gradient."""
    return [dm[patches.logical] for dm in patches.dphi]


def _patch_data(v, mesh: Mesh, patches: Patches, d: int):
    V = unflatten(v, d)
    v_elems = gather(V, mesh.elems2nodes)
    F_elems = evaluate_F(mesh.dphi, v_elems)
    v_patches = gather(V, patches.elems2nodes)
    F_patches = [[fm[patches.elems] for fm in fj] for fj in F_elems]
    return v_patches, F_patches


def _blocks_to_dofs(blocks, mesh: Mesh, d: int):
    """Reorder d stacked per-free-node blocks into interleaved dof order."""
    nfree = mesh.nodes_minim.size
    out = np.empty(d * nfree)
    for j in range(d):
        out[j::d] = blocks[j * nfree : (j + 1) * nfree]
    return out[mesh.dofs_minim_local]


def _offending_dof(bad_row: int, mesh: Mesh, patches: Patches, d: int) -> int:
    total = patches.total_rows
    j = bad_row // total
    i = int(np.searchsorted(patches.prefix, bad_row % total, side="right"))
    return int(d * mesh.nodes_minim[i] + j)


def numeric_gradient(
    v: np.ndarray,
    mesh: Mesh,
    patches: Patches,
    model,
    load: LinearLoad | None = None,
    eps: float = DEFAULT_EPS,
) -> np.ndarray:
    """Patch-localized central differences of the energy, all dofs at once.

    Both perturbation signs run through one batched pipeline: gather the
    field to patch rows, inject +-eps through the one-hot mask, rebuild the
    perturbed gradients blockwise and segment-sum the weighted densities.
    """
    d = model.d
    v_patches, F_patches = _patch_data(v, mesh, patches, d)
    indx = patch_prefix_indices(patches, d)
    vols = np.tile(patches.volumes, d)

    sums = []
    for signed_eps in (-eps, eps):
        v_eps = [vp + signed_eps * patches.logical for vp in v_patches]
        G = evaluate_F(patches.dphi, v_eps)
        GG = evaluate_GG(patches, G, F_patches, d)
        densities = model.density(GG)
        finite = np.isfinite(densities)
        if not finite.all():
            dof = _offending_dof(int(np.flatnonzero(~finite)[0]), mesh, patches, d)
            raise InadmissibleStateError(
                f"perturbed state inadmissible at dof {dof}"
            )
        sums.append(segment_sums(vols * densities, indx))
    e_minus, e_plus = sums

    g = _blocks_to_dofs((e_plus - e_minus) / (2.0 * eps), mesh, d)
    if load is not None:
        g = g - load.b[mesh.dofs_minim]
    return g


def exact_gradient(
    v: np.ndarray,
    mesh: Mesh,
    patches: Patches,
    model,
    load: LinearLoad | None = None,
) -> np.ndarray:
    """Chain-rule gradient through dW/dF, assembled by the same segment sums."""
    d = model.d
    _, F_patches = _patch_data(v, mesh, patches, d)
    dW = model.ddensity(F_patches)
    dF = dF_dv_table(patches)
    dim = mesh.dim

    blocks = np.concatenate(
        [
            patches.volumes
            * sum(dW[j][m] * dF[m] for m in range(dim))
            for j in range(d)
        ]
    )
    indx = patch_prefix_indices(patches, d)
    g = _blocks_to_dofs(segment_sums(blocks, indx), mesh, d)
    if load is not None:
        g = g - load.b[mesh.dofs_minim]
    return g


def gradient(v, mesh, patches, model, load=None, cfg: GradientConfig | None = None):
    """Dispatch on the configured engine."""
    cfg = cfg or GradientConfig()
    if cfg.mode == "exact":
        return exact_gradient(v, mesh, patches, model, load)
    return numeric_gradient(v, mesh, patches, model, load, eps=cfg.eps)
