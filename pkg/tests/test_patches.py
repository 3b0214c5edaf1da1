import numpy as np
import pytest

from femmin.mesh import _make_mesh, mark_dirichlet, DirichletSpec, DirichletRegion
from femmin.patches import (
    Patches,
    PatchStructureError,
    build_patches,
    patch_prefix_indices,
    segment_sums,
)


def test_bar_level1_patch_sizes(bar1, bar1_patches):
    assert bar1_patches.lengths.size == 711
    assert bar1_patches.total_rows == 7584


def test_lengths_sum_and_prefix(bar1_patches):
    assert bar1_patches.lengths.sum() == bar1_patches.total_rows
    np.testing.assert_array_equal(
        bar1_patches.prefix, np.cumsum(bar1_patches.lengths)
    )


def test_logical_one_hot_and_owner(lshape1, lshape1_patches):
    p = lshape1_patches
    assert (p.logical.sum(axis=1) == 1).all()
    owners = np.repeat(lshape1.nodes_minim, p.lengths)
    assert (p.elems2nodes[p.logical] == owners).all()


def test_rows_match_brute_force_adjacency(lshape1, lshape1_patches):
    p = lshape1_patches
    start = 0
    for i, node in enumerate(lshape1.nodes_minim):
        rows = p.elems[start : start + p.lengths[i]]
        expected = np.flatnonzero((lshape1.elems2nodes == node).any(axis=1))
        np.testing.assert_array_equal(np.sort(rows), expected)
        start += p.lengths[i]


def test_patch_data_copies_owning_elements(lshape1, lshape1_patches):
    p = lshape1_patches
    np.testing.assert_array_equal(p.volumes, lshape1.volumes[p.elems])
    for m in range(lshape1.dim):
        np.testing.assert_array_equal(p.dphi[m], lshape1.dphi[m][p.elems])
    np.testing.assert_array_equal(p.elems2nodes, lshape1.elems2nodes[p.elems])


def test_single_triangle_patch():
    coords = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    mesh = _make_mesh(2, 0, coords, np.array([[0, 1, 2]]))
    spec = DirichletSpec(
        [DirichletRegion(where=lambda x: x[:, 0] + x[:, 1] > 1e-9)]
    )
    mesh = mark_dirichlet(mesh, spec, d=1)
    p = build_patches(mesh)
    assert p.lengths.tolist() == [1]
    assert p.total_rows == 1
    assert p.logical.sum() == 1


def test_isolated_free_node_is_an_error():
    coords = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [5.0, 5.0]])
    mesh = _make_mesh(2, 0, coords, np.array([[0, 1, 2]]))
    mesh = mark_dirichlet(mesh, DirichletSpec([]), d=1)
    with pytest.raises(PatchStructureError):
        build_patches(mesh)


def test_prefix_indices_examples():
    p = Patches(
        lengths=np.array([3, 5]),
        elems=np.zeros(8, dtype=np.int64),
        volumes=np.zeros(8),
        elems2nodes=np.zeros((8, 3), dtype=np.int64),
        dphi=[np.zeros((8, 3))] * 2,
        logical=np.zeros((8, 3), dtype=bool),
        prefix=np.array([3, 8]),
    )
    assert patch_prefix_indices(p, 1).tolist() == [3, 8]
    assert patch_prefix_indices(p, 3).tolist() == [3, 8, 11, 16, 19, 24]


def test_prefix_indices_bar(bar1_patches):
    indx = patch_prefix_indices(bar1_patches, 3)
    assert indx.size == 3 * 711
    assert indx[-1] == 3 * 7584
    assert (np.diff(indx) > 0).all()


def test_segment_sums_match_brute_force(rng, lshape1_patches):
    for d in (1, 2):
        indx = patch_prefix_indices(lshape1_patches, d)
        w = rng.normal(size=d * lshape1_patches.total_rows)
        got = segment_sums(w, indx)
        expected = [w[: indx[0]].sum()] + [
            w[a:b].sum() for a, b in zip(indx[:-1], indx[1:])
        ]
        np.testing.assert_allclose(got, expected, atol=1e-12)


def test_rebuild_is_deterministic(lshape1):
    a = build_patches(lshape1)
    b = build_patches(lshape1)
    np.testing.assert_array_equal(a.elems, b.elems)
    np.testing.assert_array_equal(a.lengths, b.lengths)
    np.testing.assert_array_equal(a.logical, b.logical)
