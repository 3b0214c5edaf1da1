import numpy as np
import pytest

from femmin import bench
from femmin.mesh import (
    DegenerateElementError,
    DirichletRegion,
    DirichletSpec,
    compute_p1_gradients,
    dirichlet_values,
    dump_mesh,
    generate_bar_mesh_3d,
    generate_lshape_mesh_2d,
    generate_square_with_hole_mesh_2d,
    load_mesh,
    mark_dirichlet,
)


def test_bar_counts_level1():
    mesh = generate_bar_mesh_3d(0.4, 0.01, 0.01, 1)
    assert mesh.nn == 729
    assert mesh.ne == 1920


def test_bar_counts_level2():
    mesh = generate_bar_mesh_3d(0.4, 0.01, 0.01, 2)
    assert mesh.nn == 4025
    assert mesh.ne == 15360


def test_bar_volume_tiles_box():
    mesh = generate_bar_mesh_3d(0.4, 0.01, 0.01, 1)
    assert mesh.volumes.sum() == pytest.approx(0.4 * 0.01 * 0.01, rel=1e-12)
    assert (mesh.volumes > 0).all()


def test_bar_refinement_scaling():
    ne1 = generate_bar_mesh_3d(0.4, 0.01, 0.01, 1).ne
    ne2 = generate_bar_mesh_3d(0.4, 0.01, 0.01, 2).ne
    assert ne2 == 8 * ne1


def test_bar_invalid_arguments():
    with pytest.raises(ValueError):
        generate_bar_mesh_3d(0.0, 0.01, 0.01, 1)
    with pytest.raises(ValueError):
        generate_bar_mesh_3d(0.4, 0.01, 0.01, 0)


def test_lshape_level0_reference_counts():
    mesh = generate_lshape_mesh_2d(0)
    assert mesh.ne == 24
    assert mesh.nn == 21


def test_lshape_area_and_scaling():
    meshes = [generate_lshape_mesh_2d(l) for l in (0, 1, 2)]
    for mesh in meshes:
        assert mesh.volumes.sum() == pytest.approx(3.0, rel=1e-12)
    assert meshes[1].ne == 4 * meshes[0].ne
    assert meshes[2].ne == 4 * meshes[1].ne


def test_lshape_negative_level():
    with pytest.raises(ValueError):
        generate_lshape_mesh_2d(-1)


def test_lshape_free_dofs(lshape1, lshape3):
    assert lshape1.dofs_minim.size == 33
    assert lshape3.dofs_minim.size == 705


def test_hole_mesh_measure_and_dofs(hole1):
    # area converges to 4 - pi r^2 at O(h^2); level 1 is coarse
    target = 4.0 - np.pi * (1.0 / 3.0) ** 2
    assert hole1.volumes.sum() == pytest.approx(target, rel=2e-2)
    assert hole1.dofs_minim.size == 266
    assert (hole1.volumes > 0).all()


def test_hole_mesh_invalid_arguments():
    with pytest.raises(ValueError):
        generate_square_with_hole_mesh_2d(0, 1.0 / 3.0)
    with pytest.raises(ValueError):
        generate_square_with_hole_mesh_2d(1, 1.5)


def test_partition_of_unity_and_affine_reproduction(bar1, lshape1, hole1):
    for mesh in (bar1, lshape1, hole1):
        for g in mesh.dphi:
            # gradients of the P1 basis sum to zero on every element
            assert np.abs(g.sum(axis=1)).max() < 1e-12
        # an affine field u = a.x reproduces its gradient exactly
        a = np.arange(1.0, mesh.dim + 1.0)
        u = mesh.nodes2coord @ a
        for m in range(mesh.dim):
            got = np.einsum(
                "kl,kl->k", u[mesh.elems2nodes], mesh.dphi[m]
            )
            assert np.abs(got - a[m]).max() < 1e-10


def test_degenerate_element_rejected():
    coords = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    elems = np.array([[0, 1, 2]])
    with pytest.raises(DegenerateElementError):
        compute_p1_gradients(coords, elems)


def test_bar_dirichlet_partition(bar1):
    assert bar1.nodes_dirichlet.size == 18
    assert bar1.dofs_minim.size == 2133
    assert np.intersect1d(bar1.dofs_minim, bar1.dofs_dirichlet).size == 0
    assert bar1.dofs_minim.size + bar1.dofs_dirichlet.size == 3 * bar1.nn


def test_mark_dirichlet_empty_spec(lshape1):
    marked = mark_dirichlet(lshape1, DirichletSpec([]), d=1)
    assert marked.dofs_minim.size == marked.nn
    assert marked.dofs_dirichlet.size == 0


def test_mark_dirichlet_warns_on_empty_region(lshape1, caplog):
    spec = DirichletSpec(
        [DirichletRegion(where=lambda x: np.zeros(len(x), dtype=bool))]
    )
    with caplog.at_level("WARNING"):
        marked = mark_dirichlet(lshape1, spec, d=1)
    assert "matched no nodes" in caplog.text
    assert marked.dofs_minim.size == marked.nn


def test_partially_fixed_nodes_stay_free():
    mesh = generate_lshape_mesh_2d(0)
    spec = DirichletSpec(
        [
            DirichletRegion(
                where=lambda x: np.abs(x[:, 0] + 1) < 1e-9, components=(0,)
            )
        ]
    )
    marked = mark_dirichlet(mesh, spec, d=2)
    # nodes on x = -1 keep their y dof free, so they are not Dirichlet nodes
    assert marked.nodes_dirichlet.size == 0
    n_fixed = int((np.abs(mesh.nodes2coord[:, 0] + 1) < 1e-9).sum())
    assert marked.dofs_dirichlet.size == n_fixed
    assert marked.dofs_minim_local.size == marked.dofs_minim.size


def test_dirichlet_values_override(lshape1):
    spec = DirichletSpec(
        [
            DirichletRegion(
                where=lambda x: np.ones(len(x), dtype=bool),
                value=lambda x, t: np.ones((len(x), 1)),
            ),
            DirichletRegion(
                where=lambda x: x[:, 0] > 0.5,
                value=lambda x, t: 2.0 * np.ones((len(x), 1)),
            ),
        ]
    )
    vals = dirichlet_values(lshape1, spec, d=1)
    right = lshape1.nodes2coord[:, 0] > 0.5
    assert (vals[right] == 2.0).all()
    assert (vals[~right] == 1.0).all()


def test_dump_load_round_trip(tmp_path, lshape1):
    path = tmp_path / "mesh.txt"
    dump_mesh(lshape1, path)
    loaded = load_mesh(path)
    np.testing.assert_array_equal(loaded.elems2nodes, lshape1.elems2nodes)
    np.testing.assert_array_equal(loaded.nodes2coord, lshape1.nodes2coord)
    np.testing.assert_allclose(loaded.volumes, lshape1.volumes, rtol=1e-15)
