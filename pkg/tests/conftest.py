"""Shared fixtures: small meshes are session-scoped, they are immutable."""

import numpy as np
import pytest

from femmin import bench, build_patches


@pytest.fixture(scope="session")
def bar1():
    return bench.bar_problem(1)


@pytest.fixture(scope="session")
def bar1_patches(bar1):
    return build_patches(bar1)


@pytest.fixture(scope="session")
def lshape1():
    return bench.lshape_problem(1)


@pytest.fixture(scope="session")
def lshape1_patches(lshape1):
    return build_patches(lshape1)


@pytest.fixture(scope="session")
def lshape3():
    return bench.lshape_problem(3)


@pytest.fixture(scope="session")
def hole1():
    return bench.hole_problem(1)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
