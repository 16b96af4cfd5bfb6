"""Shared fixtures for the uvdrape test suite."""

import numpy as np
import pytest

from uvdrape.body.model import build_procedural_body
from uvdrape.geometry.mesh import TriMesh, grid_mesh


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def triangle():
    """Right triangle covering the lower-left half of the UV square."""
    return TriMesh.create(
        [(0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (0.0, 1.0, 0.0)],
        [(0, 1, 2)],
        uv_coords=[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)],
    )


@pytest.fixture
def quad():
    """Unit square split along its (0, 2) diagonal."""
    return TriMesh.create(
        [(0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (1.0, 1.0, 0.0), (0.0, 1.0, 0.0)],
        [(0, 1, 2), (0, 2, 3)],
    )


@pytest.fixture
def small_grid():
    return grid_mesh(8, 8, size=(0.4, 0.4))


@pytest.fixture(scope="session")
def body():
    return build_procedural_body()


@pytest.fixture(scope="session")
def tiny_dataset(tmp_path_factory):
    """Three short actions at 16x16; only slow tests ask for it."""
    from uvdrape.dataset.generate import generate_dataset
    from uvdrape.dataset.manifest import DatasetConfig
    from uvdrape.sim.params import SimParams

    config = DatasetConfig(actions=("swing_arms", "walking", "jump"), frames=7, resolution=16,
                           train_fraction=0.5, workers=1)
    return generate_dataset(tmp_path_factory.mktemp("dataset"), config, SimParams(), quiet=True)
