import numpy as np
import pytest

from fvgrad import mesh as msh
from fvgrad.euler import GasModel


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def gas():
    return GasModel()


@pytest.fixture(scope="session")
def periodic_mesh_small():
    return msh.periodic_structured_mesh(6)


@pytest.fixture(scope="session")
def periodic_mesh_irregular():
    return msh.periodic_irregular_mesh(8, seed=3)


@pytest.fixture(scope="session")
def bounded_mesh_small():
    return msh.structured_mesh(
        6, boundary_spec=msh.BoundarySpec.uniform(msh.SUPERSONIC_OUT))


def random_admissible_prim(rng, n, lo=0.3, hi=2.0, vmax=1.0):
    """Seeded admissible primitive states."""
    return np.column_stack([
        rng.uniform(lo, hi, n),
        rng.uniform(-vmax, vmax, n),
        rng.uniform(-vmax, vmax, n),
        rng.uniform(lo, hi, n),
    ])


def smooth_prim_field(points, amp=0.3):
    """Smooth periodic primitive field on the unit square."""
    x, y = points[:, 0], points[:, 1]
    return np.column_stack([
        1.0 + amp * np.sin(2 * np.pi * x) * np.cos(2 * np.pi * y),
        amp * np.sin(2 * np.pi * y),
        -amp * np.cos(2 * np.pi * x),
        1.0 + amp * np.cos(2 * np.pi * x) * np.sin(2 * np.pi * y),
    ])
