import numpy as np
import pytest

from prstokes.exact import SingularSolution
from prstokes.mesh import lshape_mesh


@pytest.fixture(scope="session")
def meshes():
    """Builtin L-shape meshes, levels 0..4, built once."""
    return [lshape_mesh(level) for level in range(5)]


@pytest.fixture(scope="session")
def exact():
    return SingularSolution()


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)
