import numpy as np
import pytest

from dg import build_discretization
from mesh import PolyMesh, build_mesh
from physics import GasParams

UNIT_BOX = (0.0, 0.0, 0.0, 1.0, 1.0, 1.0)


@pytest.fixture
def gas():
    return GasParams()


@pytest.fixture(scope='session')
def tet_mesh():
    """2x2x2 Kuhn lattice of the unit cube, 48 single-tet cells"""
    return build_mesh(UNIT_BOX, 0.5, 'tets')


@pytest.fixture(scope='session')
def lpr_mesh():
    """One replacement at the middle vertex of the 2x2x2 lattice"""
    return build_mesh(UNIT_BOX, 0.5, 'lpr')


@pytest.fixture(scope='session')
def jittered_lpr_mesh():
    return build_mesh(UNIT_BOX, 0.5, 'lpr', jitter=0.1, seed=7)


@pytest.fixture(scope='session')
def lpr_disc(lpr_mesh):
    return build_discretization(lpr_mesh, 1, GasParams())


@pytest.fixture(scope='session')
def tet_disc(tet_mesh):
    return build_discretization(tet_mesh, 1, GasParams())


def single_tet_mesh(scale: float = 1.0) -> PolyMesh:
    vertices = scale * np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    pm = PolyMesh(vertices, [True] * 4)
    pm.add_cell('tet', [(0, 1, 2, 3)])
    return pm.finalize()


def two_tet_cell_mesh() -> PolyMesh:
    """Reference tet and its mirror across the face x+y+z=1, merged into one cell"""
    vertices = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 1.0, 1.0]])
    pm = PolyMesh(vertices, [True] * 5)
    pm.add_cell('vt', [(0, 1, 2, 3), (1, 2, 3, 4)])
    return pm.finalize()
