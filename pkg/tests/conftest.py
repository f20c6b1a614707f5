import numpy as np
import pytest

from dlsmaxwell.assembly import assemble
from dlsmaxwell.femspace import DofMap
from dlsmaxwell.mesh import build_faces, unit_square_mesh
from dlsmaxwell.problems import by_name


# filled in by the acceptance tests; echoed after the run so the
# per-criterion lines survive output capturing
criterion_lines = []


def pytest_terminal_summary(terminalreporter):
    if criterion_lines:
        terminalreporter.section("acceptance criteria")
        for line in criterion_lines:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture(scope="session")
def small_system():
    """Assembled Example-1 system on the h = 1/5 mesh, m = 1 (450 dofs)."""
    mesh = unit_square_mesh(5)
    faces = build_faces(mesh)
    dofmap = DofMap(2, 1, mesh.n_cells)
    problem = by_name("example1", k=1.0)
    system = assemble(mesh, faces, dofmap, problem)
    return mesh, faces, dofmap, problem, system
