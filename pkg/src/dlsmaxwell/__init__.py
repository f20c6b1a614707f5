"""Discontinuous least-squares method for time-harmonic Maxwell equations.

The package discretizes the first-order reformulation of the curl-curl
problem with fully discontinuous piecewise polynomials and minimizes a
least-squares functional with weighted tangential-jump penalties, which
yields a symmetric positive definite system for any wave number.
"""

__version__ = "0.1.0"

from .adapt import AdaptiveHistory, adaptive_solve, dorfler_mark
from .analysis import (
    ConvergenceRecord,
    ErrorReport,
    convergence_orders,
    error_report,
    functional_value,
    indicators,
)
from .assembly import SparseSystem, assemble
from .femspace import DofMap, FieldPair, project
from .mesh import (
    SimplicialMesh,
    bisect,
    build_faces,
    l_shaped_mesh,
    uniform_refine,
    unit_cube_mesh,
    unit_square_mesh,
)
from .problems import ManufacturedProblem, by_name
from .solver import CsrMatrix, SolveStats, bicgstab, cg, solve_system

__all__ = [
    "AdaptiveHistory",
    "ConvergenceRecord",
    "CsrMatrix",
    "DofMap",
    "ErrorReport",
    "FieldPair",
    "ManufacturedProblem",
    "SimplicialMesh",
    "SolveStats",
    "SparseSystem",
    "adaptive_solve",
    "assemble",
    "bicgstab",
    "bisect",
    "build_faces",
    "by_name",
    "cg",
    "convergence_orders",
    "dorfler_mark",
    "error_report",
    "functional_value",
    "indicators",
    "l_shaped_mesh",
    "project",
    "solve_system",
    "uniform_refine",
    "unit_cube_mesh",
    "unit_square_mesh",
]
