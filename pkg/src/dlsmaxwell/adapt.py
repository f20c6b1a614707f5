"""Adaptive loop: solve, estimate with eta_K, Dorfler-mark, bisect."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analysis import error_report, indicators
from .assembly import assemble
from .femspace import DofMap, FieldPair
from .mesh import (
    SimplicialMesh,
    bisect,
    build_faces,
    l_shaped_mesh,
    unit_cube_mesh,
    unit_square_mesh,
)
from .solver import solve_system


@dataclass(frozen=True)
class AdaptiveStep:
    step: int
    n_cells: int
    n_dofs: int
    l2_u: float
    l2_p: float
    energy: float
    sum_eta2: float
    marked: int


@dataclass(frozen=True)
class AdaptiveHistory:
    """Per-step records plus the last mesh built.

    ``aborted`` is set when the linear solver failed to converge at some
    step; the records then cover only the completed steps.
    """

    steps: tuple
    final_mesh: SimplicialMesh
    aborted: bool = False


def dorfler_mark(etas: np.ndarray, theta: float) -> np.ndarray:
    """Minimal bulk-criterion cell set, ties broken by cell index.

    Sorts eta_K^2 descending and takes the shortest prefix whose sum
    reaches theta times the total.  All-zero indicators return an empty
    set, which signals convergence to the caller.
    """
    if not 0.0 < theta < 1.0:
        raise ValueError(f"theta must lie in (0, 1), got {theta}")
    etas = np.asarray(etas, dtype=np.float64)
    if np.any(etas < 0.0):
        raise ValueError("indicators must be nonnegative")
    eta2 = etas * etas
    total = float(eta2.sum())
    if total == 0.0:
        return np.empty(0, dtype=np.int64)
    order = np.lexsort((np.arange(eta2.size), -eta2))
    csum = np.cumsum(eta2[order])
    count = int(np.searchsorted(csum, theta * total, side="left")) + 1
    count = min(count, eta2.size)
    return np.sort(order[:count])


def domain_mesh(problem, n: int) -> SimplicialMesh:
    """Mesh the example's domain at resolution n."""
    if problem.name in ("example3", "example5"):
        return l_shaped_mesh(n)
    if problem.dim == 3:
        return unit_cube_mesh(n)
    return unit_square_mesh(n)


def adaptive_solve(problem, m: int, theta: float = 0.25, max_steps: int = 10,
                   dof_budget=None, initial_mesh=None, initial_n: int = 5,
                   mu: float = 1.0, method: str = "bicgstab",
                   tol: float = 1e-10) -> AdaptiveHistory:
    """Run solve/estimate/mark/refine until max_steps or dof_budget.

    Each step rebuilds the space and solves from scratch; no solution
    transfer between meshes.  A solver failure aborts the loop and the
    history keeps the steps completed so far.
    """
    if not 0.0 < theta < 1.0:
        raise ValueError(f"theta must lie in (0, 1), got {theta}")
    if m < 1:
        raise ValueError(f"polynomial degree must be >= 1, got {m}")
    if max_steps < 1:
        raise ValueError(f"max_steps must be >= 1, got {max_steps}")
    mesh = domain_mesh(problem, initial_n) if initial_mesh is None else initial_mesh
    steps = []
    aborted = False
    for step in range(max_steps):
        faces = build_faces(mesh)
        dofmap = DofMap(mesh.dim, m, mesh.n_cells)
        system = assemble(mesh, faces, dofmap, problem, mu=mu)
        x, stats = solve_system(system.matrix, system.rhs, method=method,
                                tol=tol, dim=mesh.dim)
        if not stats.converged:
            aborted = True
            break
        field = FieldPair(mesh, dofmap, x)
        report = error_report(mesh, faces, field, problem, mu=mu)
        etas = indicators(mesh, faces, field, problem)
        marked = dorfler_mark(etas, theta)
        steps.append(AdaptiveStep(
            step=step,
            n_cells=mesh.n_cells,
            n_dofs=dofmap.total_dofs,
            l2_u=report.l2_u,
            l2_p=report.l2_p,
            energy=report.energy_error,
            sum_eta2=float(eta_sq_total(etas)),
            marked=int(marked.size),
        ))
        if marked.size == 0:
            break
        if dof_budget is not None and dofmap.total_dofs >= dof_budget:
            break
        if step + 1 < max_steps:
            mesh = bisect(mesh, marked)
    return AdaptiveHistory(tuple(steps), mesh, aborted)


def eta_sq_total(etas: np.ndarray) -> float:
    return float(np.sum(np.square(etas)))


def write_history_csv(history: AdaptiveHistory, fh) -> None:
    fh.write("step,n_cells,n_dofs,l2_u,l2_p,energy,sum_eta2,marked\n")
    for s in history.steps:
        fh.write(f"{s.step},{s.n_cells},{s.n_dofs},{s.l2_u:.3e},"
                 f"{s.l2_p:.3e},{s.energy:.3e},{s.sum_eta2:.3e},{s.marked}\n")
