"""Uniform-refinement study for the smooth unit-square problem.

Prints energy and L2 error tables for several wave numbers and degrees.
Run from the repository root:

    python scripts/smooth_convergence.py [--quick]
"""

import math
import sys
import time

from dlsmaxwell import (
    DofMap,
    FieldPair,
    build_faces,
    by_name,
    error_report,
    solve_system,
    unit_square_mesh,
)
from dlsmaxwell.assembly import assemble


def sweep(k, m, levels):
    prob = by_name("example1", k=k)
    rows = []
    for n in levels:
        mesh = unit_square_mesh(n)
        faces = build_faces(mesh)
        dofmap = DofMap(2, m, mesh.n_cells)
        system = assemble(mesh, faces, dofmap, prob)
        x, stats = solve_system(system.matrix, system.rhs, dim=2)
        if not stats.converged:
            print(f"  solver stalled at n={n}, aborting sweep")
            return
        rep = error_report(mesh, faces, FieldPair(mesh, dofmap, x), prob)
        rows.append((n, rep))
    print(f"k = {k}, m = {m}")
    print("   n     dofs     energy   order     l2_u   order     l2_p   order")
    prev = None
    for n, rep in rows:
        if prev is None:
            orders = ("     -",) * 3
        else:
            orders = tuple(
                f"{math.log2(getattr(prev, f) / getattr(rep, f)):6.2f}"
                for f in ("energy_error", "l2_u", "l2_p")
            )
        print(f"{n:4d} {rep.n_dofs:8d}  {rep.energy_error:.3e} {orders[0]}"
              f"  {rep.l2_u:.3e} {orders[1]}  {rep.l2_p:.3e} {orders[2]}")
        prev = rep
    print()


def main():
    quick = "--quick" in sys.argv[1:]
    levels = (5, 10, 20) if quick else (5, 10, 20, 40, 80)
    t0 = time.time()
    for k, m in ((1.0, 1), (1.0, 2), (1.0, 3), (8.0, 1), (8.0, 2)):
        sweep(k, m, levels if m < 3 else levels[:4])
    print(f"total {time.time() - t0:.1f}s")


if __name__ == "__main__":
    main()
