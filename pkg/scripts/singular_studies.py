"""L2 convergence on the low-regularity benchmarks.

Part 1: L-shaped domain with the r^(2/3) corner gradient, uniform
refinement, where u converges at the regularity-limited rate ~0.7 and
p picks up roughly an extra 2/3.

Part 2: 3D unit cube with the r^(alpha-2) field, alpha = 1.2, where
only p has a positive rate (~alpha - 1/2) and u stalls by design.

    python scripts/singular_studies.py [--quick]
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
    l_shaped_mesh,
    solve_system,
    unit_cube_mesh,
)
from dlsmaxwell.assembly import assemble


def run(title, prob, make_mesh, levels, m=1):
    print(title)
    print("   n     dofs      l2_u   order      l2_p   order   iters")
    prev = None
    for n in levels:
        mesh = make_mesh(n)
        faces = build_faces(mesh)
        dofmap = DofMap(mesh.dim, m, mesh.n_cells)
        system = assemble(mesh, faces, dofmap, prob)
        x, stats = solve_system(system.matrix, system.rhs, dim=mesh.dim)
        rep = error_report(mesh, faces, FieldPair(mesh, dofmap, x), prob)
        if prev is None:
            ou = op = "    -"
        else:
            ou = f"{math.log2(prev.l2_u / rep.l2_u):5.2f}"
            op = f"{math.log2(prev.l2_p / rep.l2_p):5.2f}"
        print(f"{n:4d} {rep.n_dofs:8d}  {rep.l2_u:.3e} {ou}"
              f"  {rep.l2_p:.3e} {op}   {stats.iterations:5d}")
        prev = rep
    print()


def main():
    quick = "--quick" in sys.argv[1:]
    t0 = time.time()
    run("L-shape, alpha = 2/3, m = 1",
        by_name("example3"), l_shaped_mesh,
        (5, 10, 20) if quick else (5, 10, 20, 40))
    run("cube, alpha = 1.2, m = 1",
        by_name("example4"), unit_cube_mesh,
        (2, 4) if quick else (2, 4, 8))
    print(f"total {time.time() - t0:.1f}s")


if __name__ == "__main__":
    main()
