"""Adaptive study on the L-shaped domain with the corner singularity.

Runs the solve/estimate/mark/refine loop with bulk marking and reports
the error history, the log-log slopes over the last five steps, and how
strongly the refinement concentrates at the reentrant corner.

    python scripts/adaptive_lshape.py [steps]
"""

import sys
import time

import numpy as np

from dlsmaxwell import adaptive_solve, by_name
from dlsmaxwell.mesh import cell_diameters


def main():
    steps = int(sys.argv[1]) if len(sys.argv) > 1 else 10
    t0 = time.time()
    prob = by_name("example5")
    hist = adaptive_solve(prob, 1, theta=0.25, max_steps=steps, initial_n=5)
    print("step  cells   dofs      l2_u       l2_p     sum_eta2  marked")
    for s in hist.steps:
        print(f"{s.step:4d} {s.n_cells:6d} {s.n_dofs:6d}  {s.l2_u:.3e}"
              f"  {s.l2_p:.3e}  {s.sum_eta2:.3e}  {s.marked:5d}")
    if hist.aborted:
        print("aborted on solver failure")
        return

    tail = hist.steps[-5:]
    if len(tail) == 5:
        logn = np.log([s.n_dofs for s in tail])
        for label, key in (("l2_u", "l2_u"), ("l2_p", "l2_p")):
            loge = np.log([getattr(s, key) for s in tail])
            slope = np.polyfit(logn, loge, 1)[0]
            print(f"slope of {label} vs dofs over last 5 steps: {slope:+.3f}")

    mesh = hist.final_mesh
    diam = cell_diameters(mesh)
    touches_corner = np.array([
        np.any(np.all(np.abs(mesh.vertices[mesh.cells[c]]) < 1e-12, axis=1))
        for c in range(mesh.n_cells)
    ])
    corner = diam[touches_corner]
    print(f"corner-adjacent cells: {corner.size}, max diameter {corner.max():.3e}")
    print(f"median cell diameter {np.median(diam):.3e} "
          f"(ratio {np.median(diam) / corner.max():.1f})")
    print(f"total {time.time() - t0:.1f}s")


if __name__ == "__main__":
    main()
