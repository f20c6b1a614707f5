"""Assembly of the least-squares system for the first-order Maxwell pair.

The bilinear form combines cellwise residual products

    (curl p - k u) . (curl q - k v) + (curl u - k p) . (curl v - k q),

interior-face penalties (mu/h_f) on the tangential jumps of u and p, and
boundary penalties (mu/h_f) on n x u against the datum t_g = n x u_exact.
Everything is accumulated as COO triplets in a fixed order (cells, then
interior faces, then boundary faces) and compressed to CSR, which keeps
the matrix bitwise reproducible.
"""

from dataclasses import dataclass

import numpy as np

from .femspace import DofMap, cell_affine, scalar_basis
from .quadrature import map_rule_to_face, simplex_rule
from .solver import CsrMatrix

# (output row, source component, derivative/normal axis, sign) tables.
# The 3d curl and the 3d cross product share one index structure.
_CURL3 = ((0, 2, 1, 1.0), (0, 1, 2, -1.0), (1, 0, 2, 1.0),
          (1, 2, 0, -1.0), (2, 1, 0, 1.0), (2, 0, 1, -1.0))
_CURL_U = {2: ((0, 1, 0, 1.0), (0, 0, 1, -1.0)), 3: _CURL3}
# 2d adjoint curl maps the scalar p to (dp/dy, -dp/dx)
_CURL_P = {2: ((0, 0, 1, 1.0), (1, 0, 0, -1.0)), 3: _CURL3}
_CROSS = {2: ((0, 1, 0, 1.0), (0, 0, 1, -1.0)), 3: _CURL3}


@dataclass(frozen=True)
class SparseSystem:
    matrix: CsrMatrix
    rhs: np.ndarray
    n: int
    k: float
    mu: float


class _Assembler:
    """Shared tabulations for one (mesh, dofmap, problem) combination."""

    def __init__(self, mesh, faces, dofmap, problem, k, mu, quad_degree):
        if mesh.dim != dofmap.dim or mesh.dim != problem.dim:
            raise ValueError("mesh, dofmap and problem dimensions disagree")
        if dofmap.n_cells != mesh.n_cells:
            raise ValueError("dofmap cell count does not match mesh")
        if k <= 0 or mu <= 0:
            raise ValueError("k and mu must be positive")
        self.mesh = mesh
        self.faces = faces
        self.dofmap = dofmap
        self.problem = problem
        self.k = k
        self.mu = mu
        d = mesh.dim
        self.nb = nb = dofmap.n_basis_scalar
        self.pc = dofmap.p_components
        self.nloc = dofmap.block_size
        self.poff = d * nb

        degree = 2 * (dofmap.degree + 1) if quad_degree is None else quad_degree
        self.rule = simplex_rule(d, degree)
        self.face_rule = simplex_rule(d - 1, degree)
        self.basis = scalar_basis(d, dofmap.degree)
        self.phi = self.basis.eval(self.rule.points)          # (nq, nb)
        self.gref = self.basis.eval_grad(self.rule.points)    # (nq, nb, d)
        self.sqrt_w = np.sqrt(self.rule.weights)
        self.sqrt_wf = np.sqrt(self.face_rule.weights / self.face_rule.weights.sum())

        nq = self.rule.points.shape[0]
        # residual operators; the -k u and -k p parts never change per cell
        self.R1 = np.zeros((nq, d, self.nloc))
        self.R2 = np.zeros((nq, self.pc, self.nloc))
        for c in range(d):
            self.R1[:, c, c * nb : (c + 1) * nb] = -k * self.phi
        for c in range(self.pc):
            sl = slice(self.poff + c * nb, self.poff + (c + 1) * nb)
            self.R2[:, c, sl] = -k * self.phi

    def _cell_gradients(self, cell):
        v0, jac, inv, det = cell_affine(self.mesh, cell)
        g = np.einsum("pnk,kl->pnl", self.gref, inv)
        return v0, jac, abs(det), g

    def cell_block(self, cell):
        """Volume contribution of one cell: (dense block, local rhs)."""
        nb, poff = self.nb, self.poff
        v0, jac, adet, g = self._cell_gradients(cell)
        for row, comp, axis, sign in _CURL_P[self.mesh.dim]:
            sl = slice(poff + comp * nb, poff + (comp + 1) * nb)
            self.R1[:, row, sl] = sign * g[:, :, axis]
        for row, comp, axis, sign in _CURL_U[self.mesh.dim]:
            sl = slice(comp * nb, (comp + 1) * nb)
            self.R2[:, row, sl] = sign * g[:, :, axis]
        # 2d: R1's p-columns got overwritten above only for the curl rows;
        # refresh the -k u block is not needed (distinct columns)
        w1 = self.R1 * self.sqrt_w[:, None, None]
        w2 = self.R2 * self.sqrt_w[:, None, None]
        m1 = w1.reshape(-1, self.nloc)
        m2 = w2.reshape(-1, self.nloc)
        block = adet * (m1.T @ m1 + m2.T @ m2)

        pts = v0 + self.rule.points @ jac.T
        ft = self.problem.f_scaled(pts) * self.sqrt_w[:, None]
        rhs = adet * (m1.T @ ft.reshape(-1))
        return block, rhs

    def _face_traces(self, face, cells):
        """Tangential-trace operators of u and p on each given cell side.

        Returns lists of (nqf, pc, d*nb) and (nqf, jump_comps, pc*nb)
        arrays, plus the physical quad points and reference face weights.
        """
        mesh = self.mesh
        d = mesh.dim
        nb = self.nb
        pts, _ = map_rule_to_face(self.face_rule, mesh, face)
        nqf = pts.shape[0]
        n = face.normal
        tu_list = []
        tp_list = []
        for c in cells:
            v0, _, inv, _ = cell_affine(mesh, c)
            ref = (pts - v0) @ inv.T
            phi = self.basis.eval(ref)  # (nqf, nb)
            tu = np.zeros((nqf, self.pc, d * nb))
            for row, comp, axis, sign in _CROSS[d]:
                tu[:, row, comp * nb : (comp + 1) * nb] = sign * n[axis] * phi
            if d == 2:
                # scalar p: |jump(n x p)|^2 reduces to the scalar jump squared
                tp = phi[:, None, :].copy()
            else:
                tp = np.zeros((nqf, 3, 3 * nb))
                for row, comp, axis, sign in _CROSS[3]:
                    tp[:, row, comp * nb : (comp + 1) * nb] = sign * n[axis] * phi
            tu_list.append(tu)
            tp_list.append(tp)
        return tu_list, tp_list, pts

    def _penalty_block(self, traces, measure, h):
        """(mu/h) * int_f J^T J for a stacked jump operator J."""
        scaled = traces * self.sqrt_wf[:, None, None]
        m = scaled.reshape(-1, traces.shape[2])
        return (self.mu / h) * measure * (m.T @ m)

    def interior_face_blocks(self, face):
        """u- and p-jump penalty blocks over the (plus, minus) cell pair."""
        (tu_p, tu_m), (tp_p, tp_m), _ = self._face_traces(
            face, (face.plus, face.minus)
        )
        ju = np.concatenate([tu_p, -tu_m], axis=2)
        jp = np.concatenate([tp_p, -tp_m], axis=2)
        bu = self._penalty_block(ju, face.measure, face.h)
        bp = self._penalty_block(jp, face.measure, face.h)
        return bu, bp

    def boundary_face_block(self, face):
        """Boundary penalty block and its datum contribution to the rhs."""
        (tu,), _, pts = self._face_traces(face, (face.cell,))
        block = self._penalty_block(tu, face.measure, face.h)
        tg = self.problem.boundary_trace(pts, face.normal)
        scaled = tu * self.sqrt_wf[:, None, None]
        m = scaled.reshape(-1, tu.shape[2])
        tgw = (tg * self.sqrt_wf[:, None]).reshape(-1)
        rhs = (self.mu / face.h) * face.measure * (m.T @ tgw)
        return block, rhs

    def u_dofs(self, cell):
        off = cell * self.nloc
        return np.arange(off, off + self.poff)

    def p_dofs(self, cell):
        off = cell * self.nloc + self.poff
        return np.arange(off, off + self.pc * self.nb)

    def cell_dofs(self, cell):
        off = cell * self.nloc
        return np.arange(off, off + self.nloc)


def assemble(mesh, faces, dofmap: DofMap, problem, k=None, mu=1.0, quad_degree=None):
    """Build the SPD least-squares system A x = b.

    k defaults to the problem's wave number; mu is the jump-penalty
    weight.  The quadrature degree defaults to 2(m+1).
    """
    k = problem.k if k is None else float(k)
    asm = _Assembler(mesh, faces, dofmap, problem, k, mu, quad_degree)
    n = dofmap.total_dofs
    rows, cols, vals = [], [], []
    rhs = np.zeros(n)

    def scatter(block, idx):
        m = idx.size
        rows.append(np.repeat(idx, m))
        cols.append(np.tile(idx, m))
        vals.append(block.reshape(-1))

    for c in range(mesh.n_cells):
        block, bloc = asm.cell_block(c)
        idx = asm.cell_dofs(c)
        scatter(block, idx)
        rhs[idx] += bloc

    for face in faces.interior:
        bu, bp = asm.interior_face_blocks(face)
        idx_u = np.concatenate([asm.u_dofs(face.plus), asm.u_dofs(face.minus)])
        idx_p = np.concatenate([asm.p_dofs(face.plus), asm.p_dofs(face.minus)])
        scatter(bu, idx_u)
        scatter(bp, idx_p)

    for face in faces.boundary:
        block, bloc = asm.boundary_face_block(face)
        idx_u = asm.u_dofs(face.cell)
        scatter(block, idx_u)
        rhs[idx_u] += bloc

    matrix = CsrMatrix.from_triplets(
        n, np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)
    )
    return SparseSystem(matrix, rhs, n, k, mu)


def local_cell_block(mesh, faces, dofmap, problem, cell, k=None, mu=1.0, quad_degree=None):
    """Dense volume block and rhs of one cell (testing/diagnostics)."""
    k = problem.k if k is None else float(k)
    asm = _Assembler(mesh, faces, dofmap, problem, k, mu, quad_degree)
    return asm.cell_block(cell)


def local_interior_face_block(mesh, faces, dofmap, problem, face, k=None, mu=1.0,
                              quad_degree=None):
    """Dense u- and p-jump penalty blocks of one interior face."""
    k = problem.k if k is None else float(k)
    asm = _Assembler(mesh, faces, dofmap, problem, k, mu, quad_degree)
    return asm.interior_face_blocks(face)


def local_boundary_face_block(mesh, faces, dofmap, problem, face, k=None, mu=1.0,
                              quad_degree=None):
    """Dense boundary penalty block and rhs piece of one boundary face."""
    k = problem.k if k is None else float(k)
    asm = _Assembler(mesh, faces, dofmap, problem, k, mu, quad_degree)
    return asm.boundary_face_block(face)
