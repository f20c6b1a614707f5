"""Least-squares functional, energy/L2 errors, element indicators, orders.

The energy norm of the error uses the fact that the exact solution has no
tangential jumps: interior-face terms are computed from the discrete field
alone, and the boundary term compares n x u_h with the exact datum.
"""

import math
from dataclasses import dataclass

import numpy as np

from .femspace import cell_affine, scalar_basis
from .quadrature import map_rule_to_face, simplex_rule


@dataclass(frozen=True)
class ErrorReport:
    h: float              # max cell diameter
    n_cells: int
    n_dofs: int
    energy_error: float
    l2_u: float
    l2_p: float
    j_h: float
    resolution: float = float("nan")  # structured 1/h when known


@dataclass(frozen=True)
class ConvergenceRecord:
    reports: tuple
    solver_iters: tuple = ()


def _pair_orders(errors):
    out = []
    for a, b in zip(errors, errors[1:]):
        if a > 0.0 and b > 0.0:
            out.append(math.log2(a / b))
        else:
            out.append(None)
    return out


def convergence_orders(record: ConvergenceRecord) -> dict:
    """Pairwise log2 error ratios for h-halving sequences."""
    reps = record.reports
    return {
        "energy": _pair_orders([r.energy_error for r in reps]),
        "l2_u": _pair_orders([r.l2_u for r in reps]),
        "l2_p": _pair_orders([r.l2_p for r in reps]),
    }


class _Sweep:
    """One pass over cells and faces of a discrete pair with exact data."""

    def __init__(self, mesh, field, problem, k, quad_degree):
        self.mesh = mesh
        self.field = field
        self.problem = problem
        self.k = k
        d = mesh.dim
        m = field.dofmap.degree
        degree = 2 * m + 4 if quad_degree is None else quad_degree
        self.rule = simplex_rule(d, degree)
        self.face_rule = simplex_rule(d - 1, degree)
        self.basis = scalar_basis(d, m)
        self.phi = self.basis.eval(self.rule.points)
        self.gref = self.basis.eval_grad(self.rule.points)
        self.wf_norm = self.face_rule.weights / self.face_rule.weights.sum()

    def cell_data(self, c):
        """Physical points, weights and discrete values on one cell."""
        mesh = self.mesh
        v0, jac, inv, det = cell_affine(mesh, c)
        pts = v0 + self.rule.points @ jac.T
        w = self.rule.weights * abs(det)
        g = np.einsum("pnk,kl->pnl", self.gref, inv)
        ub = self.field.u_block(c)
        pb = self.field.p_block(c)
        uh = self.phi @ ub.T
        ph = self.phi @ pb.T
        du = np.einsum("pnk,cn->pck", g, ub)
        if mesh.dim == 2:
            cuh = (du[:, 1, 0] - du[:, 0, 1])[:, None]
            dp = np.einsum("pnk,n->pk", g, pb[0])
            cph = np.column_stack([dp[:, 1], -dp[:, 0]])
        else:
            cuh = np.column_stack(
                [
                    du[:, 2, 1] - du[:, 1, 2],
                    du[:, 0, 2] - du[:, 2, 0],
                    du[:, 1, 0] - du[:, 0, 1],
                ]
            )
            dpp = np.einsum("pnk,cn->pck", g, pb)
            cph = np.column_stack(
                [
                    dpp[:, 2, 1] - dpp[:, 1, 2],
                    dpp[:, 0, 2] - dpp[:, 2, 0],
                    dpp[:, 1, 0] - dpp[:, 0, 1],
                ]
            )
        return pts, w, uh, ph, cuh, cph

    def face_traces(self, face, cells):
        """n x u_h and the p-jump quantity per side at face quad points."""
        mesh = self.mesh
        pts, _ = map_rule_to_face(self.face_rule, mesh, face)
        n = face.normal
        tu = []
        tp = []
        for c in cells:
            v0, _, inv, _ = cell_affine(mesh, c)
            phi = self.basis.eval((pts - v0) @ inv.T)
            uh = phi @ self.field.u_block(c).T
            ph = phi @ self.field.p_block(c).T
            if mesh.dim == 2:
                tu.append((n[0] * uh[:, 1] - n[1] * uh[:, 0])[:, None])
                tp.append(ph)  # scalar; cross with n preserves the norm
            else:
                tu.append(np.cross(n, uh))
                tp.append(np.cross(n, ph))
        return pts, tu, tp

    def face_integral(self, face, values_sq):
        """Integral over the face of a pointwise squared quantity."""
        return face.measure * float(self.wf_norm @ values_sq)


def _sq(a):
    return np.sum(a * a, axis=-1)


def functional_value(mesh, faces, field, problem, k=None, mu=1.0, quad_degree=None):
    """The least-squares functional J_h at a discrete pair."""
    k = problem.k if k is None else float(k)
    sweep = _Sweep(mesh, field, problem, k, quad_degree)
    total = 0.0
    for c in range(mesh.n_cells):
        pts, w, uh, ph, cuh, cph = sweep.cell_data(c)
        r1 = cph - k * uh - problem.f_scaled(pts)
        r2 = cuh - k * ph
        total += float(w @ (_sq(r1) + _sq(r2)))
    for face in faces.interior:
        _, tu, tp = sweep.face_traces(face, (face.plus, face.minus))
        jump = _sq(tu[0] - tu[1]) + _sq(tp[0] - tp[1])
        total += (mu / face.h) * sweep.face_integral(face, jump)
    for face in faces.boundary:
        pts, tu, _ = sweep.face_traces(face, (face.cell,))
        tg = problem.boundary_trace(pts, face.normal)
        total += (mu / face.h) * sweep.face_integral(face, _sq(tu[0] - tg))
    return total


def data_offset(mesh, faces, problem, k=None, mu=1.0, quad_degree=None, degree_hint=1):
    """The field-independent part of J_h: ||f/k||^2 and boundary ||t_g||^2.

    With this constant c0, J_h(x) = x^T A x - 2 b^T x + c0 for the
    assembled system, which is the quadratic-form identity behind the
    Euler-Lagrange equations.
    """
    k = problem.k if k is None else float(k)
    degree = 2 * degree_hint + 4 if quad_degree is None else quad_degree
    d = mesh.dim
    rule = simplex_rule(d, degree)
    face_rule = simplex_rule(d - 1, degree)
    wf_norm = face_rule.weights / face_rule.weights.sum()
    total = 0.0
    for c in range(mesh.n_cells):
        v0, jac, _, det = cell_affine(mesh, c)
        pts = v0 + rule.points @ jac.T
        w = rule.weights * abs(det)
        total += float(w @ _sq(problem.f_scaled(pts)))
    for face in faces.boundary:
        pts, _ = map_rule_to_face(face_rule, mesh, face)
        tg = problem.boundary_trace(pts, face.normal)
        total += (mu / face.h) * face.measure * float(wf_norm @ _sq(tg))
    return total


def energy_error(mesh, faces, field, problem, quad_degree=None):
    """Energy norm of (u - u_h, p - p_h); exact-solution jumps vanish."""
    sweep = _Sweep(mesh, field, problem, problem.k, quad_degree)
    total = 0.0
    for c in range(mesh.n_cells):
        pts, w, uh, ph, cuh, cph = sweep.cell_data(c)
        total += float(
            w
            @ (
                _sq(problem.u_exact(pts) - uh)
                + _sq(problem.curl_u(pts) - cuh)
                + _sq(problem.p_exact(pts) - ph)
                + _sq(problem.curl_p(pts) - cph)
            )
        )
    for face in faces.interior:
        _, tu, tp = sweep.face_traces(face, (face.plus, face.minus))
        jump = _sq(tu[0] - tu[1]) + _sq(tp[0] - tp[1])
        total += sweep.face_integral(face, jump) / face.h
    for face in faces.boundary:
        pts, tu, _ = sweep.face_traces(face, (face.cell,))
        tg = problem.boundary_trace(pts, face.normal)
        total += sweep.face_integral(face, _sq(tu[0] - tg)) / face.h
    return math.sqrt(total)


def l2_errors(mesh, field, problem, quad_degree=None):
    """(||u - u_h||, ||p - p_h||) over the whole domain."""
    sweep = _Sweep(mesh, field, problem, problem.k, quad_degree)
    eu = ep = 0.0
    for c in range(mesh.n_cells):
        pts, w, uh, ph, _, _ = sweep.cell_data(c)
        eu += float(w @ _sq(problem.u_exact(pts) - uh))
        ep += float(w @ _sq(problem.p_exact(pts) - ph))
    return math.sqrt(eu), math.sqrt(ep)


def indicators(mesh, faces, field, problem, k=None, quad_degree=None):
    """Element indicators eta_K; interior faces count toward both cells."""
    k = problem.k if k is None else float(k)
    sweep = _Sweep(mesh, field, problem, k, quad_degree)
    eta2 = np.zeros(mesh.n_cells)
    for c in range(mesh.n_cells):
        pts, w, uh, ph, cuh, cph = sweep.cell_data(c)
        r1 = cph - k * uh - problem.f_scaled(pts)
        r2 = cuh - k * ph
        eta2[c] += float(w @ (_sq(r1) + _sq(r2)))
    for face in faces.interior:
        _, tu, tp = sweep.face_traces(face, (face.plus, face.minus))
        jump = _sq(tu[0] - tu[1]) + _sq(tp[0] - tp[1])
        contrib = sweep.face_integral(face, jump) / face.h
        eta2[face.plus] += contrib
        eta2[face.minus] += contrib
    for face in faces.boundary:
        pts, tu, _ = sweep.face_traces(face, (face.cell,))
        tg = problem.boundary_trace(pts, face.normal)
        eta2[face.cell] += sweep.face_integral(face, _sq(tu[0] - tg)) / face.h
    return np.sqrt(eta2)


def error_report(mesh, faces, field, problem, k=None, mu=1.0, quad_degree=None,
                 resolution=float("nan")):
    """All error measures in one sweep over cells and faces."""
    from .mesh import cell_diameters

    k = problem.k if k is None else float(k)
    sweep = _Sweep(mesh, field, problem, k, quad_degree)
    j_h = 0.0
    energy2 = 0.0
    eu2 = ep2 = 0.0
    for c in range(mesh.n_cells):
        pts, w, uh, ph, cuh, cph = sweep.cell_data(c)
        r1 = cph - k * uh - problem.f_scaled(pts)
        r2 = cuh - k * ph
        j_h += float(w @ (_sq(r1) + _sq(r2)))
        du = _sq(problem.u_exact(pts) - uh)
        dp = _sq(problem.p_exact(pts) - ph)
        eu2 += float(w @ du)
        ep2 += float(w @ dp)
        energy2 += float(
            w
            @ (
                du
                + dp
                + _sq(problem.curl_u(pts) - cuh)
                + _sq(problem.curl_p(pts) - cph)
            )
        )
    for face in faces.interior:
        _, tu, tp = sweep.face_traces(face, (face.plus, face.minus))
        jump = sweep.face_integral(face, _sq(tu[0] - tu[1]) + _sq(tp[0] - tp[1]))
        j_h += (mu / face.h) * jump
        energy2 += jump / face.h
    for face in faces.boundary:
        pts, tu, _ = sweep.face_traces(face, (face.cell,))
        tg = problem.boundary_trace(pts, face.normal)
        bterm = sweep.face_integral(face, _sq(tu[0] - tg))
        j_h += (mu / face.h) * bterm
        energy2 += bterm / face.h
    return ErrorReport(
        h=float(cell_diameters(mesh).max()),
        n_cells=mesh.n_cells,
        n_dofs=field.dofmap.total_dofs,
        energy_error=math.sqrt(energy2),
        l2_u=math.sqrt(eu2),
        l2_p=math.sqrt(ep2),
        j_h=j_h,
        resolution=resolution,
    )


def write_convergence_csv(record: ConvergenceRecord, fh):
    """CSV table of a convergence study; orders sit on the finer row."""
    orders = convergence_orders(record)
    fh.write("h,n_cells,n_dofs,energy,order_energy,l2_u,order_u,l2_p,order_p,Jh,solver_iters\n")
    for i, rep in enumerate(record.reports):
        def od(name):
            if i == 0 or orders[name][i - 1] is None:
                return ""
            return f"{orders[name][i - 1]:.2f}"

        iters = record.solver_iters[i] if i < len(record.solver_iters) else ""
        fh.write(
            f"{rep.h:.3e},{rep.n_cells},{rep.n_dofs},"
            f"{rep.energy_error:.3e},{od('energy')},"
            f"{rep.l2_u:.3e},{od('l2_u')},"
            f"{rep.l2_p:.3e},{od('l2_p')},"
            f"{rep.j_h:.3e},{iters}\n"
        )
