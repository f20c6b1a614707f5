"""Discontinuous (P_m)^c spaces: reference bases, dof layout, evaluation.

The scalar reference basis is the monomial basis orthonormalized on the
reference simplex (exact Gram matrix from the factorial formula, Cholesky).
Cells are mapped affinely, so no Piola transform is involved; physical
gradients use the inverse-Jacobian-transpose chain rule.
"""

from dataclasses import dataclass
from functools import lru_cache
from math import comb, factorial

import numpy as np
from scipy.linalg import cholesky, solve_triangular

from .quadrature import simplex_rule


def monomial_integral(exponents) -> float:
    """Exact integral of a monomial over the reference simplex.

    For exponents (p, q, ...) in dimension d the value is
    p! q! ... / (p + q + ... + d)!.
    """
    s = int(sum(exponents))
    num = 1
    for e in exponents:
        num *= factorial(int(e))
    return num / factorial(s + len(exponents))


def _monomial_exponents(dim, degree):
    if dim == 2:
        exps = [(i, j) for t in range(degree + 1) for i in range(t, -1, -1) for j in [t - i]]
    else:
        exps = [
            (i, j, t - i - j)
            for t in range(degree + 1)
            for i in range(t, -1, -1)
            for j in range(t - i, -1, -1)
        ]
    return np.array(exps, dtype=np.int64)


@dataclass(frozen=True)
class ScalarBasis:
    """Orthonormal scalar basis of P_m on the reference simplex."""

    dim: int
    degree: int
    exponents: np.ndarray  # (nb, dim)
    coeff: np.ndarray      # (nb, nb), basis_i = sum_j coeff[i, j] * monomial_j

    @property
    def n(self) -> int:
        return self.exponents.shape[0]

    def eval(self, pts: np.ndarray) -> np.ndarray:
        """Basis values at reference points, shape (npts, nb)."""
        pts = np.atleast_2d(pts)
        mono = np.prod(pts[:, None, :] ** self.exponents[None, :, :], axis=2)
        return mono @ self.coeff.T

    def eval_grad(self, pts: np.ndarray) -> np.ndarray:
        """Reference gradients at reference points, shape (npts, nb, dim)."""
        pts = np.atleast_2d(pts)
        npts = pts.shape[0]
        gm = np.empty((npts, self.n, self.dim))
        for k in range(self.dim):
            shifted = self.exponents.copy()
            fac = shifted[:, k].astype(np.float64)
            shifted[:, k] = np.maximum(shifted[:, k] - 1, 0)
            gm[:, :, k] = fac[None, :] * np.prod(
                pts[:, None, :] ** shifted[None, :, :], axis=2
            )
        return np.einsum("pmk,nm->pnk", gm, self.coeff)


@lru_cache(maxsize=None)
def scalar_basis(dim: int, degree: int) -> ScalarBasis:
    exps = _monomial_exponents(dim, degree)
    nb = exps.shape[0]
    gram = np.empty((nb, nb))
    for a in range(nb):
        for b in range(a, nb):
            gram[a, b] = gram[b, a] = monomial_integral(exps[a] + exps[b])
    lower = cholesky(gram, lower=True)
    coeff = solve_triangular(lower, np.eye(nb), lower=True)
    exps.setflags(write=False)
    coeff.setflags(write=False)
    return ScalarBasis(dim, degree, exps, coeff)


def eval_scalar_basis(dim: int, m: int, point):
    """Values and gradients of the scalar basis at one reference point."""
    basis = scalar_basis(dim, m)
    pt = np.asarray(point, dtype=np.float64).reshape(1, dim)
    return basis.eval(pt)[0], basis.eval_grad(pt)[0]


@dataclass(frozen=True)
class DofMap:
    """Element-local dof layout: cell-major, u components before p."""

    dim: int
    degree: int
    n_cells: int

    @property
    def n_basis_scalar(self) -> int:
        return comb(self.degree + self.dim, self.dim)

    @property
    def u_components(self) -> int:
        return self.dim

    @property
    def p_components(self) -> int:
        return 2 * self.dim - 3

    @property
    def block_size(self) -> int:
        return (self.u_components + self.p_components) * self.n_basis_scalar

    @property
    def total_dofs(self) -> int:
        return self.n_cells * self.block_size

    def cell_slice(self, cell: int) -> slice:
        off = cell * self.block_size
        return slice(off, off + self.block_size)

    def u_slice(self, cell: int, comp: int) -> slice:
        nb = self.n_basis_scalar
        off = cell * self.block_size + comp * nb
        return slice(off, off + nb)

    def p_slice(self, cell: int, comp: int) -> slice:
        nb = self.n_basis_scalar
        off = cell * self.block_size + (self.u_components + comp) * nb
        return slice(off, off + nb)


def cell_affine(mesh, cell: int):
    """Affine map data of one cell: (v0, J, Jinv, det J)."""
    coords = mesh.cell_coords(cell)
    v0 = coords[0]
    jac = (coords[1:] - v0).T
    det = np.linalg.det(jac)
    inv = np.linalg.inv(jac)
    return v0, jac, inv, det


@dataclass
class FieldPair:
    """Coefficients of a discrete pair (u_h, p_h) over a DofMap."""

    mesh: object
    dofmap: DofMap
    coeffs: np.ndarray

    def __post_init__(self):
        if self.coeffs.shape != (self.dofmap.total_dofs,):
            raise ValueError("coefficient vector has wrong length")

    def u_block(self, cell: int) -> np.ndarray:
        """(u_components, nb) coefficient block of cell."""
        nb = self.dofmap.n_basis_scalar
        sl = self.dofmap.cell_slice(cell)
        block = self.coeffs[sl].reshape(-1, nb)
        return block[: self.dofmap.u_components]

    def p_block(self, cell: int) -> np.ndarray:
        nb = self.dofmap.n_basis_scalar
        sl = self.dofmap.cell_slice(cell)
        block = self.coeffs[sl].reshape(-1, nb)
        return block[self.dofmap.u_components :]


def _reference_coords(mesh, cell, points):
    v0, _, inv, _ = cell_affine(mesh, cell)
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    return (pts - v0) @ inv.T


def eval_u(field: FieldPair, cell: int, point):
    """u_h at physical point(s) inside `cell`; shape (..., dim)."""
    ref = _reference_coords(field.mesh, cell, point)
    vals = scalar_basis(field.mesh.dim, field.dofmap.degree).eval(ref)
    out = vals @ field.u_block(cell).T
    return out[0] if np.asarray(point).ndim == 1 else out


def eval_p(field: FieldPair, cell: int, point):
    """p_h at physical point(s); shape (..., 2 dim - 3)."""
    ref = _reference_coords(field.mesh, cell, point)
    vals = scalar_basis(field.mesh.dim, field.dofmap.degree).eval(ref)
    out = vals @ field.p_block(cell).T
    return out[0] if np.asarray(point).ndim == 1 else out


def _physical_gradients(field, cell, point):
    mesh = field.mesh
    v0, _, inv, _ = cell_affine(mesh, cell)
    pts = np.atleast_2d(np.asarray(point, dtype=np.float64))
    ref = (pts - v0) @ inv.T
    gref = scalar_basis(mesh.dim, field.dofmap.degree).eval_grad(ref)
    return np.einsum("pnk,kl->pnl", gref, inv)


def eval_curl_u(field: FieldPair, cell: int, point):
    """curl u_h: scalar (length-1) in 2d, 3-vector in 3d."""
    g = _physical_gradients(field, cell, point)
    ub = field.u_block(cell)
    return _curl_from_gradients(field.mesh.dim, g, ub, np.asarray(point).ndim == 1)


def eval_curl_p(field: FieldPair, cell: int, point):
    """Formal-adjoint curl of p_h: a dim-vector.

    2d: p scalar, curl p = (dp/dy, -dp/dx); 3d: the usual curl.
    """
    g = _physical_gradients(field, cell, point)
    pb = field.p_block(cell)
    if field.mesh.dim == 2:
        dp = np.einsum("pnk,n->pk", g, pb[0])
        out = np.column_stack([dp[:, 1], -dp[:, 0]])
    else:
        out = _curl_from_gradients(3, g, pb, False)
    return out[0] if np.asarray(point).ndim == 1 else out


def _curl_from_gradients(dim, g, comp_coeffs, squeeze):
    if dim == 2:
        d0 = np.einsum("pnk,n->pk", g, comp_coeffs[0])
        d1 = np.einsum("pnk,n->pk", g, comp_coeffs[1])
        out = (d1[:, 0] - d0[:, 1])[:, None]
    else:
        d = [np.einsum("pnk,n->pk", g, comp_coeffs[c]) for c in range(3)]
        out = np.column_stack(
            [
                d[2][:, 1] - d[1][:, 2],
                d[0][:, 2] - d[2][:, 0],
                d[1][:, 0] - d[0][:, 1],
            ]
        )
    return out[0] if squeeze else out


def tangential_trace(dim: int, n: np.ndarray, v) -> np.ndarray:
    """n x v on a face: scalar (length 1) in 2d, 3-vector in 3d.

    A scalar 2d argument q is treated as the out-of-plane component, giving
    the in-plane vector q * (n2, -n1).
    """
    n = np.asarray(n, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if dim == 2:
        if v.ndim == 0 or v.shape[-1] == 1:
            q = np.float64(v) if v.ndim == 0 else v[..., 0]
            return np.stack([q * n[1], -q * n[0]], axis=-1)
        return (n[0] * v[..., 1] - n[1] * v[..., 0])[..., None]
    return np.cross(n, v)


def project(mesh, dofmap: DofMap, u_fun, p_fun, degree=None) -> FieldPair:
    """Cellwise L2 projection of callables onto the discrete pair space.

    Exact (up to roundoff) whenever the target is piecewise polynomial of
    degree <= the rule's exactness, since the mapped basis stays orthogonal.
    """
    if degree is None:
        degree = 2 * dofmap.degree + 2
    rule = simplex_rule(mesh.dim, degree)
    basis = scalar_basis(mesh.dim, dofmap.degree)
    vals = basis.eval(rule.points)  # (nq, nb)
    coeffs = np.zeros(dofmap.total_dofs)
    for c in range(mesh.n_cells):
        v0, jac, _, _ = cell_affine(mesh, c)
        pts = v0 + rule.points @ jac.T
        uq = np.atleast_2d(u_fun(pts))
        pq = np.atleast_2d(p_fun(pts))
        # reference weights only: the mapped mass matrix is detJ * identity,
        # so detJ cancels and the weighted sum is already the projection
        wv = rule.weights[:, None] * vals
        for comp in range(dofmap.u_components):
            coeffs[dofmap.u_slice(c, comp)] = wv.T @ uq[:, comp]
        for comp in range(dofmap.p_components):
            coeffs[dofmap.p_slice(c, comp)] = wv.T @ pq[:, comp]
    return FieldPair(mesh, dofmap, coeffs)
