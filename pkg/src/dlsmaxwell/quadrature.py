"""Gauss quadrature on reference simplices via collapsed tensor products."""

from dataclasses import dataclass

import numpy as np

MAX_DEGREE = 20

# reference measures: interval [0,1], unit triangle, unit tetrahedron
_REF_MEASURE = {1: 1.0, 2: 0.5, 3: 1.0 / 6.0}


@dataclass(frozen=True)
class QuadratureRule:
    """Points and weights on the reference simplex of dimension `dim`.

    Exact for all polynomials of total degree <= exact_degree.
    """

    dim: int
    points: np.ndarray
    weights: np.ndarray
    exact_degree: int


def _gauss_01(n):
    """n-point Gauss-Legendre rule shifted to [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def simplex_rule(dim: int, degree: int) -> QuadratureRule:
    """Quadrature rule on the reference simplex, exact to `degree`.

    The rule is built by collapsing a tensor-product Gauss-Legendre grid
    (Duffy transformation), so all weights are positive and the point
    count grows like (degree/2)^dim.

    Parameters
    ----------
    dim : int
        Simplex dimension, 1, 2 or 3.
    degree : int
        Requested polynomial exactness, 0 <= degree <= 20.
    """
    if dim not in (1, 2, 3):
        raise ValueError(f"unsupported dimension {dim}")
    if not 0 <= degree <= MAX_DEGREE:
        raise ValueError(f"degree {degree} outside [0, {MAX_DEGREE}]")
    p = max(degree, 0)
    if dim == 1:
        # n Gauss points are exact to degree 2n-1
        x, w = _gauss_01(max((p + 2) // 2, 1))
        return QuadratureRule(1, x[:, None].copy(), w.copy(), degree)
    if dim == 2:
        # x = a, y = b(1-a); the Jacobian (1-a) raises the a-degree by one
        na = (p + 3) // 2
        nb = (p + 2) // 2
        a, wa = _gauss_01(na)
        b, wb = _gauss_01(nb)
        A, B = np.meshgrid(a, b, indexing="ij")
        WA, WB = np.meshgrid(wa, wb, indexing="ij")
        x = A
        y = B * (1.0 - A)
        w = WA * WB * (1.0 - A)
        pts = np.column_stack([x.ravel(), y.ravel()])
        return QuadratureRule(2, pts, w.ravel(), degree)
    # x = a, y = b(1-a), z = c(1-a)(1-b); Jacobian (1-a)^2 (1-b)
    na = (p + 4) // 2
    nb = (p + 3) // 2
    nc = (p + 2) // 2
    a, wa = _gauss_01(na)
    b, wb = _gauss_01(nb)
    c, wc = _gauss_01(nc)
    A, B, C = np.meshgrid(a, b, c, indexing="ij")
    WA, WB, WC = np.meshgrid(wa, wb, wc, indexing="ij")
    x = A
    y = B * (1.0 - A)
    z = C * (1.0 - A) * (1.0 - B)
    w = WA * WB * WC * (1.0 - A) ** 2 * (1.0 - B)
    pts = np.column_stack([x.ravel(), y.ravel(), z.ravel()])
    return QuadratureRule(3, pts, w.ravel(), degree)


def map_simplex_rule(rule: QuadratureRule, vertices: np.ndarray):
    """Push a reference rule onto the simplex spanned by `vertices`.

    vertices has shape (dim+1, dim); returns (points, weights) in
    physical coordinates with weights scaled by |det J|.
    """
    v0 = vertices[0]
    jac = (vertices[1:] - v0).T
    det = np.linalg.det(jac)
    if abs(det) < 1e-14:
        raise ValueError("degenerate cell in quadrature map")
    pts = v0 + rule.points @ jac.T
    return pts, rule.weights * abs(det)


def map_rule_to_cell(rule: QuadratureRule, mesh, cell: int):
    """Quadrature points and weights on one mesh cell."""
    return map_simplex_rule(rule, mesh.vertices[mesh.cells[cell]])


def map_rule_to_face(rule: QuadratureRule, mesh, face):
    """Quadrature points and weights on one mesh face (record from FaceSet)."""
    return map_face_rule(rule, mesh.vertices[np.asarray(face.verts)])


def map_face_rule(rule: QuadratureRule, face_vertices: np.ndarray):
    """Push a reference rule of dimension dim-1 onto a mesh face.

    face_vertices has shape (dim, dim): a segment in 2d, a triangle in 3d.
    Weights come back scaled so they sum to the face measure.
    """
    nfv, dim = face_vertices.shape
    if nfv != dim:
        raise ValueError("face must have dim vertices")
    v0 = face_vertices[0]
    if dim == 2:
        t = face_vertices[1] - v0
        length = np.linalg.norm(t)
        if length < 1e-14:
            raise ValueError("degenerate face")
        pts = v0 + rule.points * t
        return pts, rule.weights * length
    t1 = face_vertices[1] - v0
    t2 = face_vertices[2] - v0
    scale = np.linalg.norm(np.cross(t1, t2))
    if scale < 1e-14:
        raise ValueError("degenerate face")
    pts = v0 + rule.points[:, :1] * t1 + rule.points[:, 1:2] * t2
    return pts, rule.weights * scale


def reference_measure(dim: int) -> float:
    return _REF_MEASURE[dim]
