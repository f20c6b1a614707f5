"""Simplicial meshes: structured generators, face enumeration, refinement.

Cells are stored with positive orientation (positive signed volume).  Each
cell carries a designated refinement edge, the longest edge with ties broken
by the lexicographically smallest (min vertex id, max vertex id) pair, which
drives longest-edge bisection.
"""

from dataclasses import dataclass
from itertools import permutations

import numpy as np

# local edges of the reference simplex, as (local vertex, local vertex)
EDGE_TABLE = {
    2: ((0, 1), (0, 2), (1, 2)),
    3: ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)),
}


@dataclass(frozen=True)
class SimplicialMesh:
    dim: int
    vertices: np.ndarray          # (n_vertices, dim)
    cells: np.ndarray             # (n_cells, dim+1), positively oriented
    refinement_edges: np.ndarray  # (n_cells,) local edge index into EDGE_TABLE

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_cells(self) -> int:
        return self.cells.shape[0]

    def cell_coords(self, cell: int) -> np.ndarray:
        return self.vertices[self.cells[cell]]


@dataclass(frozen=True)
class InteriorFace:
    verts: tuple        # sorted global vertex ids
    plus: int           # adjacent cell with the smaller index
    minus: int
    local_plus: int     # local face index (opposite vertex) in plus cell
    local_minus: int
    normal: np.ndarray  # unit normal pointing from plus into minus
    h: float            # face diameter
    measure: float      # length in 2d, area in 3d


@dataclass(frozen=True)
class BoundaryFace:
    verts: tuple
    cell: int
    local: int
    normal: np.ndarray  # outward unit normal
    h: float
    measure: float


@dataclass(frozen=True)
class FaceSet:
    interior: tuple
    boundary: tuple

    @property
    def n_interior(self) -> int:
        return len(self.interior)

    @property
    def n_boundary(self) -> int:
        return len(self.boundary)


def _signed_volumes(dim, vertices, cells):
    v0 = vertices[cells[:, 0]]
    edges = vertices[cells[:, 1:]] - v0[:, None, :]
    if dim == 2:
        det = edges[:, 0, 0] * edges[:, 1, 1] - edges[:, 0, 1] * edges[:, 1, 0]
        return det / 2.0
    det = np.linalg.det(edges)
    return det / 6.0


def _edge_length2(vertices, a, b):
    d = vertices[a] - vertices[b]
    return float(d @ d)


def _refinement_edges(dim, vertices, cells):
    """Designated edge per cell: longest, ties to smallest sorted id pair."""
    out = np.empty(cells.shape[0], dtype=np.int64)
    table = EDGE_TABLE[dim]
    for c in range(cells.shape[0]):
        ids = cells[c]
        best = None
        best_idx = -1
        for e, (la, lb) in enumerate(table):
            ga, gb = int(ids[la]), int(ids[lb])
            pair = (ga, gb) if ga < gb else (gb, ga)
            key = (-_edge_length2(vertices, pair[0], pair[1]), pair)
            if best is None or key < best:
                best = key
                best_idx = e
        out[c] = best_idx
    return out


def make_mesh(dim: int, vertices, cells) -> SimplicialMesh:
    """Build a mesh from raw arrays, fixing orientation per cell."""
    vertices = np.ascontiguousarray(np.asarray(vertices, dtype=np.float64))
    cells = np.ascontiguousarray(np.asarray(cells, dtype=np.int64))
    if vertices.ndim != 2 or vertices.shape[1] != dim:
        raise ValueError("vertices must have shape (n, dim)")
    if cells.ndim != 2 or cells.shape[1] != dim + 1:
        raise ValueError("cells must have shape (n, dim+1)")
    vols = _signed_volumes(dim, vertices, cells)
    flip = vols < 0
    if np.any(flip):
        cells = cells.copy()
        cells[flip, dim - 1], cells[flip, dim] = (
            cells[flip, dim].copy(),
            cells[flip, dim - 1].copy(),
        )
        vols = _signed_volumes(dim, vertices, cells)
    if np.any(vols <= 0):
        raise ValueError("degenerate cell (zero volume)")
    ref = _refinement_edges(dim, vertices, cells)
    vertices.setflags(write=False)
    cells.setflags(write=False)
    ref.setflags(write=False)
    return SimplicialMesh(dim, vertices, cells, ref)


# ---------------------------------------------------------------------------
# structured generators


def unit_square_mesh(n: int) -> SimplicialMesh:
    """Uniform triangulation of (0,1)^2, 2n^2 cells, same diagonal everywhere."""
    if n < 1:
        raise ValueError("n must be >= 1")
    xs = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(xs, xs, indexing="xy")
    verts = np.column_stack([X.ravel(), Y.ravel()])
    vid = lambda ix, iy: iy * (n + 1) + ix
    cells = []
    for iy in range(n):
        for ix in range(n):
            a = vid(ix, iy)
            b = vid(ix + 1, iy)
            c = vid(ix + 1, iy + 1)
            d = vid(ix, iy + 1)
            cells.append((a, b, c))
            cells.append((a, c, d))
    return make_mesh(2, verts, np.array(cells))


def unit_cube_mesh(n: int) -> SimplicialMesh:
    """Kuhn triangulation of (0,1)^3 into 6n^3 tetrahedra."""
    if n < 1:
        raise ValueError("n must be >= 1")
    xs = np.linspace(0.0, 1.0, n + 1)
    Z, Y, X = np.meshgrid(xs, xs, xs, indexing="ij")
    verts = np.column_stack([X.ravel(), Y.ravel(), Z.ravel()])
    vid = lambda ix, iy, iz: (iz * (n + 1) + iy) * (n + 1) + ix
    steps = ((1, 0, 0), (0, 1, 0), (0, 0, 1))
    perms = list(permutations(range(3)))
    cells = []
    for iz in range(n):
        for iy in range(n):
            for ix in range(n):
                for perm in perms:
                    p = [ix, iy, iz]
                    tet = [vid(*p)]
                    for axis in perm:
                        p = [p[0] + steps[axis][0], p[1] + steps[axis][1], p[2] + steps[axis][2]]
                        tet.append(vid(*p))
                    cells.append(tet)
    return make_mesh(3, verts, np.array(cells))


def l_shaped_mesh(n: int) -> SimplicialMesh:
    """L-shaped domain (-1,1)^2 minus the closed fourth quadrant, h = 1/n.

    Three unit blocks triangulated on a common grid with the reentrant
    corner at the origin.  Diagonals are chosen per quadrant so they
    emanate radially from the corner, which keeps the mesh symmetric
    under the domain's reflection (x, y) -> (-y, -x) and resolves the
    corner field isotropically.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    m = 2 * n
    xs = np.linspace(-1.0, 1.0, m + 1)
    keep_vertex = {}
    verts = []

    def vid(ix, iy):
        key = iy * (m + 1) + ix
        if key not in keep_vertex:
            keep_vertex[key] = len(verts)
            verts.append((xs[ix], xs[iy]))
        return keep_vertex[key]

    cells = []
    for iy in range(m):
        for ix in range(m):
            # drop squares in the quadrant x > 0, y < 0
            if ix >= n and iy < n:
                continue
            a = vid(ix, iy)
            b = vid(ix + 1, iy)
            c = vid(ix + 1, iy + 1)
            d = vid(ix, iy + 1)
            if ix < n and iy >= n:
                # second quadrant: flip the diagonal toward the corner
                cells.append((a, b, d))
                cells.append((b, c, d))
            else:
                cells.append((a, b, c))
                cells.append((a, c, d))
    return make_mesh(2, np.array(verts), np.array(cells))


# ---------------------------------------------------------------------------
# geometry queries


def cell_volumes(mesh: SimplicialMesh) -> np.ndarray:
    return _signed_volumes(mesh.dim, mesh.vertices, mesh.cells)


def cell_diameters(mesh: SimplicialMesh) -> np.ndarray:
    coords = mesh.vertices[mesh.cells]  # (nc, dim+1, dim)
    diff = coords[:, :, None, :] - coords[:, None, :, :]
    return np.sqrt((diff**2).sum(axis=-1)).max(axis=(1, 2))


def cell_inradii(mesh: SimplicialMesh) -> np.ndarray:
    """Inscribed-sphere radius per cell (2A/perimeter resp. 3V/surface)."""
    vols = cell_volumes(mesh)
    coords = mesh.vertices[mesh.cells]
    if mesh.dim == 2:
        e0 = np.linalg.norm(coords[:, 1] - coords[:, 0], axis=1)
        e1 = np.linalg.norm(coords[:, 2] - coords[:, 1], axis=1)
        e2 = np.linalg.norm(coords[:, 0] - coords[:, 2], axis=1)
        return 2.0 * vols / (e0 + e1 + e2)
    area = np.zeros(mesh.n_cells)
    for i in range(4):
        tri = coords[:, [j for j in range(4) if j != i], :]
        cr = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        area += 0.5 * np.linalg.norm(cr, axis=1)
    return 3.0 * vols / area


def mesh_size(mesh: SimplicialMesh) -> float:
    """Largest cell diameter."""
    return float(cell_diameters(mesh).max())


# ---------------------------------------------------------------------------
# face enumeration


def _face_geometry(dim, fverts, opposite):
    """Unit normal (away from `opposite`), diameter and measure of a face."""
    if dim == 2:
        a, b = fverts
        t = b - a
        length = np.linalg.norm(t)
        n = np.array([t[1], -t[0]]) / length
        centroid = 0.5 * (a + b)
        if n @ (centroid - opposite) < 0:
            n = -n
        return n, float(length), float(length)
    a, b, c = fverts
    cr = np.cross(b - a, c - a)
    nrm = np.linalg.norm(cr)
    n = cr / nrm
    centroid = (a + b + c) / 3.0
    if n @ (centroid - opposite) < 0:
        n = -n
    h = max(
        np.linalg.norm(b - a),
        np.linalg.norm(c - b),
        np.linalg.norm(a - c),
    )
    return n, float(h), float(0.5 * nrm)


def build_faces(mesh: SimplicialMesh) -> FaceSet:
    """Enumerate faces, classify interior/boundary, fix plus/minus sides.

    The plus side of an interior face is the adjacent cell with the smaller
    index; the stored normal is its outward normal on that face.
    """
    d = mesh.dim
    incidence = {}
    order = []
    for c in range(mesh.n_cells):
        ids = mesh.cells[c]
        for loc in range(d + 1):
            key = tuple(sorted(int(ids[j]) for j in range(d + 1) if j != loc))
            if key not in incidence:
                incidence[key] = []
                order.append(key)
            incidence[key].append((c, loc))

    interior = []
    boundary = []
    for key in order:
        sides = incidence[key]
        if len(sides) > 2:
            raise ValueError(f"non-manifold face {key} shared by {len(sides)} cells")
        fverts = mesh.vertices[np.array(key)]
        if len(sides) == 1:
            (c, loc), = sides
            opposite = mesh.vertices[mesh.cells[c, loc]]
            n, h, measure = _face_geometry(d, fverts, opposite)
            boundary.append(BoundaryFace(key, c, loc, n, h, measure))
        else:
            (c0, l0), (c1, l1) = sides
            if c1 < c0:
                (c0, l0), (c1, l1) = (c1, l1), (c0, l0)
            opposite = mesh.vertices[mesh.cells[c0, l0]]
            n, h, measure = _face_geometry(d, fverts, opposite)
            interior.append(InteriorFace(key, c0, c1, l0, l1, n, h, measure))
    for f in interior:
        f.normal.setflags(write=False)
    for f in boundary:
        f.normal.setflags(write=False)
    return FaceSet(tuple(interior), tuple(boundary))


# ---------------------------------------------------------------------------
# refinement


def uniform_refine(mesh: SimplicialMesh) -> SimplicialMesh:
    """Split every triangle into 4, every tet into 8 (fixed diagonal)."""
    verts = [mesh.vertices[i] for i in range(mesh.n_vertices)]
    midpoint = {}

    def mid(a, b):
        key = (a, b) if a < b else (b, a)
        if key not in midpoint:
            midpoint[key] = len(verts)
            verts.append(0.5 * (verts[a] + verts[b]))
        return midpoint[key]

    cells = []
    for c in range(mesh.n_cells):
        ids = [int(v) for v in mesh.cells[c]]
        if mesh.dim == 2:
            v0, v1, v2 = ids
            m01, m02, m12 = mid(v0, v1), mid(v0, v2), mid(v1, v2)
            cells += [
                (v0, m01, m02),
                (m01, v1, m12),
                (m02, m12, v2),
                (m01, m12, m02),
            ]
        else:
            v0, v1, v2, v3 = ids
            m01, m02, m03 = mid(v0, v1), mid(v0, v2), mid(v0, v3)
            m12, m13, m23 = mid(v1, v2), mid(v1, v3), mid(v2, v3)
            cells += [
                (v0, m01, m02, m03),
                (v1, m01, m12, m13),
                (v2, m02, m12, m23),
                (v3, m03, m13, m23),
                # octahedron split around the m02-m13 diagonal
                (m02, m13, m01, m03),
                (m02, m13, m03, m23),
                (m02, m13, m23, m12),
                (m02, m13, m12, m01),
            ]
    return make_mesh(mesh.dim, np.array(verts), np.array(cells))


def _global_pair(cells, c, local_edge, dim):
    la, lb = EDGE_TABLE[dim][local_edge]
    a, b = int(cells[c, la]), int(cells[c, lb])
    return (a, b) if a < b else (b, a)


def bisect(mesh: SimplicialMesh, marked) -> SimplicialMesh:
    """Longest-edge bisection of `marked` cells with conformity closure.

    The set of edges to split starts from the designated (longest) edges of
    the marked cells and grows, Rivara style, until every cell that touches
    a split edge also splits its own designated edge.  Each cell is then
    subdivided recursively, always splitting the longest remaining edge
    first, which makes the induced subdivision of shared faces agree from
    both sides.
    """
    marked = set(int(c) for c in marked)
    if not marked:
        return mesh
    if marked and (min(marked) < 0 or max(marked) >= mesh.n_cells):
        raise ValueError("marked cell index out of range")
    d = mesh.dim
    nc = mesh.n_cells

    cell_edges = []  # global sorted pairs per cell
    for c in range(nc):
        cell_edges.append(
            [_global_pair(mesh.cells, c, e, d) for e in range(len(EDGE_TABLE[d]))]
        )
    refine_pair = [
        _global_pair(mesh.cells, c, int(mesh.refinement_edges[c]), d) for c in range(nc)
    ]
    edge_len2 = {}
    for edges in cell_edges:
        for pair in edges:
            if pair not in edge_len2:
                edge_len2[pair] = _edge_length2(mesh.vertices, pair[0], pair[1])

    split = set(refine_pair[c] for c in marked)
    max_rounds = len(edge_len2) + 2
    for _ in range(max_rounds):
        changed = False
        for c in range(nc):
            if refine_pair[c] in split:
                continue
            if any(pair in split for pair in cell_edges[c]):
                split.add(refine_pair[c])
                changed = True
        if not changed:
            break
    else:
        raise RuntimeError("bisection closure failed to terminate")

    verts = [mesh.vertices[i] for i in range(mesh.n_vertices)]
    midpoint = {}
    for pair in sorted(split):
        midpoint[pair] = len(verts)
        verts.append(0.5 * (verts[pair[0]] + verts[pair[1]]))

    def edge_key(pair):
        # global splitting order: longest first, then smallest id pair
        return (-edge_len2[pair], pair)

    out = []

    def subdivide(ids):
        cand = [
            (ids[i], ids[j]) if ids[i] < ids[j] else (ids[j], ids[i])
            for i in range(len(ids))
            for j in range(i + 1, len(ids))
        ]
        cand = [p for p in cand if p in midpoint and p in split]
        if not cand:
            out.append(ids)
            return
        pair = min(cand, key=edge_key)
        m = midpoint[pair]
        a, b = pair
        subdivide(tuple(m if v == b else v for v in ids))
        subdivide(tuple(m if v == a else v for v in ids))

    for c in range(nc):
        subdivide(tuple(int(v) for v in mesh.cells[c]))
    return make_mesh(d, np.array(verts), np.array(out))


# ---------------------------------------------------------------------------
# plain-text io


def save_mesh(mesh: SimplicialMesh, path) -> None:
    """Write `dim ncells nverts` header, vertex lines, then cell lines."""
    with open(path, "w") as fh:
        fh.write(f"{mesh.dim} {mesh.n_cells} {mesh.n_vertices}\n")
        for v in mesh.vertices:
            fh.write(" ".join(f"{x:.17g}" for x in v) + "\n")
        for c in mesh.cells:
            fh.write(" ".join(str(int(i)) for i in c) + "\n")


def load_mesh(path) -> SimplicialMesh:
    with open(path) as fh:
        tokens = fh.read().split()
    if len(tokens) < 3:
        raise ValueError("truncated mesh file")
    dim, ncells, nverts = int(tokens[0]), int(tokens[1]), int(tokens[2])
    if dim not in (2, 3):
        raise ValueError(f"unsupported mesh dimension {dim}")
    pos = 3
    need = nverts * dim + ncells * (dim + 1)
    if len(tokens) - pos != need:
        raise ValueError("mesh file length does not match header")
    verts = np.array(tokens[pos : pos + nverts * dim], dtype=np.float64)
    pos += nverts * dim
    cells = np.array(tokens[pos:], dtype=np.int64)
    return make_mesh(dim, verts.reshape(nverts, dim), cells.reshape(ncells, dim + 1))
