"""Structured meshes of the unit square and cube with face topology.

Three families are generated:

* :func:`build_unit_square_simplex` -- n x n squares, each cut along the
  lower-left to upper-right diagonal.
* :func:`build_unit_cube_simplex` -- n^3 cubes, each split into the 6 Kuhn
  tetrahedra that share the main diagonal.
* :func:`build_ladder_mesh` -- rows of rectangles where every other row is
  shifted by half a cell, so horizontal interfaces carry hanging vertices.

Faces are always the *minimal* segments/triangles between vertices, so every
face touches at most two elements even under hanging vertices.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np
from scipy.spatial import cKDTree

from .basis import quadrature

# local sides as vertex tuples; triangle/tet side i is opposite vertex i
_SIDES = {
    "triangle": ((1, 2), (2, 0), (0, 1)),
    "rectangle": ((0, 1), (1, 2), (2, 3), (3, 0)),
    "tetrahedron": ((1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2)),
}
_DIM = {"triangle": 2, "rectangle": 2, "tetrahedron": 3}
REFERENCE_SHAPE = {"triangle": "triangle", "rectangle": "rectangle", "tetrahedron": "tetrahedron"}


class NonConformingMeshError(ValueError):
    pass


@dataclass(frozen=True)
class Face:
    vertices: tuple
    elements: tuple
    area: float
    centroid: np.ndarray
    normal: np.ndarray
    boundary: bool
    points: np.ndarray

    def quadrature(self, degree: int):
        shape = "segment" if len(self.points) == 2 else "triangle"
        p0 = self.points[0]
        return quadrature(shape, degree).mapped(p0, (self.points[1:] - p0).T)


@dataclass(frozen=True)
class Element:
    index: int
    shape: str
    points: np.ndarray
    centroid: np.ndarray
    diameter: float
    volume: float

    def quadrature(self, degree: int, npoints: int | None = None):
        p0 = self.points[0]
        cols = [1, 3] if self.shape == "rectangle" else list(range(1, len(p0) + 1))
        rule = quadrature(REFERENCE_SHAPE[self.shape], degree, npoints)
        return rule.mapped(p0, (self.points[cols] - p0).T)


class Mesh:
    """Element/vertex arrays plus face adjacency (filled by :func:`face_topology`).

    Face arrays: ``face_vertices`` (nf, d) vertex ids, ``face_elements`` (nf, 2)
    with -1 for the missing neighbour of a boundary face, ``face_area``,
    ``face_centroid``, ``face_normal`` (outward for ``face_elements[:, 0]``).
    ``element_faces[K]`` / ``element_face_signs[K]`` list the faces of K and
    +1/-1 for whether the stored normal is outward for K.
    """

    def __init__(self, vertices, cells, shape):
        self.vertices = np.asarray(vertices, dtype=float)
        self.cells = np.asarray(cells, dtype=int)
        self.shape = shape
        self.dim = _DIM[shape]
        if self.vertices.shape[1] != self.dim:
            raise ValueError("vertex dimension does not match element shape")
        pts = self.vertices[self.cells]
        self.centroids = pts.mean(axis=1)
        diff = pts[:, :, None, :] - pts[:, None, :, :]
        self.diameters = np.sqrt((diff**2).sum(-1)).max(axis=(1, 2))
        self.origins, self.jacobians = self._affine()
        det = np.linalg.det(self.jacobians)
        if self.shape == "triangle":
            det = det / 2
        elif self.shape == "tetrahedron":
            det = det / 6
        self.volumes = det
        if np.any(self.volumes <= 0):
            raise ValueError("elements must be positively oriented with nonzero volume")
        self.face_vertices = None

    def _affine(self):
        pts = self.vertices[self.cells]
        origin = pts[:, 0, :]
        if self.shape == "rectangle":
            cols = [pts[:, 1] - origin, pts[:, 3] - origin]
        else:
            cols = [pts[:, i] - origin for i in range(1, self.dim + 1)]
        return origin, np.stack(cols, axis=-1)

    @property
    def n_elements(self) -> int:
        return len(self.cells)

    @property
    def n_faces(self) -> int:
        return len(self.face_vertices)

    @property
    def h_max(self) -> float:
        return float(self.diameters.max())

    @property
    def reference_shape(self) -> str:
        return REFERENCE_SHAPE[self.shape]

    @property
    def boundary_faces(self) -> np.ndarray:
        return np.flatnonzero(self.face_elements[:, 1] < 0)

    @property
    def interior_faces(self) -> np.ndarray:
        return np.flatnonzero(self.face_elements[:, 1] >= 0)

    def element(self, K: int) -> Element:
        return Element(
            K, self.shape, self.vertices[self.cells[K]], self.centroids[K],
            float(self.diameters[K]), float(self.volumes[K]),
        )

    def face(self, F: int) -> Face:
        elems = tuple(int(e) for e in self.face_elements[F] if e >= 0)
        return Face(
            tuple(int(v) for v in self.face_vertices[F]), elems, float(self.face_area[F]),
            self.face_centroid[F], self.face_normal[F], len(elems) == 1,
            self.vertices[self.face_vertices[F]],
        )

    def incidences(self):
        """Flat (element, face, sign) arrays over all element-face pairs."""
        elem = np.repeat(np.arange(self.n_elements), [len(f) for f in self.element_faces])
        return elem, np.concatenate(self.element_faces), np.concatenate(self.element_face_signs)

    def dump(self, fh) -> None:
        """Write the plain-text mesh format (header ``dim nv ne nf``)."""
        fh.write(f"{self.dim} {len(self.vertices)} {self.n_elements} {self.n_faces}\n")
        for v in self.vertices:
            fh.write(" ".join(repr(float(c)) for c in v) + "\n")
        for c in self.cells:
            fh.write(self.shape + " " + " ".join(str(int(i)) for i in c) + "\n")
        for fv, fe in zip(self.face_vertices, self.face_elements):
            adj = [int(e) for e in fe if e >= 0]
            fh.write(
                " ".join(str(int(i)) for i in fv) + " | " + " ".join(map(str, adj))
                + f" | {int(len(adj) == 1)}\n"
            )


def read_mesh(fh) -> Mesh:
    """Inverse of :meth:`Mesh.dump`; face topology is rebuilt and checked."""
    dim, nv, ne, nf = (int(t) for t in fh.readline().split())
    verts = [[float(t) for t in fh.readline().split()] for _ in range(nv)]
    shape, cells = None, []
    for _ in range(ne):
        toks = fh.readline().split()
        shape = toks[0]
        cells.append([int(t) for t in toks[1:]])
    mesh = face_topology(Mesh(np.array(verts).reshape(nv, dim), cells, shape))
    if mesh.n_faces != nf:
        raise ValueError(f"face count mismatch: file {nf}, rebuilt {mesh.n_faces}")
    return mesh


def _side_normal(pts, centroid):
    if pts.shape[1] == 2:
        t = pts[1] - pts[0]
        n = np.array([t[1], -t[0]])
    else:
        n = np.cross(pts[1] - pts[0], pts[2] - pts[0])
    n = n / np.linalg.norm(n)
    if np.dot(pts.mean(axis=0) - centroid, n) < 0:
        n = -n
    return n


def _split_sides_2d(mesh):
    """Element sides cut at every vertex lying inside them (hanging vertices)."""
    sides = _SIDES[mesh.shape]
    tree = cKDTree(mesh.vertices)
    X = mesh.vertices
    out = []
    for K, cell in enumerate(mesh.cells):
        pieces = []
        for a, b in sides:
            va, vb = cell[a], cell[b]
            pa, pb = X[va], X[vb]
            t = pb - pa
            L2 = t @ t
            cand = tree.query_ball_point((pa + pb) / 2, 0.5 * np.sqrt(L2) * (1 + 1e-9))
            inner = []
            for v in cand:
                if v in (va, vb):
                    continue
                r = X[v] - pa
                s = (r @ t) / L2
                if abs(r[0] * t[1] - r[1] * t[0]) <= 1e-12 * L2 and 1e-12 < s < 1 - 1e-12:
                    inner.append((s, v))
            chain = [va] + [v for _, v in sorted(inner)] + [vb]
            pieces.extend(zip(chain[:-1], chain[1:]))
        out.append(pieces)
    return out


def face_topology(mesh: Mesh) -> Mesh:
    """Populate face lists, adjacency and outward normals of ``mesh`` in place."""
    if mesh.dim == 2:
        element_pieces = _split_sides_2d(mesh)
    else:
        element_pieces = [[tuple(cell[list(s)]) for s in _SIDES[mesh.shape]] for cell in mesh.cells]
    index = {}
    face_vertices, face_elements = [], []
    element_faces = []
    for K, pieces in enumerate(element_pieces):
        ids = []
        for piece in pieces:
            key = tuple(sorted(int(v) for v in piece))
            f = index.get(key)
            if f is None:
                f = index[key] = len(face_vertices)
                face_vertices.append(key)
                face_elements.append([K])
            else:
                if len(face_elements[f]) >= 2 or face_elements[f][0] == K:
                    raise NonConformingMeshError(
                        f"face {key} is bounded by more than two elements (element {K})"
                    )
                face_elements[f].append(K)
            ids.append(f)
        element_faces.append(np.array(ids, dtype=int))

    fv = np.array(face_vertices, dtype=int)
    fe = np.full((len(fv), 2), -1, dtype=int)
    for f, adj in enumerate(face_elements):
        fe[f, : len(adj)] = adj
    pts = mesh.vertices[fv]
    if mesh.dim == 2:
        area = np.linalg.norm(pts[:, 1] - pts[:, 0], axis=1)
    else:
        area = 0.5 * np.linalg.norm(np.cross(pts[:, 1] - pts[:, 0], pts[:, 2] - pts[:, 0]), axis=1)
    normals = np.array([_side_normal(p, mesh.centroids[e]) for p, e in zip(pts, fe[:, 0])])

    mesh.face_vertices = fv
    mesh.face_elements = fe
    mesh.face_area = area
    mesh.face_centroid = pts.mean(axis=1)
    mesh.face_normal = normals
    mesh.element_faces = element_faces
    mesh.element_face_signs = [np.where(fe[f, 0] == K, 1.0, -1.0) for K, f in enumerate(element_faces)]
    return mesh


def _check_n(n):
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")


def build_unit_square_simplex(n: int) -> Mesh:
    """n x n grid of squares, each split along its lower-left/upper-right diagonal."""
    _check_n(n)
    g = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(g, g, indexing="xy")
    verts = np.stack([X.ravel(), Y.ravel()], axis=-1)
    cells = []
    for j in range(n):
        for i in range(n):
            v00 = j * (n + 1) + i
            v10, v01, v11 = v00 + 1, v00 + n + 1, v00 + n + 2
            cells.append((v00, v10, v11))
            cells.append((v00, v11, v01))
    return face_topology(Mesh(verts, cells, "triangle"))


def build_unit_cube_simplex(n: int) -> Mesh:
    """Kuhn triangulation: each of the n^3 cubes becomes 6 tetrahedra."""
    _check_n(n)
    g = np.linspace(0.0, 1.0, n + 1)
    Z, Y, X = np.meshgrid(g, g, g, indexing="ij")
    verts = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=-1)
    step = np.array([1, n + 1, (n + 1) ** 2])
    cells = []
    for kz in range(n):
        for ky in range(n):
            for kx in range(n):
                base = kx * step[0] + ky * step[1] + kz * step[2]
                for perm in permutations(range(3)):
                    v = [base]
                    for axis in perm:
                        v.append(v[-1] + step[axis])
                    P = verts[v]
                    if np.linalg.det((P[1:] - P[0]).T) < 0:
                        v[2], v[3] = v[3], v[2]
                    cells.append(tuple(v))
    return face_topology(Mesh(verts, cells, "tetrahedron"))


def build_ladder_mesh(n: int) -> Mesh:
    """Rectangles in n rows of height 1/n; odd rows shifted by half a cell.

    Row 0, 2, ... holds n cells of width 1/n.  Row 1, 3, ... holds n + 1 cells:
    two half cells of width 1/(2n) at the ends and n - 1 full cells between.
    """
    _check_n(n)
    if n < 2 or n % 2:
        raise ValueError(f"ladder mesh needs an even n >= 2, got {n}")
    # integer coordinates: x in units of 1/(2n), y in units of 1/n
    rows = []
    for i in range(n):
        if i % 2 == 0:
            xs = list(range(0, 2 * n + 1, 2))
        else:
            xs = [0] + list(range(1, 2 * n, 2)) + [2 * n]
        rows.append(xs)
    keys = set()
    for i, xs in enumerate(rows):
        for x in xs:
            keys.add((i, x))
            keys.add((i + 1, x))
    order = sorted(keys)
    vid = {key: j for j, key in enumerate(order)}
    verts = np.array([[x / (2 * n), y / n] for y, x in order])
    cells = []
    for i, xs in enumerate(rows):
        for x0, x1 in zip(xs[:-1], xs[1:]):
            cells.append((vid[i, x0], vid[i, x1], vid[i + 1, x1], vid[i + 1, x0]))
    return face_topology(Mesh(verts, cells, "rectangle"))


def build_mesh(family: str, dim: int, n: int) -> Mesh:
    if family == "ladder":
        if dim != 2:
            raise ValueError("ladder meshes are 2D only")
        return build_ladder_mesh(n)
    if family == "simplex":
        return build_unit_square_simplex(n) if dim == 2 else build_unit_cube_simplex(n)
    raise ValueError(f"unknown mesh family {family!r}")
