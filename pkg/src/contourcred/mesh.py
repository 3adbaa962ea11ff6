"""Planar triangulations: construction, queries and point location."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DegenerateMeshError, InputError, LocationError

__all__ = ["Triangulation", "lattice_mesh", "interpolation_matrix"]


def _cross2(u, v):
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


@dataclass(frozen=True)
class Triangulation:
    """Conforming triangulation of a planar region.

    ``vertices`` has shape (n, 2) and ``triangles`` shape (m, 3); triangle
    rows are normalized to counterclockwise orientation on construction.
    """

    vertices: np.ndarray
    triangles: np.ndarray

    def __post_init__(self):
        verts = np.ascontiguousarray(np.asarray(self.vertices, dtype=np.float64))
        tris = np.ascontiguousarray(np.asarray(self.triangles, dtype=np.int64))
        if verts.ndim != 2 or verts.shape[1] != 2:
            raise InputError("vertices must have shape (n, 2)")
        if tris.ndim != 2 or tris.shape[1] != 3:
            raise InputError("triangles must have shape (m, 3)")
        if verts.shape[0] < 3 or tris.shape[0] < 1:
            raise DegenerateMeshError("mesh needs at least one triangle")
        if not np.all(np.isfinite(verts)):
            raise InputError("vertex coordinates must be finite")
        if tris.min() < 0 or tris.max() >= verts.shape[0]:
            raise InputError("triangle vertex index out of range")
        if (tris[:, 0] == tris[:, 1]).any() or (tris[:, 1] == tris[:, 2]).any() \
                or (tris[:, 0] == tris[:, 2]).any():
            raise DegenerateMeshError("triangle repeats a vertex")
        a = verts[tris[:, 0]]
        cross = _cross2(verts[tris[:, 1]] - a, verts[tris[:, 2]] - a)
        if np.any(cross == 0.0):
            raise DegenerateMeshError("mesh contains a zero-area triangle")
        flip = cross < 0.0
        if flip.any():
            tris = tris.copy()
            tris[flip, 1], tris[flip, 2] = tris[flip, 2], tris[flip, 1]
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "triangles", tris)

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    @cached_property
    def triangle_areas(self) -> np.ndarray:
        a = self.vertices[self.triangles[:, 0]]
        b = self.vertices[self.triangles[:, 1]]
        c = self.vertices[self.triangles[:, 2]]
        return 0.5 * _cross2(b - a, c - a)

    @cached_property
    def vertex_areas(self) -> np.ndarray:
        """Lumped area per vertex: one third of each incident triangle."""
        w = np.zeros(self.n_vertices)
        third = self.triangle_areas / 3.0
        for k in range(3):
            np.add.at(w, self.triangles[:, k], third)
        return w

    @cached_property
    def edges(self) -> np.ndarray:
        """Unique undirected edges as sorted (low, high) vertex pairs."""
        t = self.triangles
        e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        e.sort(axis=1)
        return np.unique(e, axis=0)

    @cached_property
    def boundary_edges(self) -> np.ndarray:
        t = self.triangles
        e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        e.sort(axis=1)
        uniq, counts = np.unique(e, axis=0, return_counts=True)
        return uniq[counts == 1]

    @cached_property
    def longest_edge(self) -> float:
        d = self.vertices[self.edges[:, 0]] - self.vertices[self.edges[:, 1]]
        return float(np.sqrt((d * d).sum(axis=1)).max())

    @cached_property
    def bounds(self):
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return lo, hi

    @cached_property
    def _buckets(self):
        # Uniform grid over the bounding box; each cell lists the triangles
        # whose bounding boxes touch it.
        lo, hi = self.bounds
        span = np.maximum(hi - lo, 1e-300)
        ncell = max(1, int(np.sqrt(self.n_triangles)))
        cell = span / ncell
        tv = self.vertices[self.triangles]
        tlo = tv.min(axis=1)
        thi = tv.max(axis=1)
        ij_lo = np.clip(((tlo - lo) / cell).astype(np.int64), 0, ncell - 1)
        ij_hi = np.clip(((thi - lo) / cell).astype(np.int64), 0, ncell - 1)
        table: dict = {}
        for t in range(self.n_triangles):
            for i in range(ij_lo[t, 0], ij_hi[t, 0] + 1):
                for j in range(ij_lo[t, 1], ij_hi[t, 1] + 1):
                    table.setdefault((i, j), []).append(t)
        return lo, cell, ncell, table

    def barycentric(self, tri_index: int, point) -> np.ndarray:
        """Barycentric weights of ``point`` in the given triangle."""
        i, j, k = self.triangles[tri_index]
        a, b, c = self.vertices[i], self.vertices[j], self.vertices[k]
        det = _cross2(b - a, c - a)
        w0 = _cross2(b - point, c - point) / det
        w1 = _cross2(c - point, a - point) / det
        return np.array([w0, w1, 1.0 - w0 - w1])

    def containing_triangles(self, point, tol: float = 1e-12):
        """All triangles containing ``point`` with their barycentric weights.

        Points on shared edges report every incident triangle.  The tolerance
        admits weights down to ``-tol`` so hull-boundary points are found.
        """
        lo, cell, ncell, table = self._buckets
        ij = np.clip(((np.asarray(point, dtype=np.float64) - lo) / cell)
                     .astype(np.int64), 0, ncell - 1)
        hits = []
        for t in table.get((int(ij[0]), int(ij[1])), ()):
            w = self.barycentric(t, np.asarray(point, dtype=np.float64))
            if w.min() >= -tol:
                hits.append((t, w))
        return hits

    def locate(self, point, tol: float = 1e-12):
        """One containing triangle and its weights; raises when outside."""
        hits = self.containing_triangles(point, tol)
        if not hits:
            raise LocationError("point %s is outside the triangulation"
                                % (np.asarray(point).tolist(),))
        return hits[0]


def lattice_mesh(nx: int, ny: int, bounds=((0.0, 0.0), (1.0, 1.0))) -> Triangulation:
    """Regular triangulated lattice with nx-by-ny vertices.

    Each cell splits along its lower-left to upper-right diagonal.
    """
    if nx < 2 or ny < 2:
        raise InputError("lattice needs at least 2 vertices per side")
    (x0, y0), (x1, y1) = bounds
    if not (x1 > x0 and y1 > y0):
        raise InputError("lattice bounds must have positive extent")
    xs = np.linspace(x0, x1, nx)
    ys = np.linspace(y0, y1, ny)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    verts = np.column_stack([X.ravel(), Y.ravel()])
    tris = []
    for j in range(ny - 1):
        for i in range(nx - 1):
            v00 = j * nx + i
            v10 = v00 + 1
            v01 = v00 + nx
            v11 = v01 + 1
            tris.append((v00, v10, v11))
            tris.append((v00, v11, v01))
    return Triangulation(verts, np.asarray(tris, dtype=np.int64))


def interpolation_matrix(mesh: Triangulation, points) -> "scipy.sparse.csr_matrix":
    """Sparse barycentric interpolation operator from mesh vertices to points."""
    from scipy import sparse

    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != 2:
        raise InputError("points must have shape (m, 2)")
    rows, cols, vals = [], [], []
    for r, pt in enumerate(points):
        t, w = mesh.locate(pt)
        for k in range(3):
            rows.append(r)
            cols.append(int(mesh.triangles[t, k]))
            vals.append(float(w[k]))
    return sparse.csr_matrix((vals, (rows, cols)),
                             shape=(points.shape[0], mesh.n_vertices))
