"""Interpolation of the contour function over a mesh and credible-set extraction.

Node values only carry meaning inside level sets, so triangles whose
vertices disagree on the assigned set are pruned before interpolation.
Three rules fill the surviving triangles: Step takes the triangle minimum
(conservative), Linear blends barycentrically, Log blends on logarithms.
Step and Log cannot represent a region boundary inside a triangle with a
zero vertex, so such needle triangles are eliminated for those methods.

Credible sets at level alpha are the regions where the interpolated
function reaches 1 - alpha; the boundary is polygonal because all three
rules have straight level curves inside a triangle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .contours import LevelAssignment
from .errors import ContractViolationError, InputError
from .mesh import Triangulation

__all__ = [
    "InterpolatedField",
    "CredibleSet",
    "TRI_OUTSIDE",
    "TRI_INSIDE",
    "TRI_CROSSED",
    "TRI_EXCLUDED",
    "prune_triangles",
    "eliminate_needles",
    "interpolate_in_triangle",
    "extract_credible_set",
    "subdivide",
]

_METHODS = ("step", "linear", "log")
_EDGE_TOL = 1e-12

TRI_OUTSIDE, TRI_INSIDE, TRI_CROSSED, TRI_EXCLUDED = 0, 1, 2, 3


def prune_triangles(mesh: Triangulation, assignment: LevelAssignment) -> np.ndarray:
    """Mask of triangles whose vertices span more than one level set."""
    if assignment.n != mesh.n_vertices:
        raise InputError("assignment length does not match the mesh")
    k = assignment.k[mesh.triangles]
    return (k[:, 0] != k[:, 1]) | (k[:, 1] != k[:, 2])


def eliminate_needles(mesh: Triangulation, values: np.ndarray,
                      method: str) -> np.ndarray:
    """Mask of triangles with a zero vertex, for methods that need one.

    Step and Log collapse to zero on any triangle touching a zero vertex,
    which would erase the region boundary there; Linear keeps them.
    """
    if method not in _METHODS:
        raise InputError("unknown interpolation method %r" % method)
    if method == "linear":
        return np.zeros(mesh.n_triangles, dtype=bool)
    v = values[mesh.triangles]
    return (v == 0.0).any(axis=1)


@dataclass(frozen=True)
class InterpolatedField:
    """Per-vertex values plus the rule that extends them across triangles."""

    mesh: Triangulation
    values: np.ndarray
    method: str
    excluded: np.ndarray

    def __post_init__(self):
        if self.method not in _METHODS:
            raise InputError("unknown interpolation method %r" % self.method)
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != (self.mesh.n_vertices,):
            raise InputError("values must have one entry per vertex")
        if np.any(~np.isfinite(vals)) or vals.min() < 0.0 or vals.max() > 1.0:
            raise InputError("values must lie in [0, 1]")
        exc = np.asarray(self.excluded, dtype=bool)
        if exc.shape != (self.mesh.n_triangles,):
            raise InputError("excluded mask must have one entry per triangle")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "excluded", exc)

    @classmethod
    def build(cls, mesh: Triangulation, values, method: str,
              assignment: Optional[LevelAssignment] = None) -> "InterpolatedField":
        """Standard pipeline: prune set-crossing triangles, then needles."""
        values = np.asarray(values, dtype=np.float64)
        excluded = np.zeros(mesh.n_triangles, dtype=bool)
        if assignment is not None:
            excluded |= prune_triangles(mesh, assignment)
        excluded |= eliminate_needles(mesh, values, method)
        return cls(mesh=mesh, values=values, method=method, excluded=excluded)

    def triangle_values(self, t: int) -> np.ndarray:
        return self.values[self.mesh.triangles[t]]

    def evaluate_hits(self, hits) -> float:
        """Largest value over containing triangles; NaN when none survives."""
        best = math.nan
        for t, w in hits:
            if self.excluded[t]:
                continue
            v = interpolate_in_triangle(self, int(t), w)
            if not (v <= best):
                best = v
        return best

    def evaluate(self, points) -> np.ndarray:
        """Union evaluation at arbitrary points: max across incident triangles.

        Points covered only by excluded triangles (or outside the hull)
        return NaN, meaning the field is undefined there.
        """
        points = np.asarray(points, dtype=np.float64)
        out = np.empty(points.shape[0])
        for i, pt in enumerate(points):
            out[i] = self.evaluate_hits(self.mesh.containing_triangles(pt))
        return out


def interpolate_in_triangle(field: InterpolatedField, t: int, w) -> float:
    """Apply the field's rule at barycentric coordinates w of triangle t."""
    if field.excluded[t]:
        raise ContractViolationError("triangle %d is excluded from interpolation" % t)
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (3,) or np.any(w < -1e-9) or abs(w.sum() - 1.0) > 1e-9:
        raise InputError("barycentric weights must be nonnegative and sum to 1")
    v = field.triangle_values(t)
    if field.method == "step":
        return float(v.min())
    if field.method == "linear":
        return float(np.dot(w, v))
    acc = 0.0
    for k in range(3):
        if w[k] > 0.0:
            if v[k] <= 0.0:
                raise ContractViolationError(
                    "log interpolation hit a zero vertex; needle elimination "
                    "was not applied")
            acc += w[k] * math.log(v[k])
    return float(min(math.exp(acc), 1.0))


@dataclass(frozen=True)
class CredibleSet:
    """Region where the interpolated contour function reaches 1 - alpha.

    ``triangle_class`` codes each triangle 0 = outside, 1 = inside,
    2 = crossed, 3 = excluded.  ``segments`` are the interior boundary
    pieces, ``boundary_sections`` the parts of the hull boundary inside the
    region, and ``polygons`` closed rings covering the region itself.
    """

    alpha: float
    threshold: float
    method: str
    triangle_class: np.ndarray
    segments: Tuple[Tuple[Tuple[float, float], Tuple[float, float]], ...]
    boundary_sections: Tuple[Tuple[Tuple[float, float], Tuple[float, float]], ...]
    polygons: Tuple[Tuple[Tuple[float, float], ...], ...]
    vertex_inside: np.ndarray
    area: float


def _edge_crossing(pa, pb, ga: float, gb: float, gthr: float):
    t = (gthr - ga) / (gb - ga)
    t = min(max(t, 0.0), 1.0)
    return (pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1]))


def _clip_ring(pts, gs, gthr: float, tol: float):
    """Part of the triangle where the (affine) value function is >= gthr."""
    ring = []
    for i in range(3):
        j = (i + 1) % 3
        ina = gs[i] >= gthr - tol
        inb = gs[j] >= gthr - tol
        if ina:
            ring.append((float(pts[i][0]), float(pts[i][1])))
        if ina != inb:
            ring.append(_edge_crossing(pts[i], pts[j], gs[i], gs[j], gthr))
    return ring


def _ring_area(ring) -> float:
    acc = 0.0
    for i in range(len(ring)):
        x0, y0 = ring[i]
        x1, y1 = ring[(i + 1) % len(ring)]
        acc += x0 * y1 - x1 * y0
    return 0.5 * acc


def extract_credible_set(field: InterpolatedField, alpha: float) -> CredibleSet:
    """Polygonal credible region at level alpha, closed at the boundary.

    Vertices with value exactly 1 - alpha count as inside (tolerance 1e-12).
    Level curves of every rule are straight lines within a triangle, so the
    region restricted to a triangle is a polygon clip.
    """
    if not 0.0 < alpha <= 1.0:
        raise InputError("alpha must lie in (0, 1]")
    thr = 1.0 - alpha
    mesh = field.mesh
    vals = field.values
    use_log = field.method == "log" and thr > 0.0
    if use_log:
        with np.errstate(divide="ignore"):
            gvals = np.where(vals > 0.0, np.log(np.maximum(vals, 1e-300)), -np.inf)
        gthr = math.log(thr)
        tol = _EDGE_TOL / max(thr, _EDGE_TOL)
    else:
        gvals = vals
        gthr = thr
        tol = _EDGE_TOL
    boundary = {tuple(sorted(e)) for e in mesh.boundary_edges.tolist()}
    classes = np.full(mesh.n_triangles, TRI_OUTSIDE, dtype=np.int8)
    classes[field.excluded] = TRI_EXCLUDED
    segments: List = []
    sections: List = []
    polygons: List = []
    area = 0.0
    diam = mesh.longest_edge
    for t in range(mesh.n_triangles):
        if field.excluded[t]:
            continue
        tri = mesh.triangles[t]
        pts = mesh.vertices[tri]
        if field.method == "step":
            gs = np.full(3, gvals[tri].min())
        else:
            gs = gvals[tri]
        flags = gs >= gthr - tol
        n_in = int(flags.sum())
        if n_in == 3:
            classes[t] = TRI_INSIDE
            ring = [(float(p[0]), float(p[1])) for p in pts]
            polygons.append(tuple(ring))
            area += _ring_area(ring)
            for i in range(3):
                j = (i + 1) % 3
                key = (min(tri[i], tri[j]), max(tri[i], tri[j]))
                if key in boundary:
                    sections.append(((float(pts[i][0]), float(pts[i][1])),
                                     (float(pts[j][0]), float(pts[j][1]))))
            continue
        if n_in == 0:
            classes[t] = TRI_OUTSIDE
            continue
        classes[t] = TRI_CROSSED
        crossings = []
        for i in range(3):
            j = (i + 1) % 3
            if flags[i] != flags[j]:
                crossings.append(_edge_crossing(pts[i], pts[j], gs[i], gs[j], gthr))
            key = (min(tri[i], tri[j]), max(tri[i], tri[j]))
            if key in boundary:
                if flags[i] and flags[j]:
                    sections.append(((float(pts[i][0]), float(pts[i][1])),
                                     (float(pts[j][0]), float(pts[j][1]))))
                elif flags[i] or flags[j]:
                    cp = _edge_crossing(pts[i], pts[j], gs[i], gs[j], gthr)
                    inside_pt = pts[i] if flags[i] else pts[j]
                    sections.append(((float(inside_pt[0]), float(inside_pt[1])), cp))
        if len(crossings) == 2:
            (x0, y0), (x1, y1) = crossings
            if math.hypot(x1 - x0, y1 - y0) > 1e-12 * max(diam, 1.0):
                segments.append(((x0, y0), (x1, y1)))
        ring = _clip_ring(pts, gs, gthr, tol)
        if len(ring) >= 3:
            polygons.append(tuple(ring))
            area += _ring_area(ring)
    vertex_inside = vals >= thr - _EDGE_TOL
    return CredibleSet(alpha=alpha, threshold=thr, method=field.method,
                       triangle_class=classes,
                       segments=tuple(segments),
                       boundary_sections=tuple(sections),
                       polygons=tuple(polygons),
                       vertex_inside=vertex_inside,
                       area=float(area))


def _midpoint_value(v: np.ndarray, i: int, j: int, method: str) -> float:
    if method == "step":
        return float(v.min())
    if method == "linear":
        return 0.5 * (float(v[i]) + float(v[j]))
    if v[i] <= 0.0 or v[j] <= 0.0:
        raise ContractViolationError(
            "log subdivision hit a zero vertex; needle elimination "
            "was not applied")
    return math.exp(0.5 * (math.log(float(v[i])) + math.log(float(v[j]))))


def subdivide(field: InterpolatedField, depth: int) -> InterpolatedField:
    """Refine each surviving triangle 4-ways ``depth`` times.

    New midpoint vertices take the field's own rule (so the refined linear
    mesh converges to the rule's surface), and the result is tagged linear.
    Vertices are duplicated per parent triangle, which keeps Step's
    discontinuities representable; original vertex values are unchanged.
    Depth 0 returns the field as is.
    """
    if depth < 0:
        raise InputError("depth must be nonnegative")
    if depth == 0:
        return field
    mesh = field.mesh
    out_vertices: List[np.ndarray] = []
    out_values: List[float] = []
    out_triangles: List[Tuple[int, int, int]] = []
    offset = 0
    for t in range(mesh.n_triangles):
        if field.excluded[t]:
            continue
        tri = mesh.triangles[t]
        verts = [mesh.vertices[v].copy() for v in tri]
        vals = [float(field.values[v]) for v in tri]
        tris = [(0, 1, 2)]
        for _ in range(depth):
            cache: Dict[Tuple[int, int], int] = {}
            new_tris: List[Tuple[int, int, int]] = []
            for (a, b, c) in tris:
                tv = np.array([vals[a], vals[b], vals[c]])
                mids = []
                for (i, j, ii, jj) in ((a, b, 0, 1), (b, c, 1, 2), (c, a, 2, 0)):
                    key = (min(i, j), max(i, j))
                    if key not in cache:
                        cache[key] = len(verts)
                        verts.append(0.5 * (verts[i] + verts[j]))
                        vals.append(min(_midpoint_value(tv, ii, jj, field.method), 1.0))
                    mids.append(cache[key])
                mab, mbc, mca = mids
                new_tris.extend([(a, mab, mca), (mab, b, mbc),
                                 (mca, mbc, c), (mab, mbc, mca)])
            tris = new_tris
        out_vertices.extend(verts)
        out_values.extend(vals)
        out_triangles.extend((a + offset, b + offset, c + offset)
                             for (a, b, c) in tris)
        offset += len(verts)
    if not out_triangles:
        raise InputError("no surviving triangle to subdivide")
    new_mesh = Triangulation(np.asarray(out_vertices),
                             np.asarray(out_triangles, dtype=np.int64))
    return InterpolatedField(mesh=new_mesh,
                             values=np.asarray(out_values),
                             method="linear",
                             excluded=np.zeros(new_mesh.n_triangles, dtype=bool))
