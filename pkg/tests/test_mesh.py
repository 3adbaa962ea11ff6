import numpy as np
import pytest

from contourcred.errors import DegenerateMeshError, InputError, LocationError
from contourcred.mesh import Triangulation, interpolation_matrix, lattice_mesh

UNIT = Triangulation(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
                     np.array([[0, 1, 2]]))


def test_lattice_counts_and_area():
    mesh = lattice_mesh(4, 3, bounds=((0.0, 0.0), (3.0, 2.0)))
    assert mesh.n_vertices == 12
    assert mesh.n_triangles == 2 * 3 * 2
    assert np.isclose(mesh.triangle_areas.sum(), 6.0)
    # lumped vertex areas partition the same total
    assert np.isclose(mesh.vertex_areas.sum(), 6.0)
    assert np.all(mesh.vertex_areas > 0)


def test_lattice_edges_and_boundary():
    mesh = lattice_mesh(3, 3)
    # 2x2 cells: 12 axis edges + 4 diagonals
    assert mesh.edges.shape == (16, 2)
    assert mesh.boundary_edges.shape == (8, 2)
    assert np.isclose(mesh.longest_edge, np.hypot(0.5, 0.5))


def test_bounds():
    mesh = lattice_mesh(3, 4, bounds=((1.0, -2.0), (4.0, 0.0)))
    lo, hi = mesh.bounds
    assert np.allclose(lo, [1.0, -2.0])
    assert np.allclose(hi, [4.0, 0.0])


def test_orientation_normalized_to_ccw():
    flipped = Triangulation(UNIT.vertices, np.array([[0, 2, 1]]))
    assert np.isclose(flipped.triangle_areas[0], 0.5)
    a, b, c = flipped.triangles[0]
    va, vb, vc = flipped.vertices[[a, b, c]]
    cross = (vb[0] - va[0]) * (vc[1] - va[1]) - (vb[1] - va[1]) * (vc[0] - va[0])
    assert cross > 0


def test_degenerate_meshes_rejected():
    with pytest.raises(DegenerateMeshError):
        Triangulation(UNIT.vertices, np.array([[0, 0, 1]]))
    collinear = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    with pytest.raises(DegenerateMeshError):
        Triangulation(collinear, np.array([[0, 1, 2]]))
    with pytest.raises(DegenerateMeshError):
        Triangulation(UNIT.vertices, np.empty((0, 3), dtype=np.int64))
    with pytest.raises(InputError):
        Triangulation(UNIT.vertices, np.array([[0, 1, 3]]))
    bad = UNIT.vertices.copy()
    bad[0, 0] = np.nan
    with pytest.raises(InputError):
        Triangulation(bad, UNIT.triangles)


def test_lattice_validation():
    with pytest.raises(InputError):
        lattice_mesh(1, 3)
    with pytest.raises(InputError):
        lattice_mesh(3, 3, bounds=((0.0, 0.0), (0.0, 1.0)))


def test_barycentric_reproduces_point():
    rng = np.random.default_rng(10)
    mesh = lattice_mesh(5, 5)
    for _ in range(50):
        t = int(rng.integers(mesh.n_triangles))
        w = rng.dirichlet(np.ones(3))
        pt = w @ mesh.vertices[mesh.triangles[t]]
        wb = mesh.barycentric(t, pt)
        assert np.allclose(wb, w, atol=1e-12)
        assert np.isclose(wb.sum(), 1.0)


def test_locate_interior_edge_vertex():
    mesh = lattice_mesh(3, 3)
    t, w = mesh.locate([0.1, 0.05])
    assert np.all(w >= -1e-12)
    pt = w @ mesh.vertices[mesh.triangles[t]]
    assert np.allclose(pt, [0.1, 0.05])
    # a point on an interior edge belongs to two triangles
    hits = mesh.containing_triangles([0.25, 0.25])
    assert len(hits) == 2
    # a shared vertex belongs to all incident triangles
    hits = mesh.containing_triangles([0.5, 0.5])
    assert len(hits) >= 3


def test_locate_outside_raises():
    mesh = lattice_mesh(3, 3)
    with pytest.raises(LocationError):
        mesh.locate([2.0, 2.0])
    with pytest.raises(LocationError):
        mesh.locate([-0.2, 0.5])


def test_interpolation_matrix_reproduces_linear_fields():
    mesh = lattice_mesh(6, 6, bounds=((0.0, 0.0), (2.0, 2.0)))
    rng = np.random.default_rng(11)
    pts = rng.uniform(0.0, 2.0, size=(40, 2))
    A = interpolation_matrix(mesh, pts)
    assert np.allclose(np.asarray(A.sum(axis=1)).ravel(), 1.0)
    # piecewise linear interpolation is exact on affine functions
    f = 3.0 * mesh.vertices[:, 0] - 0.5 * mesh.vertices[:, 1] + 2.0
    expect = 3.0 * pts[:, 0] - 0.5 * pts[:, 1] + 2.0
    assert np.allclose(A @ f, expect, atol=1e-12)


def test_interpolation_matrix_rejects_outside_points():
    mesh = lattice_mesh(3, 3)
    with pytest.raises(LocationError):
        interpolation_matrix(mesh, np.array([[3.0, 3.0]]))
