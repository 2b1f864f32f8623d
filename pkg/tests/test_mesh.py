"""Mesh topology, geometry conventions, point location, and file IO."""

import numpy as np
import pytest

from gekplate.mesh import (
    MeshError,
    build_structured_mesh,
    delaunay_mesh,
    from_arrays,
    read_mesh,
    write_mesh,
)


def test_structured_counts():
    for n, V, T, E in ((1, 4, 2, 5), (2, 9, 8, 16), (4, 25, 32, 56)):
        mesh = build_structured_mesh(n)
        assert mesh.num_vertices == V
        assert mesh.num_triangles == T
        assert mesh.num_edges == E
        # Euler characteristic of a disk: V - E + T = 1
        assert V - E + T == 1
        assert mesh.interior_edges.size + mesh.boundary_edges.size == E
        assert mesh.boundary_vertex.sum() == 4 * n
        assert abs(mesh.h_report - 1.0 / n) < 1e-15
        assert abs(mesh.h_max - np.sqrt(2.0) / n) < 1e-14
        assert np.allclose(mesh.tri_area, 0.5 / n**2, atol=1e-15)


def test_triangles_counterclockwise():
    mesh = build_structured_mesh(3)
    c = mesh.vertices[mesh.triangles]
    e1 = c[:, 1] - c[:, 0]
    e2 = c[:, 2] - c[:, 0]
    assert (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0] > 0).all()


def test_edge_topology_and_orientation():
    mesh = build_structured_mesh(3)
    for i in range(mesh.num_edges):
        e = mesh.edge(i)
        a, b = mesh.vertices[e.vertices]
        h = np.linalg.norm(b - a)
        assert abs(e.length - h) < 1e-14
        assert abs(np.linalg.norm(e.tangent) - 1.0) < 1e-14
        assert abs(np.linalg.norm(e.normal) - 1.0) < 1e-14
        assert abs(e.normal @ e.tangent) < 1e-14
        assert np.allclose(e.tangent, (b - a) / h, atol=1e-14)
        # normal points out of the plus triangle
        mid = 0.5 * (a + b)
        to_plus = mesh.tri_barycenter[e.plus] - mid
        assert e.normal @ to_plus < 0
        # edge endpoints are vertices of the plus triangle
        plus_verts = set(mesh.triangles[e.plus].tolist())
        assert set(e.vertices.tolist()) <= plus_verts
        if e.minus >= 0:
            minus_verts = set(mesh.triangles[e.minus].tolist())
            assert set(e.vertices.tolist()) <= minus_verts
            assert e.normal @ (mesh.tri_barycenter[e.minus] - mid) > 0
        else:
            # boundary edges live on the unit-square boundary
            on = np.isclose(mid, 0.0) | np.isclose(mid, 1.0)
            assert on.any()


def test_triangle_edges_index_back():
    mesh = build_structured_mesh(2)
    for t in range(mesh.num_triangles):
        tri = mesh.triangles[t]
        for k in range(3):
            e = mesh.triangle_edges[t, k]
            pair = {int(tri[k]), int(tri[(k + 1) % 3])}
            assert set(mesh.edge_vertices[e].tolist()) == pair
            assert t in (mesh.edge_plus[e], mesh.edge_minus[e])


def test_locate_structured_and_general():
    rng = np.random.default_rng(3)
    pts = rng.uniform(0.01, 0.99, size=(200, 2))
    for mesh in (build_structured_mesh(5), delaunay_mesh(_cloud(), gamma=200)):
        tri = mesh.locate(pts)
        corners = mesh.vertices[mesh.triangles[tri]]
        # barycentric coordinates of each point in its reported triangle
        v0 = corners[:, 0]
        d = pts - v0
        e1 = corners[:, 1] - v0
        e2 = corners[:, 2] - v0
        det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        lam1 = (d[:, 0] * e2[:, 1] - d[:, 1] * e2[:, 0]) / det
        lam2 = (e1[:, 0] * d[:, 1] - e1[:, 1] * d[:, 0]) / det
        assert (lam1 > -1e-10).all() and (lam2 > -1e-10).all()
        assert (lam1 + lam2 < 1 + 1e-10).all()
    with pytest.raises(MeshError):
        build_structured_mesh(2).locate(np.array([[1.5, 0.5]]))


def _cloud():
    rng = np.random.default_rng(11)
    inner = rng.uniform(0, 1, size=(40, 2))
    edge = np.linspace(0, 1, 6)
    ring = [(x, 0.0) for x in edge] + [(x, 1.0) for x in edge]
    ring += [(0.0, y) for y in edge[1:-1]] + [(1.0, y) for y in edge[1:-1]]
    return np.vstack([inner, np.array(ring)])


def test_roundtrip_io(tmp_path):
    mesh = build_structured_mesh(3)
    path = tmp_path / "square.mesh"
    write_mesh(mesh, path)
    back = read_mesh(path)
    assert np.array_equal(back.vertices, mesh.vertices)
    assert np.array_equal(back.triangles, mesh.triangles)
    assert np.array_equal(back.edge_vertices, mesh.edge_vertices)


def test_read_mesh_errors(tmp_path):
    p = tmp_path / "bad.mesh"
    p.write_text("")
    with pytest.raises(MeshError):
        read_mesh(p)
    p.write_text("2 1\n0 0\n1 0\n")  # missing triangle tokens
    with pytest.raises(MeshError):
        read_mesh(p)
    p.write_text("# comment only\n3 1\n0 0\n1 0\n0 1\n0 1 2\n")
    mesh = read_mesh(p)
    assert mesh.num_triangles == 1


def test_from_arrays_rejects_bad_input():
    v = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    with pytest.raises(MeshError):  # clockwise
        from_arrays(v, np.array([[0, 2, 1]]))
    with pytest.raises(MeshError):  # index out of range
        from_arrays(v, np.array([[0, 1, 9]]))
    with pytest.raises(MeshError):  # degenerate (zero area)
        from_arrays(v, np.array([[0, 1, 1]]))
    tris = np.array([[0, 1, 2], [0, 1, 3], [1, 0, 3]])
    with pytest.raises(MeshError):  # edge (0,1) shared three times
        from_arrays(
            np.array([[0.0, 0.0], [1.0, 0.0], [0.5, 1.0], [0.5, -1.0]]), tris
        )
    needle = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, 0.01]])
    with pytest.raises(MeshError):  # shape regularity
        from_arrays(needle, np.array([[0, 1, 2]]), gamma=10.0)
    from_arrays(needle, np.array([[0, 1, 2]]), gamma=1000.0)  # relaxed bound


def test_structured_rejects_nonpositive_n():
    with pytest.raises(MeshError):
        build_structured_mesh(0)
