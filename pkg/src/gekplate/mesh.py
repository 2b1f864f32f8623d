"""Triangle meshes with the edge topology needed by interior penalty forms.

Every triangle is stored counterclockwise. Each edge knows the two incident
triangles (plus/minus, minus = -1 on the boundary), a unit normal pointing out
of the plus triangle, and the unit tangent obtained by rotating that normal 90
degrees counterclockwise (which equals the edge direction in the plus
triangle's counterclockwise traversal). The plus triangle is always the one
with the smaller index, so the orientation of every edge quantity is
deterministic.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree


class MeshError(ValueError):
    """Raised for invalid geometry or topology."""


@dataclass(frozen=True)
class Edge:
    """Single-edge view of the mesh's edge arrays."""

    index: int
    vertices: np.ndarray  # (2,) endpoint indices, plus-side CCW order
    plus: int
    minus: int  # -1 on boundary edges
    normal: np.ndarray  # (2,) unit, outward from the plus triangle
    tangent: np.ndarray  # (2,) unit, normal rotated 90 deg CCW
    length: float

    @property
    def is_boundary(self) -> bool:
        return self.minus < 0


@dataclass
class Mesh:
    """Conforming triangle mesh of a polygonal domain.

    Attributes
    ----------
    vertices : (V, 2) float array
    triangles : (T, 3) int array, counterclockwise
    edge_vertices : (E, 2) int array, endpoints in plus-side CCW order
    edge_plus, edge_minus : (E,) int arrays (minus = -1 on the boundary)
    edge_normal, edge_tangent : (E, 2) float arrays
    edge_length : (E,) float array
    triangle_edges : (T, 3) int array, edge index opposite nothing in
        particular: entry k is the edge (v_k, v_{k+1}) of the triangle
    boundary_vertex : (V,) bool array
    h_max : max triangle diameter
    h_report : mesh parameter used in convergence tables (1/n for the
        structured family, h_max otherwise)
    grid_n : subdivision count when built by `build_structured_mesh`
    """

    vertices: np.ndarray
    triangles: np.ndarray
    edge_vertices: np.ndarray
    edge_plus: np.ndarray
    edge_minus: np.ndarray
    edge_normal: np.ndarray
    edge_tangent: np.ndarray
    edge_length: np.ndarray
    triangle_edges: np.ndarray
    boundary_vertex: np.ndarray
    tri_area: np.ndarray
    tri_diameter: np.ndarray
    tri_barycenter: np.ndarray
    h_max: float
    h_report: float
    grid_n: Optional[int] = None
    _tree: Optional[cKDTree] = field(default=None, repr=False, compare=False)

    @property
    def num_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def num_triangles(self) -> int:
        return self.triangles.shape[0]

    @property
    def num_edges(self) -> int:
        return self.edge_vertices.shape[0]

    @property
    def interior_edges(self) -> np.ndarray:
        return np.flatnonzero(self.edge_minus >= 0)

    @property
    def boundary_edges(self) -> np.ndarray:
        return np.flatnonzero(self.edge_minus < 0)

    def edge(self, i: int) -> Edge:
        return Edge(
            index=i,
            vertices=self.edge_vertices[i],
            plus=int(self.edge_plus[i]),
            minus=int(self.edge_minus[i]),
            normal=self.edge_normal[i],
            tangent=self.edge_tangent[i],
            length=float(self.edge_length[i]),
        )

    def locate(self, points: np.ndarray) -> np.ndarray:
        """Return the index of a triangle containing each point.

        Points on shared edges/vertices may report either incident triangle.
        Raises MeshError for points outside the mesh (beyond 1e-10 tolerance).
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.grid_n is not None:
            return self._locate_structured(pts)
        return self._locate_general(pts)

    def _locate_structured(self, pts: np.ndarray) -> np.ndarray:
        n = self.grid_n
        ij = np.clip(np.floor(pts * n).astype(int), 0, n - 1)
        local = pts * n - ij
        upper = local[:, 1] > local[:, 0]
        tri = 2 * (ij[:, 1] * n + ij[:, 0]) + upper.astype(int)
        bad = (pts < -1e-10).any(axis=1) | (pts > 1 + 1e-10).any(axis=1)
        if bad.any():
            raise MeshError(f"{bad.sum()} point(s) outside the unit square")
        return tri

    def _locate_general(self, pts: np.ndarray) -> np.ndarray:
        if self._tree is None:
            self._tree = cKDTree(self.tri_barycenter)
        k = min(12, self.num_triangles)
        _, cand = self._tree.query(pts, k=k)
        cand = np.atleast_2d(cand)
        out = np.full(pts.shape[0], -1, dtype=int)
        corners = self.vertices[self.triangles]
        for col in range(cand.shape[1]):
            todo = out < 0
            if not todo.any():
                break
            t = cand[todo, col]
            lam = _barycentric(corners[t], pts[todo])
            inside = (lam > -1e-10).all(axis=1)
            idx = np.flatnonzero(todo)
            out[idx[inside]] = t[inside]
        missing = np.flatnonzero(out < 0)
        for i in missing:  # rare: fall back to a full scan
            lam = _barycentric(corners, pts[i][None, :])
            hits = np.flatnonzero((lam > -1e-10).all(axis=1))
            if hits.size == 0:
                raise MeshError(f"point {pts[i]} is outside the mesh")
            out[i] = hits[0]
        return out


def _barycentric(corners: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Barycentric coordinates of pts w.r.t. triangles (broadcasts leading dims)."""
    a, b, c = corners[..., 0, :], corners[..., 1, :], corners[..., 2, :]
    det = (b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1]) - (
        c[..., 0] - a[..., 0]
    ) * (b[..., 1] - a[..., 1])
    dx = pts[..., 0] - a[..., 0]
    dy = pts[..., 1] - a[..., 1]
    l1 = ((c[..., 1] - a[..., 1]) * dx - (c[..., 0] - a[..., 0]) * dy) / det
    l2 = (-(b[..., 1] - a[..., 1]) * dx + (b[..., 0] - a[..., 0]) * dy) / det
    return np.stack([1.0 - l1 - l2, l1, l2], axis=-1)


def from_arrays(
    vertices: np.ndarray,
    triangles: np.ndarray,
    gamma: float = 10.0,
    h_report: Optional[float] = None,
    grid_n: Optional[int] = None,
) -> Mesh:
    """Build a validated mesh with full edge topology from raw arrays.

    Parameters
    ----------
    vertices : (V, 2) float array
    triangles : (T, 3) int array, counterclockwise orientation required
    gamma : shape-regularity bound; raises MeshError if any triangle has
        diameter/inradius > gamma
    h_report : value reported as the mesh parameter h (defaults to h_max)
    grid_n : structured subdivision count, enables O(1) point location

    Raises
    ------
    MeshError
        On clockwise/degenerate triangles, non-manifold edges, or
        shape-regularity violations.
    """
    vertices = np.ascontiguousarray(vertices, dtype=float)
    triangles = np.ascontiguousarray(triangles, dtype=np.int64)
    if vertices.ndim != 2 or vertices.shape[1] != 2:
        raise MeshError(f"vertices must be (V, 2), got {vertices.shape}")
    if triangles.ndim != 2 or triangles.shape[1] != 3:
        raise MeshError(f"triangles must be (T, 3), got {triangles.shape}")
    if triangles.min(initial=0) < 0 or triangles.max(initial=-1) >= len(vertices):
        raise MeshError("triangle vertex index out of range")

    corners = vertices[triangles]
    e1 = corners[:, 1] - corners[:, 0]
    e2 = corners[:, 2] - corners[:, 0]
    signed = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    bad = np.flatnonzero(signed <= 0)
    if bad.size:
        raise MeshError(
            f"triangle(s) {bad[:10].tolist()} are clockwise or degenerate "
            "(signed area <= 0)"
        )
    area = signed
    sides = np.stack(
        [
            np.linalg.norm(corners[:, 1] - corners[:, 0], axis=1),
            np.linalg.norm(corners[:, 2] - corners[:, 1], axis=1),
            np.linalg.norm(corners[:, 0] - corners[:, 2], axis=1),
        ],
        axis=1,
    )
    diameter = sides.max(axis=1)
    inradius = 2.0 * area / sides.sum(axis=1)
    ratio = diameter / inradius
    if (ratio > gamma).any():
        worst = int(np.argmax(ratio))
        raise MeshError(
            f"shape regularity violated: triangle {worst} has "
            f"diameter/inradius = {ratio[worst]:.3g} > {gamma}"
        )

    T = len(triangles)
    edge_map = {}
    ev, ep, em = [], [], []
    triangle_edges = np.empty((T, 3), dtype=np.int64)
    for t in range(T):
        tri = triangles[t]
        for k in range(3):
            a, b = int(tri[k]), int(tri[(k + 1) % 3])
            key = (a, b) if a < b else (b, a)
            e = edge_map.get(key)
            if e is None:
                e = len(ev)
                edge_map[key] = e
                ev.append((a, b))  # plus-side CCW order
                ep.append(t)
                em.append(-1)
            else:
                if em[e] != -1:
                    raise MeshError(
                        f"edge {key} is shared by more than two triangles"
                    )
                em[e] = t
            triangle_edges[t, k] = e

    edge_vertices = np.array(ev, dtype=np.int64)
    edge_plus = np.array(ep, dtype=np.int64)
    edge_minus = np.array(em, dtype=np.int64)
    d = vertices[edge_vertices[:, 1]] - vertices[edge_vertices[:, 0]]
    length = np.linalg.norm(d, axis=1)
    tangent = d / length[:, None]
    # outward normal of the CCW plus triangle lies to the right of the
    # traversal direction; equivalently tangent = normal rotated 90 deg CCW
    normal = np.column_stack([tangent[:, 1], -tangent[:, 0]])

    boundary_vertex = np.zeros(len(vertices), dtype=bool)
    boundary_vertex[edge_vertices[edge_minus < 0].ravel()] = True

    h_max = float(diameter.max())
    return Mesh(
        vertices=vertices,
        triangles=triangles,
        edge_vertices=edge_vertices,
        edge_plus=edge_plus,
        edge_minus=edge_minus,
        edge_normal=normal,
        edge_tangent=tangent,
        edge_length=length,
        triangle_edges=triangle_edges,
        boundary_vertex=boundary_vertex,
        tri_area=area,
        tri_diameter=diameter,
        tri_barycenter=corners.mean(axis=1),
        h_max=h_max,
        h_report=h_max if h_report is None else float(h_report),
        grid_n=grid_n,
    )


def build_structured_mesh(n: int, gamma: float = 10.0) -> Mesh:
    """Uniform n x n subdivision of the unit square, each cell split along the
    lower-left-to-upper-right diagonal. (n+1)^2 vertices, 2 n^2 triangles,
    every diameter = sqrt(2)/n; the reported mesh parameter is h = 1/n."""
    if n < 1:
        raise MeshError(f"n must be >= 1, got {n}")
    side = np.arange(n + 1) / n
    X, Y = np.meshgrid(side, side, indexing="xy")
    vertices = np.column_stack([X.ravel(), Y.ravel()])  # index = j*(n+1) + i

    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="xy")
    v00 = (j * (n + 1) + i).ravel()
    v10 = v00 + 1
    v01 = v00 + (n + 1)
    v11 = v01 + 1
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    triangles = np.empty((2 * n * n, 3), dtype=np.int64)
    triangles[0::2] = lower
    triangles[1::2] = upper
    return from_arrays(
        vertices, triangles, gamma=gamma, h_report=1.0 / n, grid_n=n
    )


def delaunay_mesh(points: np.ndarray, gamma: float = 30.0) -> Mesh:
    """Delaunay triangulation of a point cloud, orientation-corrected."""
    from scipy.spatial import Delaunay

    points = np.asarray(points, dtype=float)
    tri = Delaunay(points).simplices.astype(np.int64)
    corners = points[tri]
    e1 = corners[:, 1] - corners[:, 0]
    e2 = corners[:, 2] - corners[:, 0]
    cw = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0] < 0
    tri[cw] = tri[cw][:, [0, 2, 1]]
    return from_arrays(points, tri, gamma=gamma)


def read_mesh(path, gamma: float = 10.0) -> Mesh:
    """Read the plain-text format: a "V T" header, V lines "x y", T lines
    "i j k" (0-based, counterclockwise). Lines starting with # are skipped."""
    with open(path) as fh:
        tokens = []
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                tokens.extend(line.split())
    if len(tokens) < 2:
        raise MeshError(f"{path}: missing header")
    nv, nt = int(tokens[0]), int(tokens[1])
    need = 2 + 2 * nv + 3 * nt
    if len(tokens) != need:
        raise MeshError(
            f"{path}: expected {need} tokens for {nv} vertices / "
            f"{nt} triangles, got {len(tokens)}"
        )
    vals = tokens[2 : 2 + 2 * nv]
    vertices = np.array(vals, dtype=float).reshape(nv, 2)
    tris = np.array(tokens[2 + 2 * nv :], dtype=np.int64).reshape(nt, 3)
    return from_arrays(vertices, tris, gamma=gamma)


def write_mesh(mesh: Mesh, path) -> None:
    """Write the plain-text format read by `read_mesh`."""
    with open(path, "w") as fh:
        fh.write(f"{mesh.num_vertices} {mesh.num_triangles}\n")
        for x, y in mesh.vertices:
            fh.write(f"{float(x)!r} {float(y)!r}\n")
        for a, b, c in mesh.triangles:
            fh.write(f"{a} {b} {c}\n")
