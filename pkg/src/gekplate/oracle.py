"""Slow reference implementations used only by the test suite.

`brute_force_forms` rebuilds the bilinear forms triangle by triangle and edge
by edge with dense matrices, its own shape-function construction (global
unscaled monomials, `np.linalg.solve` against the interpolation conditions),
its own edge adjacency, and quadrature-free volume integration where the
integrand degree permits. It shares nothing with `assembly` except the global
degree-of-freedom numbering contract, so agreement is meaningful evidence.

`fd_derivative_check` and `central_difference` validate analytic derivative
tables against finite differences.
"""

import math

import numpy as np
from scipy.special import roots_legendre

from .mesh import Mesh

_EXP = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (3, 0), (2, 1), (1, 2), (0, 3)]
_HESS = [(2, 0), (1, 1), (0, 2)]
_THIRD = [(3, 0), (2, 1), (1, 2), (0, 3)]
_HESS_MULT = (1.0, 2.0, 1.0)
_THIRD_MULT = (1.0, 3.0, 3.0, 1.0)


def _mono(x, y, ax, ay):
    """Row of d^(ax+ay)/dx^ax dy^ay applied to the ten cubic monomials."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = np.zeros(x.shape + (10,))
    for j, (p, q) in enumerate(_EXP):
        if p < ax or q < ay:
            continue
        c = math.factorial(p) // math.factorial(p - ax)
        c *= math.factorial(q) // math.factorial(q - ay)
        out[..., j] = c * x ** (p - ax) * y ** (q - ay)
    return out


def _shape_coefficients(corners):
    """Columns are monomial coefficients of the ten Hermite shape functions.

    Local order: (value, dx, dy) per vertex, then the barycenter value.
    """
    V = np.zeros((10, 10))
    for k in range(3):
        x, y = corners[k]
        V[3 * k] = _mono(x, y, 0, 0)
        V[3 * k + 1] = _mono(x, y, 1, 0)
        V[3 * k + 2] = _mono(x, y, 0, 1)
    bx, by = corners.mean(axis=0)
    V[9] = _mono(bx, by, 0, 0)
    return np.linalg.solve(V, np.eye(10))


def _triangle_area(corners):
    d1 = corners[1] - corners[0]
    d2 = corners[2] - corners[0]
    return 0.5 * abs(d1[0] * d2[1] - d1[1] * d2[0])


def _own_edges(mesh: Mesh):
    """Rebuild edge adjacency from the triangle list, ignoring mesh.edge_*."""
    incident: dict[tuple[int, int], list[int]] = {}
    for t, tri in enumerate(mesh.triangles):
        for k in range(3):
            key = tuple(sorted((int(tri[k]), int(tri[(k + 1) % 3]))))
            incident.setdefault(key, []).append(t)
    edges = []
    for (va, vb), tris in sorted(incident.items()):
        plus = tris[0]
        minus = tris[1] if len(tris) > 1 else -1
        a = mesh.vertices[va]
        b = mesh.vertices[vb]
        d = b - a
        h = float(np.hypot(d[0], d[1]))
        t_vec = d / h
        n_vec = np.array([t_vec[1], -t_vec[0]])
        # orient n out of the plus triangle so jump signs are well defined
        bary = mesh.vertices[mesh.triangles[plus]].mean(axis=0)
        if n_vec @ (0.5 * (a + b) - bary) < 0.0:
            n_vec = -n_vec
        edges.append((va, vb, plus, minus, n_vec, t_vec, h))
    return edges


def _directional_rows(coeff, pts, n, t):
    """Shape-function normal/tangential derivatives at edge points.

    coeff: (10, 10) shape coefficients. Returns dict of (P, 10) arrays.
    """
    x, y = pts[:, 0], pts[:, 1]
    grad = np.stack([_mono(x, y, 1, 0) @ coeff, _mono(x, y, 0, 1) @ coeff])
    hess = np.stack([_mono(x, y, p, q) @ coeff for p, q in _HESS])
    third = np.stack([_mono(x, y, p, q) @ coeff for p, q in _THIRD])
    nx, ny = n
    tx, ty = t
    w_nn = (nx * nx, 2 * nx * ny, ny * ny)
    w_nt = (nx * tx, nx * ty + ny * tx, ny * ty)
    w_nnn = (nx**3, 3 * nx * nx * ny, 3 * nx * ny * ny, ny**3)
    w_nnt = (
        nx * nx * tx,
        2 * nx * ny * tx + nx * nx * ty,
        ny * ny * tx + 2 * nx * ny * ty,
        ny * ny * ty,
    )
    return {
        "n": nx * grad[0] + ny * grad[1],
        "nn": sum(w * h for w, h in zip(w_nn, hess)),
        "nt": sum(w * h for w, h in zip(w_nt, hess)),
        "nnn": sum(w * d for w, d in zip(w_nnn, third)),
        "nnt": sum(w * d for w, d in zip(w_nnt, third)),
    }


def brute_force_forms(mesh: Mesh, edge_points: int = 16) -> dict[str, np.ndarray]:
    """Dense reference matrices for the split forms.

    Returns a_core, a_pen, b_core, b_pen over all DoFs (no boundary
    elimination); the full operator is
    iota^2 (a_core + eta a_pen) + b_core + eta b_pen.
    """
    nv = mesh.num_vertices
    N = 3 * nv + mesh.num_triangles
    parts = {k: np.zeros((N, N)) for k in ("a_core", "a_pen", "b_core", "b_pen")}

    gdofs = np.empty((mesh.num_triangles, 10), dtype=int)
    coeffs = np.empty((mesh.num_triangles, 10, 10))
    for t, tri in enumerate(mesh.triangles):
        corners = mesh.vertices[tri]
        coeffs[t] = _shape_coefficients(corners)
        cols = []
        for v in tri:
            cols += [3 * v, 3 * v + 1, 3 * v + 2]
        cols.append(3 * nv + t)
        gdofs[t] = cols

        area = _triangle_area(corners)
        third = np.stack(
            [_mono(corners[0, 0], corners[0, 1], p, q) @ coeffs[t] for p, q in _THIRD]
        )  # constant over the triangle, any point works
        Aa = area * sum(m * np.outer(d, d) for m, d in zip(_THIRD_MULT, third))
        mids = 0.5 * (corners + np.roll(corners, -1, axis=0))
        Ab = np.zeros((10, 10))
        for mid in mids:  # midpoint rule is exact for the quadratic integrand
            hess = np.stack([_mono(mid[0], mid[1], p, q) @ coeffs[t] for p, q in _HESS])
            Ab += (area / 3.0) * sum(
                m * np.outer(h, h) for m, h in zip(_HESS_MULT, hess)
            )
        ij = np.ix_(gdofs[t], gdofs[t])
        parts["a_core"][ij] += Aa
        parts["b_core"][ij] += Ab

    xg, wg = roots_legendre(edge_points)
    s = 0.5 * (xg + 1.0)
    for va, vb, plus, minus, n_vec, t_vec, h in _own_edges(mesh):
        a = mesh.vertices[va]
        b = mesh.vertices[vb]
        pts = a[None, :] + s[:, None] * (b - a)[None, :]
        w_arc = 0.5 * h * wg

        def spread(local_rows, tri):
            # per-quadrature-point global rows; a single triangle's dofs are
            # distinct, and shared columns of the two sides then combine
            # exactly in the jump/average below
            glob = np.zeros((pts.shape[0], N))
            glob[:, gdofs[tri]] = local_rows
            return glob

        rows_p = _directional_rows(coeffs[plus], pts, n_vec, t_vec)
        jump = {k: spread(v, plus) for k, v in rows_p.items()}
        avg = jump
        if minus >= 0:
            rows_m = _directional_rows(coeffs[minus], pts, n_vec, t_vec)
            glob_m = {k: spread(v, minus) for k, v in rows_m.items()}
            avg = {k: 0.5 * (jump[k] + glob_m[k]) for k in jump}
            jump = {k: jump[k] - glob_m[k] for k in jump}

        def pair(scale, U, W):
            return np.einsum("p,pi,pj->ij", scale * w_arc, U, W)

        def sym(U, W):
            M = pair(1.0, U, W)
            return -(M + M.T)

        parts["a_core"] += sym(avg["nnn"], jump["nn"]) + 2.0 * sym(
            avg["nnt"], jump["nt"]
        )
        parts["a_pen"] += pair(1.0 / h, jump["nn"], jump["nn"])
        parts["a_pen"] += pair(h**-3, jump["n"], jump["n"])
        parts["b_core"] += sym(avg["nn"], jump["n"])
        parts["b_pen"] += pair(1.0 / h, jump["n"], jump["n"])
    return parts


def combine_forms(parts: dict[str, np.ndarray], iota: float, eta: float) -> np.ndarray:
    return (
        iota * iota * (parts["a_core"] + eta * parts["a_pen"])
        + parts["b_core"]
        + eta * parts["b_pen"]
    )


def fornberg_weights(order: int, offsets: np.ndarray) -> np.ndarray:
    """Finite-difference weights on arbitrary offsets (Fornberg's recursion)."""
    offsets = np.asarray(offsets, dtype=float)
    n = offsets.size - 1
    c = np.zeros((n + 1, order + 1))
    c[0, 0] = 1.0
    c1 = 1.0
    c4 = offsets[0]
    for i in range(1, n + 1):
        mn = min(i, order)
        c2 = 1.0
        c5 = c4
        c4 = offsets[i]
        for j in range(i):
            c3 = offsets[i] - offsets[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, order]


def central_difference(
    func, ax: int, ay: int, x, y, step: float, accuracy: int = 8
):
    """Mixed central difference d^(ax+ay) f / dx^ax dy^ay from point values."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)

    def stencil(order):
        if order == 0:
            return np.array([0]), np.array([1.0])
        m = (order + accuracy) // 2
        off = np.arange(-m, m + 1)
        return off, fornberg_weights(order, off)

    off_x, w_x = stencil(ax)
    off_y, w_y = stencil(ay)
    total = np.zeros(np.broadcast(x, y).shape)
    for i, wx in zip(off_x, w_x):
        for j, wy in zip(off_y, w_y):
            total += wx * wy * func(x + i * step, y + j * step)
    return total / step ** (ax + ay)


def fd_derivative_check(field, order: int, points, step: float | None = None) -> float:
    """Largest relative mismatch between the field's analytic derivatives of
    the given order and Richardson-extrapolated centered differences of its
    analytic derivatives of order - 1.

    Differencing one analytic level down keeps the subtractive cancellation
    mild enough that even sixth-order terms verify in float64; value-based
    stencils for high orders cannot reach useful accuracy at these steps.
    """
    if step is None:
        step = 1e-3 if order >= 4 else 1e-5
    pts = np.asarray(points, dtype=float)
    x, y = pts[..., 0], pts[..., 1]
    worst = 0.0
    for ax in range(order, -1, -1):
        ay = order - ax
        if ax > 0:
            lower = (ax - 1, ay)
            diff = lambda h: (
                field.derivative(*lower, x + h, y) - field.derivative(*lower, x - h, y)
            ) / (2.0 * h)
        else:
            lower = (ax, ay - 1)
            diff = lambda h: (
                field.derivative(*lower, x, y + h) - field.derivative(*lower, x, y - h)
            ) / (2.0 * h)
        approx = (4.0 * diff(0.5 * step) - diff(step)) / 3.0
        exact = field.derivative(ax, ay, x, y)
        scale = max(float(np.abs(exact).max()), 1.0)
        worst = max(worst, float(np.abs(approx - exact).max()) / scale)
    return worst
