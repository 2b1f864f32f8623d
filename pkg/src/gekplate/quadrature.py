"""Numerical integration rules on the reference triangle and the unit interval.

The reference triangle is {(x, y): x >= 0, y >= 0, x + y <= 1} with area 1/2.
Triangle rules are collapsed Gauss-Jacobi (Duffy) product rules: an m-point
Gauss-Jacobi rule with weight (1 - u) in the first coordinate times an m-point
Gauss-Legendre rule in the second integrates every bivariate polynomial of
total degree <= 2m - 1 exactly, with strictly positive weights and all points
strictly inside the triangle.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre


@dataclass(frozen=True)
class QuadratureRule:
    """Points and weights of a fixed integration rule.

    Attributes
    ----------
    points : ndarray
        Shape (Q, 2) reference-triangle coordinates for triangle rules,
        shape (Q,) parameters in (0, 1) for interval rules.
    weights : ndarray
        Shape (Q,). Sums to the reference measure: 1/2 (triangle) or 1
        (interval).
    degree : int
        Every polynomial of total degree <= degree integrates exactly.
    """

    points: np.ndarray
    weights: np.ndarray
    degree: int

    def __post_init__(self):
        self.points.setflags(write=False)
        self.weights.setflags(write=False)


@lru_cache(maxsize=None)
def triangle_rule(degree: int) -> QuadratureRule:
    """Return a rule on the reference triangle exact for total degree `degree`."""
    if degree < 0:
        raise ValueError(f"quadrature degree must be >= 0, got {degree}")
    m = max(1, (degree + 2) // 2)  # 2m - 1 >= degree
    # u-direction: Gauss-Jacobi on [-1, 1] with weight (1 - xi); absorbs the
    # Duffy Jacobian. v-direction: plain Gauss-Legendre.
    xi_u, w_u = roots_jacobi(m, 1.0, 0.0)
    xi_v, w_v = roots_legendre(m)
    u = 0.5 * (xi_u + 1.0)
    v = 0.5 * (xi_v + 1.0)
    wu = 0.25 * w_u  # includes the (1 - u) Jacobian factor
    wv = 0.5 * w_v
    U, V = np.meshgrid(u, v, indexing="ij")
    x = U.ravel()
    y = (V * (1.0 - U)).ravel()
    w = np.outer(wu, wv).ravel()
    return QuadratureRule(np.column_stack([x, y]), w, 2 * m - 1)


@lru_cache(maxsize=None)
def edge_rule(npoints: int) -> QuadratureRule:
    """Gauss-Legendre rule on (0, 1) with `npoints` points (degree 2*npoints - 1)."""
    if npoints < 1:
        raise ValueError(f"edge rule needs >= 1 point, got {npoints}")
    xi, w = roots_legendre(npoints)
    return QuadratureRule(0.5 * (xi + 1.0), 0.5 * w, 2 * npoints - 1)


def map_to_triangle(vertices: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Map reference coordinates to physical triangles.

    Parameters
    ----------
    vertices : ndarray
        (3, 2) or batched (T, 3, 2) triangle vertices.
    points : ndarray
        (Q, 2) reference coordinates.

    Returns
    -------
    ndarray
        (Q, 2) or (T, Q, 2) physical coordinates.
    """
    v = np.asarray(vertices, dtype=float)
    p = np.asarray(points, dtype=float)
    if v.ndim == 2:
        return v[0] + np.outer(p[:, 0], v[1] - v[0]) + np.outer(p[:, 1], v[2] - v[0])
    e1 = v[:, 1] - v[:, 0]
    e2 = v[:, 2] - v[:, 0]
    return (
        v[:, None, 0]
        + p[None, :, 0, None] * e1[:, None]
        + p[None, :, 1, None] * e2[:, None]
    )
