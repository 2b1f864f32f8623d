"""Cubic Hermite triangle: P3 shape functions with 10 degrees of freedom.

Local DoF order: values at the three vertices (0-2), then the gradient pairs
(d/dx, d/dy) at each vertex (3-8), then the value at the barycenter (9).
Vertex values plus vertex gradients pin the cubic edge traces (value and
tangential derivative at both endpoints), so the glued global space is C0 and
gradients are single-valued at vertices; normal derivatives still jump across
edges.

Shape functions are built per physical triangle: write phi in monomials of the
barycenter-centered, diameter-scaled coordinates and invert the 10x10 matrix
of DoF functionals applied to those monomials (gradient DoFs do not transport
affinely, so a fixed reference element would be wrong). The scaling keeps the
matrix conditioned uniformly over shape-regular triangles.

Derivative component order everywhere: grad (x, y); hess (xx, xy, yy);
third (xxx, xxy, xyy, yyy).
"""

from dataclasses import dataclass

import numpy as np

# exponents (a, b) of the 10 cubic monomials X^a Y^b
EXPONENTS = np.array(
    [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (3, 0), (2, 1), (1, 2), (0, 3)],
    dtype=np.int64,
)

# multiplicities of the distinct components in full tensor contractions,
# |D^2 v|^2 = vxx^2 + 2 vxy^2 + vyy^2 and similarly for order 3
HESS_MULT = np.array([1.0, 2.0, 1.0])
THIRD_MULT = np.array([1.0, 3.0, 3.0, 1.0])

_FALL = np.array([[1, 0, 0, 0], [1, 1, 0, 0], [1, 2, 2, 0], [1, 3, 6, 6]], dtype=float)
# _FALL[a, p] = a! / (a - p)! for a, p <= 3 (0 when p > a)


def _mono_derivative(X, Y, p: int, q: int, scale):
    """Rows of d^(p+q)/dx^p dy^q of the 10 scaled monomials at local points.

    X, Y are already (x - cx)/scale; returns shape X.shape + (10,).
    """
    out = np.zeros(np.shape(X) + (10,))
    s = np.asarray(scale, dtype=float) ** (p + q)
    for k, (a, b) in enumerate(EXPONENTS):
        if p > a or q > b:
            continue
        c = _FALL[a, p] * _FALL[b, q]
        term = np.full(np.shape(X), c)
        if a - p:
            term = term * X ** (a - p)
        if b - q:
            term = term * Y ** (b - q)
        out[..., k] = term / s
    return out


_ORDERS = {
    "value": [(0, 0)],
    "grad": [(1, 0), (0, 1)],
    "hess": [(2, 0), (1, 1), (0, 2)],
    "third": [(3, 0), (2, 1), (1, 2), (0, 3)],
}
_ORDER_KEYS = ["value", "grad", "hess", "third"]


def monomial_tables(local_points, scale, order: int = 3) -> dict:
    """Derivative tables of the scaled monomial basis.

    local_points: (..., 2) scaled coordinates; scale broadcastable to (...).
    Returns {"value": (..., 10), "grad": (..., 2, 10), "hess": (..., 3, 10),
    "third": (..., 4, 10)} up to the requested order.
    """
    X = local_points[..., 0]
    Y = local_points[..., 1]
    scale = np.asarray(scale, dtype=float)
    if scale.ndim and scale.ndim < X.ndim:
        scale = scale.reshape(scale.shape + (1,) * (X.ndim - scale.ndim))
    tables = {}
    for key in _ORDER_KEYS[: order + 1]:
        comps = [_mono_derivative(X, Y, p, q, scale) for p, q in _ORDERS[key]]
        tables[key] = comps[0] if key == "value" else np.stack(comps, axis=-2)
    return tables


@dataclass
class Bases:
    """Shape-function coefficients for a batch of triangles.

    coeff[t] maps monomial rows to shape-function rows: for any derivative row
    vector r of the scaled monomials, r @ coeff[t] are the 10 shape-function
    derivatives.
    """

    coeff: np.ndarray  # (T, 10, 10)
    center: np.ndarray  # (T, 2)
    scale: np.ndarray  # (T,)


def build_bases(corners: np.ndarray) -> Bases:
    """Construct Hermite bases for triangles given as (T, 3, 2) vertex arrays."""
    corners = np.asarray(corners, dtype=float)
    if corners.ndim == 2:
        corners = corners[None]
    T = corners.shape[0]
    center = corners.mean(axis=1)
    sides = np.stack(
        [
            np.linalg.norm(corners[:, 1] - corners[:, 0], axis=1),
            np.linalg.norm(corners[:, 2] - corners[:, 1], axis=1),
            np.linalg.norm(corners[:, 0] - corners[:, 2], axis=1),
        ],
        axis=1,
    )
    scale = sides.max(axis=1)

    local = (corners - center[:, None, :]) / scale[:, None, None]  # (T, 3, 2)
    V = np.empty((T, 10, 10))
    val = _mono_derivative(local[..., 0], local[..., 1], 0, 0, scale[:, None])
    dx = _mono_derivative(local[..., 0], local[..., 1], 1, 0, scale[:, None])
    dy = _mono_derivative(local[..., 0], local[..., 1], 0, 1, scale[:, None])
    V[:, 0:3] = val
    V[:, 3:9:2] = dx
    V[:, 4:9:2] = dy
    zero = np.zeros((T,))
    V[:, 9] = _mono_derivative(zero, zero, 0, 0, scale)
    coeff = np.linalg.inv(V)
    return Bases(coeff, center, scale)


def evaluate_bases(bases: Bases, points: np.ndarray, order: int = 3) -> dict:
    """Shape-function derivative tables at physical points.

    points: (T, Q, 2); returns {"value": (T, Q, 10), "grad": (T, Q, 2, 10),
    ...} with the shape-function axis last.
    """
    local = (points - bases.center[:, None, :]) / bases.scale[:, None, None]
    mono = monomial_tables(local, bases.scale[:, None], order)
    out = {}
    for key, tab in mono.items():
        if key == "value":
            out[key] = np.einsum("tqm,tmj->tqj", tab, bases.coeff)
        else:
            out[key] = np.einsum("tqcm,tmj->tqcj", tab, bases.coeff)
    return out


class HermiteBasis:
    """Shape functions of a single triangle."""

    def __init__(self, vertices):
        vertices = np.asarray(vertices, dtype=float)
        if vertices.shape != (3, 2):
            raise ValueError(f"expected (3, 2) vertices, got {vertices.shape}")
        self.vertices = vertices
        self._bases = build_bases(vertices[None])

    @property
    def coeff(self) -> np.ndarray:
        return self._bases.coeff[0]

    def evaluate(self, points, order: int = 3) -> dict:
        """Derivative tables at (Q, 2) points: {"value": (Q, 10), "grad":
        (Q, 2, 10), "hess": (Q, 3, 10), "third": (Q, 4, 10)} up to `order`."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        tabs = evaluate_bases(self._bases, points[None], order)
        return {k: v[0] for k, v in tabs.items()}

    def dof_values(self) -> np.ndarray:
        """Apply the 10 DoF functionals to the 10 shape functions (identity
        up to roundoff; used to verify the nodal property)."""
        tabs = self.evaluate(self.vertices, order=1)
        bary = self.evaluate(self.vertices.mean(axis=0), order=0)
        out = np.empty((10, 10))
        out[0:3] = tabs["value"]
        out[3:9:2] = tabs["grad"][:, 0]
        out[4:9:2] = tabs["grad"][:, 1]
        out[9] = bary["value"][0]
        return out


def second_weights(d1, d2) -> np.ndarray:
    """Contraction weights of a symmetric 2nd-derivative tensor against
    d1 (x) d2, in component order (xx, xy, yy). Broadcasts over leading dims
    of (..., 2) inputs."""
    d1 = np.asarray(d1, dtype=float)
    d2 = np.asarray(d2, dtype=float)
    return np.stack(
        [
            d1[..., 0] * d2[..., 0],
            d1[..., 0] * d2[..., 1] + d1[..., 1] * d2[..., 0],
            d1[..., 1] * d2[..., 1],
        ],
        axis=-1,
    )


def third_weights(d1, d2, d3) -> np.ndarray:
    """Contraction weights of a symmetric 3rd-derivative tensor against
    d1 (x) d2 (x) d3, component order (xxx, xxy, xyy, yyy)."""
    d1 = np.asarray(d1, dtype=float)
    d2 = np.asarray(d2, dtype=float)
    d3 = np.asarray(d3, dtype=float)
    x1, y1 = d1[..., 0], d1[..., 1]
    x2, y2 = d2[..., 0], d2[..., 1]
    x3, y3 = d3[..., 0], d3[..., 1]
    return np.stack(
        [
            x1 * x2 * x3,
            x1 * x2 * y3 + x1 * y2 * x3 + y1 * x2 * x3,
            x1 * y2 * y3 + y1 * x2 * y3 + y1 * y2 * x3,
            y1 * y2 * y3,
        ],
        axis=-1,
    )


def _contract(table: np.ndarray, weights: np.ndarray) -> np.ndarray:
    # table (..., C, 10), weights (C,) -> (..., 10)
    return np.einsum("c,...cj->...j", weights, table)


def directional_derivatives(derivs: dict, n, t) -> dict:
    """Normal/tangential derivatives from an `evaluate` table dict.

    n, t must be unit and orthogonal. Returns {"n", "t", "nn", "nt", "tt",
    "nnn", "nnt", "ntt"} (keys limited by the orders present in `derivs`).
    """
    n = np.asarray(n, dtype=float)
    t = np.asarray(t, dtype=float)
    if abs(n @ n - 1.0) > 1e-12 or abs(t @ t - 1.0) > 1e-12:
        raise ValueError("n and t must be unit vectors")
    if abs(n @ t) > 1e-12:
        raise ValueError("n and t must be orthogonal")
    out = {}
    if "grad" in derivs:
        out["n"] = _contract(derivs["grad"], n)
        out["t"] = _contract(derivs["grad"], t)
    if "hess" in derivs:
        out["nn"] = _contract(derivs["hess"], second_weights(n, n))
        out["nt"] = _contract(derivs["hess"], second_weights(n, t))
        out["tt"] = _contract(derivs["hess"], second_weights(t, t))
    if "third" in derivs:
        out["nnn"] = _contract(derivs["third"], third_weights(n, n, n))
        out["nnt"] = _contract(derivs["third"], third_weights(n, n, t))
        out["ntt"] = _contract(derivs["third"], third_weights(n, t, t))
    return out
