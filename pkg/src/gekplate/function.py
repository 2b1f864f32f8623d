"""Functions in the discrete space, represented by global DoF coefficients."""

import numpy as np

from .element import Bases, build_bases, evaluate_bases


class DiscreteFunction:
    """Piecewise cubic identified by its global coefficient vector.

    The function is continuous (C0) with single-valued vertex gradients, so
    pointwise evaluation is well defined everywhere, including on edges.
    """

    def __init__(self, mesh, dofmap, coefficients):
        coefficients = np.asarray(coefficients, dtype=float)
        if coefficients.shape != (dofmap.n_dofs,):
            raise ValueError(
                f"expected {dofmap.n_dofs} coefficients, got {coefficients.shape}"
            )
        self.mesh = mesh
        self.dofmap = dofmap
        self.coefficients = coefficients
        self._bases = None

    @property
    def bases(self) -> Bases:
        if self._bases is None:
            self._bases = build_bases(self.mesh.vertices[self.mesh.triangles])
        return self._bases

    @property
    def local_coefficients(self) -> np.ndarray:
        """(T, 10) per-triangle coefficient rows."""
        return self.coefficients[self.dofmap.cell_dofs]

    def evaluate_on(self, triangles, points, order: int = 0) -> dict:
        """Derivatives on given triangles at given physical points.

        triangles: (T',) indices; points: (T', Q, 2). Returns {"value":
        (T', Q), "grad": (T', Q, 2), ...} up to `order`.
        """
        b = self.bases
        sub = Bases(b.coeff[triangles], b.center[triangles], b.scale[triangles])
        tabs = evaluate_bases(sub, points, order=order)
        coeff = self.local_coefficients[triangles]
        out = {}
        for key, tab in tabs.items():
            if key == "value":
                out[key] = np.einsum("tqj,tj->tq", tab, coeff)
            else:
                out[key] = np.einsum("tqcj,tj->tqc", tab, coeff)
        return out

    def value(self, x, y) -> np.ndarray:
        """Pointwise values at arbitrary points inside the domain."""
        xb, yb = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        shape = xb.shape
        pts = np.column_stack([xb.ravel(), yb.ravel()])
        tri = self.mesh.locate(pts)
        vals = self.evaluate_on(tri, pts[:, None, :], order=0)["value"][:, 0]
        return vals.reshape(shape) if shape else float(vals[0])
