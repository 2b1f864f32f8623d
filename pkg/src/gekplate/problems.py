"""Manufactured problems with closed-form derivatives of every order.

Both benchmark loads come from separable trigonometric fields, so any partial
derivative is a short sum of A * omega^k * sin(omega*s + phase + k*pi/2)
factors; no symbolic machinery or finite differencing is involved.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

_HALF_PI = 0.5 * np.pi


class TrigFactor:
    """One-dimensional factor g(s) = sum_k A_k sin(omega_k s + phi_k).

    Constants are encoded as omega = 0 terms (their derivatives vanish
    through the omega^k factor).
    """

    def __init__(self, terms):
        self.terms = [(float(a), float(w), float(p)) for a, w, p in terms]

    def derivative(self, k: int, s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        for a, w, p in self.terms:
            if k and w == 0.0:
                continue
            out = out + a * w**k * np.sin(w * s + p + k * _HALF_PI)
        return out


def _sin_cubed(freq: float) -> TrigFactor:
    # sin^3(t) = (3 sin t - sin 3t) / 4
    return TrigFactor([(0.75, freq, 0.0), (-0.25, 3.0 * freq, 0.0)])


def _sin_squared(freq: float) -> TrigFactor:
    # sin^2(t) = 1/2 - cos(2t)/2, with the constant encoded as sin(pi/2)
    return TrigFactor([(0.5, 0.0, _HALF_PI), (-0.5, 2.0 * freq, _HALF_PI)])


class SeparableField:
    """Product field g(x) * h(y) with derivatives of arbitrary order."""

    def __init__(self, fx: TrigFactor, fy: TrigFactor):
        self.fx = fx
        self.fy = fy

    def derivative(self, ax: int, ay: int, x, y):
        return self.fx.derivative(ax, x) * self.fy.derivative(ay, y)

    def value(self, x, y):
        return self.derivative(0, 0, x, y)

    def gradient(self, x, y):
        return np.stack(
            [self.derivative(1, 0, x, y), self.derivative(0, 1, x, y)], axis=-1
        )

    def hessian(self, x, y):
        """Components (xx, xy, yy)."""
        return np.stack(
            [
                self.derivative(2, 0, x, y),
                self.derivative(1, 1, x, y),
                self.derivative(0, 2, x, y),
            ],
            axis=-1,
        )

    def third(self, x, y):
        """Components (xxx, xxy, xyy, yyy)."""
        return np.stack(
            [
                self.derivative(3, 0, x, y),
                self.derivative(2, 1, x, y),
                self.derivative(1, 2, x, y),
                self.derivative(0, 3, x, y),
            ],
            axis=-1,
        )


class DerivedField:
    """Linear combination of partial derivatives of a base field.

    terms: iterable of (coefficient, ax, ay); the field value is
    sum c * d^(ax+ay) base / dx^ax dy^ay, and its own derivatives shift the
    orders, so it supports the same interface as SeparableField.
    """

    def __init__(self, base, terms):
        self.base = base
        self.terms = [(float(c), int(ax), int(ay)) for c, ax, ay in terms]

    def derivative(self, ax: int, ay: int, x, y):
        out = 0.0
        for c, px, py in self.terms:
            out = out + c * self.base.derivative(px + ax, py + ay, x, y)
        return out

    def value(self, x, y):
        return self.derivative(0, 0, x, y)


_BIHARMONIC = [(1.0, 4, 0), (2.0, 2, 2), (1.0, 0, 4)]
_TRIHARMONIC = [(1.0, 6, 0), (3.0, 4, 2), (3.0, 2, 4), (1.0, 0, 6)]


@dataclass
class ManufacturedProblem:
    """A load plus the field(s) errors are measured against.

    exact is the true solution when known; reference is a comparison field
    that is not the solution (the reduced-problem limit used to observe
    boundary-layer-robust convergence). At least one is set.
    """

    name: str
    iota: float
    load: object
    exact: Optional[object] = None
    reference: Optional[object] = None
    notes: str = ""

    @property
    def compare_field(self):
        if self.exact is not None:
            return self.exact
        if self.reference is not None:
            return self.reference
        raise ValueError(f"problem {self.name!r} has no comparison field")


def example1(iota: float) -> ManufacturedProblem:
    """Smooth benchmark: w = sin^3(pi x) sin^3(pi y) solves the full equation.

    w and its first two normal derivatives vanish on the unit-square boundary
    (triple zeros), so w satisfies the clamped conditions exactly and the load
    is f = Delta^2 w - iota^2 Delta^3 w.
    """
    w = SeparableField(_sin_cubed(np.pi), _sin_cubed(np.pi))
    terms = list(_BIHARMONIC) + [(-(iota**2) * c, ax, ay) for c, ax, ay in _TRIHARMONIC]
    return ManufacturedProblem(
        name="smooth", iota=iota, load=DerivedField(w, terms), exact=w
    )


def example2(iota: float) -> ManufacturedProblem:
    """Boundary-layer benchmark: f = Delta^2 w0 for w0 = sin^2(pi x) sin^2(pi y).

    w0 solves the reduced (iota = 0) clamped plate problem but not the
    sixth-order equation; the true solution develops a boundary layer and is
    unknown in closed form. Errors are measured against w0, whose distance to
    the discrete solution stays O(h^2) uniformly in iota.
    """
    w0 = SeparableField(_sin_squared(np.pi), _sin_squared(np.pi))
    return ManufacturedProblem(
        name="boundary-layer",
        iota=iota,
        load=DerivedField(w0, _BIHARMONIC),
        reference=w0,
        notes="load independent of iota; exact solution unknown",
    )


def make_problem(
    load,
    iota: float,
    exact=None,
    reference=None,
    name: str = "custom",
    notes: str = "",
) -> ManufacturedProblem:
    """Wrap user-supplied fields as a problem the study driver can run.

    `load` needs value(x, y); a comparison field needs value/derivative up to
    order 3 (and order 4 if the consistency pairing will be applied to it).
    """
    return ManufacturedProblem(
        name=name, iota=iota, load=load, exact=exact, reference=reference, notes=notes
    )
