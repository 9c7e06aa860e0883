"""Reference elements for the P2-P1 and Q2-Q1 Stokes pairs.

Everything here is exact: basis functions are polynomials with rational
coefficients and the reference integrals are evaluated in closed form, so
the stencil coefficients derived from them are exact fractions.  Float
copies of the same integrals are used by the sparse assembler.

Logical coordinates are measured in half mesh-widths ("half units"), so
every velocity DoF of either discretization sits on an integer point of the
half-unit lattice and its parity gives its DoF type.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import factorial

import numpy as np

__all__ = [
    "Poly",
    "ReferenceElement",
    "reference_element",
    "cell_layout",
    "DISCRETIZATIONS",
]

DISCRETIZATIONS = ("P2P1", "Q2Q1")


class Poly:
    """Bivariate polynomial with Fraction coefficients, keyed by exponents."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = {k: Fraction(v) for k, v in (terms or {}).items() if v != 0}

    @classmethod
    def const(cls, c):
        return cls({(0, 0): c})

    @classmethod
    def xi(cls):
        return cls({(1, 0): 1})

    @classmethod
    def eta(cls):
        return cls({(0, 1): 1})

    def __add__(self, other):
        other = other if isinstance(other, Poly) else Poly.const(other)
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0) + v
        return Poly(out)

    __radd__ = __add__

    def __neg__(self):
        return Poly({k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        return self + (-(other if isinstance(other, Poly) else Poly.const(other)))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Poly):
            return Poly({k: v * other for k, v in self.terms.items()})
        out = {}
        for (a1, b1), v1 in self.terms.items():
            for (a2, b2), v2 in other.terms.items():
                key = (a1 + a2, b1 + b2)
                out[key] = out.get(key, 0) + v1 * v2
        return Poly(out)

    __rmul__ = __mul__

    def diff(self, axis):
        out = {}
        for (a, b), v in self.terms.items():
            if axis == 0 and a > 0:
                out[(a - 1, b)] = out.get((a - 1, b), 0) + v * a
            elif axis == 1 and b > 0:
                out[(a, b - 1)] = out.get((a, b - 1), 0) + v * b
        return Poly(out)

    def __call__(self, x, y):
        x, y = Fraction(x), Fraction(y)
        return sum((v * x**a * y**b for (a, b), v in self.terms.items()), Fraction(0))

    def evalf(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.zeros(np.broadcast(x, y).shape)
        for (a, b), v in self.terms.items():
            out = out + float(v) * x**a * y**b
        return out


def _integrate_triangle(p: Poly) -> Fraction:
    # int_T xi^a eta^b = a! b! / (a+b+2)! on the unit right triangle
    return sum(
        (v * Fraction(factorial(a) * factorial(b), factorial(a + b + 2))
         for (a, b), v in p.terms.items()),
        Fraction(0),
    )


def _integrate_square(p: Poly) -> Fraction:
    return sum((v * Fraction(1, (a + 1) * (b + 1)) for (a, b), v in p.terms.items()),
               Fraction(0))


@dataclass(frozen=True)
class ReferenceElement:
    """Velocity/pressure basis on a reference cell plus its exact integrals.

    ``stiff[a][b][i][j]`` is the integral of d_a(phi_i) d_b(phi_j) and
    ``mixed[a][i][j]`` the integral of q_i d_a(phi_j), both over the
    reference cell.
    """

    name: str
    shape: str
    vnodes: tuple
    pnodes: tuple
    vbasis: tuple
    pbasis: tuple
    stiff: tuple = field(repr=False)
    mixed: tuple = field(repr=False)

    @property
    def nv(self):
        return len(self.vbasis)

    @property
    def np_(self):
        return len(self.pbasis)

    def stiff_array(self):
        return np.array([[[[float(v) for v in row] for row in blk] for blk in ra]
                         for ra in self.stiff])

    def mixed_array(self):
        return np.array([[[float(v) for v in row] for row in blk] for blk in self.mixed])

    def vbasis_grad(self):
        return [[phi.diff(a) for a in (0, 1)] for phi in self.vbasis]


def _build(name, shape, vnodes, pnodes, vbasis, pbasis):
    integrate = _integrate_triangle if shape == "triangle" else _integrate_square
    grads = [[phi.diff(a) for a in (0, 1)] for phi in vbasis]
    stiff = tuple(
        tuple(tuple(tuple(integrate(gi[a] * gj[b]) for gj in grads) for gi in grads)
              for b in (0, 1))
        for a in (0, 1)
    )
    mixed = tuple(
        tuple(tuple(integrate(q * gj[a]) for gj in grads) for q in pbasis)
        for a in (0, 1)
    )
    return ReferenceElement(name, shape, tuple(vnodes), tuple(pnodes), tuple(vbasis),
                            tuple(pbasis), stiff, mixed)


@lru_cache(maxsize=None)
def reference_element(discretization: str) -> ReferenceElement:
    """Exact reference element for ``"P2P1"`` or ``"Q2Q1"``."""
    x, y = Poly.xi(), Poly.eta()
    half = Fraction(1, 2)
    if discretization == "P2P1":
        lam = [1 - x - y, x, y]
        # vertices v0, v1, v2 then midpoints m01, m12, m02
        vbasis = [l * (2 * l - 1) for l in lam]
        vbasis += [4 * lam[0] * lam[1], 4 * lam[1] * lam[2], 4 * lam[0] * lam[2]]
        vnodes = [(0, 0), (1, 0), (0, 1), (half, 0), (half, half), (0, half)]
        pnodes = vnodes[:3]
        return _build("P2P1", "triangle", vnodes, pnodes, vbasis, lam)
    if discretization == "Q2Q1":
        l2 = [lambda t: (2 * t - 1) * (t - 1), lambda t: 4 * t * (1 - t),
              lambda t: t * (2 * t - 1)]
        l1 = [lambda t: 1 - t, lambda t: t]
        vnodes, vbasis = [], []
        for b in range(3):
            for a in range(3):
                vnodes.append((Fraction(a, 2), Fraction(b, 2)))
                vbasis.append(l2[a](x) * l2[b](y))
        pnodes, pbasis = [], []
        for b in range(2):
            for a in range(2):
                pnodes.append((a, b))
                pbasis.append(l1[a](x) * l1[b](y))
        return _build("Q2Q1", "square", vnodes, pnodes, vbasis, pbasis)
    raise ValueError(f"unknown discretization {discretization!r}; expected one of "
                     f"{DISCRETIZATIONS}")


@dataclass(frozen=True)
class CellElement:
    """One element of a mesh cell in half-unit coordinates relative to the cell."""

    origin: tuple  # half-unit position of reference point (0, 0)
    axes: tuple  # half-unit images of the reference unit vectors
    vdofs: tuple  # half-unit positions of the velocity nodes
    pdofs: tuple  # half-unit positions of the pressure nodes


@lru_cache(maxsize=None)
def cell_layout(discretization: str) -> tuple:
    """Elements making up one mesh cell ``[0, 2]^2`` in half units.

    P2P1 cells are split by the diagonal from the lower-right to the upper-left
    corner, so diagonal-edge midpoints are the cell centres.
    """
    ref = reference_element(discretization)
    if discretization == "P2P1":
        elems = [((0, 0), ((2, 0), (0, 2))), ((2, 2), ((-2, 0), (0, -2)))]
    else:
        elems = [((0, 0), ((2, 0), (0, 2)))]
    out = []
    for origin, (e1, e2) in elems:
        def place(node):
            return (int(origin[0] + node[0] * e1[0] + node[1] * e2[0]),
                    int(origin[1] + node[0] * e1[1] + node[1] * e2[1]))
        out.append(CellElement(origin, (e1, e2), tuple(place(n) for n in ref.vnodes),
                               tuple(place(n) for n in ref.pnodes)))
    return tuple(out)
