"""Constant-coefficient stencils of the Stokes operator and grid transfers.

Stencils are obtained by assembling the exact reference-element integrals
over the cells surrounding one representative point of each DoF type on an
infinite uniform mesh with h = 1.  Offsets are stored as pairs of Fractions
in units of h; gradient/divergence blocks carry one power of h.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .fem import cell_layout, reference_element

__all__ = [
    "DofType",
    "StaggeredStencil",
    "OperatorStencilSet",
    "assemble_element_matrices",
    "restriction_stencils",
    "verify_against_reference",
    "reference_p2p1_stencils",
    "dof_type_of",
    "FIELDS",
    "VELOCITY_TYPES",
]

FIELDS = ("u1", "u2", "p")


class DofType(enum.Enum):
    """Location class of a DoF inside the mesh cell (offsets in units of h)."""

    N = (0, 0)
    X = (1, 0)
    Y = (0, 1)
    C = (1, 1)

    @property
    def offset(self):
        return (Fraction(self.value[0], 2), Fraction(self.value[1], 2))

    @property
    def half(self):
        """Representative position in half units."""
        return self.value


VELOCITY_TYPES = (DofType.N, DofType.X, DofType.Y, DofType.C)
_BY_PARITY = {t.value: t for t in DofType}


def dof_type_of(pos):
    """DoF type of a half-unit lattice point."""
    return _BY_PARITY[(pos[0] % 2, pos[1] % 2)]


@dataclass
class StaggeredStencil:
    """Stencil from ``source_type`` points to a ``target_type`` point.

    ``entries`` maps an offset (kx, ky) in units of h to its coefficient.
    """

    source_type: DofType
    target_type: DofType
    entries: dict = field(default_factory=dict)
    h_power: int = 0

    def __post_init__(self):
        for k in self.entries:
            d = (k[0] + self.source_type.offset[0] - self.target_type.offset[0],
                 k[1] + self.source_type.offset[1] - self.target_type.offset[1])
            if d[0].denominator != 1 or d[1].denominator != 1:
                raise ValueError(f"offset {k} inconsistent with "
                                 f"{self.source_type.name}->{self.target_type.name}")

    def add(self, offset, value):
        key = (Fraction(offset[0]), Fraction(offset[1]))
        self.entries[key] = self.entries.get(key, Fraction(0)) + value
        if self.entries[key] == 0:
            del self.entries[key]

    def __len__(self):
        return len(self.entries)

    def arrays(self):
        """Offsets (m, 2) and coefficients (m,) as floats."""
        if not self.entries:
            return np.zeros((0, 2)), np.zeros(0)
        keys = sorted(self.entries)
        off = np.array([[float(a), float(b)] for a, b in keys])
        val = np.array([float(self.entries[k]) for k in keys])
        return off, val

    def symbol(self, theta):
        """Sum of s_k exp(i theta.k); h-scaling is left to the caller."""
        off, val = self.arrays()
        theta = np.asarray(theta, dtype=float)
        phase = np.tensordot(theta, off.T, axes=([-1], [0])) if off.size else 0.0
        return np.sum(val * np.exp(1j * phase), axis=-1) if off.size else (
            np.zeros(theta.shape[:-1], dtype=complex))

    def reflected(self):
        """Stencil of the transposed operator (source and target swapped)."""
        return StaggeredStencil(self.target_type, self.source_type,
                                {(-a, -b): v for (a, b), v in self.entries.items()},
                                self.h_power)

    def scaled(self, c):
        return StaggeredStencil(self.source_type, self.target_type,
                                {k: v * c for k, v in self.entries.items()}, self.h_power)

    def row_sum(self):
        return sum(self.entries.values(), Fraction(0))


@dataclass
class OperatorStencilSet:
    """All stencils of one discretization.

    ``laplacian[t][s]``: scalar Laplacian, target type t, source type s.
    ``grad_x[t]``/``grad_y[t]``: pressure -> velocity of type t (the B^T blocks).
    ``div_x[t]``/``div_y[t]``: velocity of type t -> pressure (the B blocks).
    ``restriction_v[tc][tf]``: fine type tf -> coarse type tc.
    ``restriction_p``: pressure restriction.
    """

    discretization: str
    laplacian: dict
    grad_x: dict
    grad_y: dict
    div_x: dict
    div_y: dict
    restriction_v: dict
    restriction_p: StaggeredStencil

    def blocks(self):
        """Operator blocks keyed by ((field, type) target, (field, type) source)."""
        out = {}
        for comp in ("u1", "u2"):
            for t in VELOCITY_TYPES:
                for s in VELOCITY_TYPES:
                    out[(comp, t), (comp, s)] = self.laplacian[t][s]
        for comp, grad, div in (("u1", self.grad_x, self.div_x),
                                ("u2", self.grad_y, self.div_y)):
            for t in VELOCITY_TYPES:
                out[(comp, t), ("p", DofType.N)] = grad[t]
                out[("p", DofType.N), (comp, t)] = div[t]
        return out

    def to_json(self):
        blocks = []
        for (tgt, src), st in self.blocks().items():
            blocks.append(_block_json(f"{src[0]}:{src[1].name}", f"{tgt[0]}:{tgt[1].name}", st))
        for tc in VELOCITY_TYPES:
            for tf in VELOCITY_TYPES:
                blocks.append(_block_json(f"fine:{tf.name}", f"coarse:{tc.name}",
                                          self.restriction_v[tc][tf]))
        blocks.append(_block_json("fine:p", "coarse:p", self.restriction_p))
        return json.dumps({"discretization": self.discretization, "blocks": blocks})


def _block_json(source, target, st):
    return {"source": source, "target": target, "h_power": st.h_power,
            "entries": [[str(a), str(b), str(v)] for (a, b), v in sorted(st.entries.items())]}


def _element_matrices(discretization, elem):
    """Exact element Laplacian and -int q d_x v, -int q d_y v for h = 1."""
    ref = reference_element(discretization)
    e1, e2 = elem.axes
    # physical Jacobian (h = 1): columns are the images of the unit vectors
    J = [[Fraction(e1[0], 2), Fraction(e2[0], 2)], [Fraction(e1[1], 2), Fraction(e2[1], 2)]]
    det = J[0][0] * J[1][1] - J[0][1] * J[1][0]
    Jinv = [[J[1][1] / det, -J[0][1] / det], [-J[1][0] / det, J[0][0] / det]]
    # G = J^{-1} J^{-T}
    G = [[sum(Jinv[a][c] * Jinv[b][c] for c in range(2)) for b in range(2)] for a in range(2)]
    adet = abs(det)
    nv, npr = ref.nv, ref.np_
    A = [[adet * sum(G[a][b] * ref.stiff[a][b][i][j] for a in range(2) for b in range(2))
          for j in range(nv)] for i in range(nv)]
    Bs = []
    for x in range(2):
        # d_x phi = sum_a (J^{-T})_{x a} d_a phi = sum_a Jinv[a][x] d_a phi
        Bs.append([[-adet * sum(Jinv[a][x] * ref.mixed[a][i][j] for a in range(2))
                    for j in range(nv)] for i in range(npr)])
    return A, Bs


def _empty_grid(h_power=0, pressure_source=False, pressure_target=False):
    grid = {}
    for t in VELOCITY_TYPES:
        if pressure_source or pressure_target:
            src = DofType.N if pressure_source else t
            tgt = t if pressure_source else DofType.N
            grid[t] = StaggeredStencil(src, tgt, {}, h_power)
        else:
            grid[t] = {s: StaggeredStencil(s, t, {}, h_power) for s in VELOCITY_TYPES}
    return grid


def _rel(p, q):
    return (Fraction(p[0] - q[0], 2), Fraction(p[1] - q[1], 2))


@lru_cache(maxsize=None)
def assemble_element_matrices(discretization: str) -> OperatorStencilSet:
    """Assemble every stencil of ``discretization`` on the infinite uniform mesh."""
    lap = _empty_grid()
    gx, gy = _empty_grid(1, pressure_source=True), _empty_grid(1, pressure_source=True)
    dx, dy = _empty_grid(1, pressure_target=True), _empty_grid(1, pressure_target=True)
    reps = {t.half: t for t in VELOCITY_TYPES}
    layout = cell_layout(discretization)
    mats = [_element_matrices(discretization, e) for e in layout]
    for ci in range(-2, 2):
        for cj in range(-2, 2):
            shift = (2 * ci, 2 * cj)
            for elem, (A, Bs) in zip(layout, mats):
                vpos = [(p[0] + shift[0], p[1] + shift[1]) for p in elem.vdofs]
                ppos = [(p[0] + shift[0], p[1] + shift[1]) for p in elem.pdofs]
                for i, pi in enumerate(vpos):
                    if pi in reps:
                        t = reps[pi]
                        for j, pj in enumerate(vpos):
                            lap[t][dof_type_of(pj)].add(_rel(pj, pi), A[i][j])
                        for q, pq in enumerate(ppos):
                            gx[t].add(_rel(pq, pi), Bs[0][q][i])
                            gy[t].add(_rel(pq, pi), Bs[1][q][i])
                for q, pq in enumerate(ppos):
                    if pq == (0, 0):
                        for j, pj in enumerate(vpos):
                            t = dof_type_of(pj)
                            dx[t].add(_rel(pj, pq), Bs[0][q][j])
                            dy[t].add(_rel(pj, pq), Bs[1][q][j])
    rv, rp = restriction_stencils(discretization)
    return OperatorStencilSet(discretization, lap, gx, gy, dx, dy, rv, rp)


@lru_cache(maxsize=None)
def restriction_stencils(discretization: str):
    """Restriction R = P^T for nodal FE interpolation between h and 2h.

    Returns ``(velocity, pressure)`` where ``velocity[tc][tf]`` is the stencil
    from fine type ``tf`` to coarse type ``tc``; offsets in fine units of h.
    """
    ref = reference_element(discretization)
    layout = cell_layout(discretization)
    rv = {tc: {tf: StaggeredStencil(tf, tc) for tf in VELOCITY_TYPES} for tc in VELOCITY_TYPES}
    rp = StaggeredStencil(DofType.N, DofType.N)
    coarse_reps = {(2 * t.half[0], 2 * t.half[1]): t for t in VELOCITY_TYPES}
    seen_v, seen_p = {}, {}
    tri = ref.shape == "triangle"
    for ci in range(-2, 2):
        for cj in range(-2, 2):
            for elem in layout:
                org = (4 * ci + 2 * elem.origin[0], 4 * cj + 2 * elem.origin[1])
                E1 = (2 * elem.axes[0][0], 2 * elem.axes[0][1])
                E2 = (2 * elem.axes[1][0], 2 * elem.axes[1][1])
                pts = []
                for a in range(5):
                    for b in range(5):
                        if tri and a + b > 4:
                            continue
                        y = (org[0] + (a * E1[0] + b * E2[0]) // 4,
                             org[1] + (a * E1[1] + b * E2[1]) // 4)
                        pts.append((Fraction(a, 4), Fraction(b, 4), y))
                for c, node in enumerate(ref.vnodes):
                    pc = (org[0] + int(node[0] * E1[0] + node[1] * E2[0]),
                          org[1] + int(node[0] * E1[1] + node[1] * E2[1]))
                    if pc not in coarse_reps:
                        continue
                    tc = coarse_reps[pc]
                    for xi, eta, y in pts:
                        val = ref.vbasis[c](xi, eta)
                        key = (tc, y)
                        if key in seen_v:
                            assert seen_v[key] == val, "interpolation not continuous"
                            continue
                        seen_v[key] = val
                        if val != 0:
                            rv[tc][dof_type_of(y)].add(_rel(y, pc), val)
                for q, node in enumerate(ref.pnodes):
                    pc = (org[0] + int(node[0] * E1[0] + node[1] * E2[0]),
                          org[1] + int(node[0] * E1[1] + node[1] * E2[1]))
                    if pc != (0, 0):
                        continue
                    for xi, eta, y in pts:
                        if y[0] % 2 or y[1] % 2:
                            continue
                        val = ref.pbasis[q](xi, eta)
                        if y in seen_p:
                            assert seen_p[y] == val
                            continue
                        seen_p[y] = val
                        if val != 0:
                            rp.add(_rel(y, pc), val)
    return rv, rp


def _st(src, tgt, scale, pairs, h_power=0):
    s = StaggeredStencil(src, tgt, {}, h_power)
    for (kx, ky), v in pairs:
        s.add((Fraction(kx), Fraction(ky)), Fraction(v) * scale)
    return s


@lru_cache(maxsize=None)
def reference_p2p1_stencils():
    """Published P2-P1 reference stencils for the left triangular grid (h = 1).

    Keys name the reference blocks.  The reference B_x blocks are centred on the
    velocity point (pressure sources), i.e. they are the B^T rows held in
    ``grad_x``; the pressure rows follow by reflection.
    """
    N, X, Y, C = VELOCITY_TYPES
    h, t3, s6, e8 = Fraction(1, 2), Fraction(1, 3), Fraction(1, 6), Fraction(1, 8)
    ref = {
        "A_NN": _st(N, N, t3, [((0, 0), 12), ((1, 0), 1), ((-1, 0), 1), ((0, 1), 1), ((0, -1), 1)]),
        "A_NX": _st(X, N, t3, [((h, 0), -4), ((-h, 0), -4)]),
        "A_NY": _st(Y, N, t3, [((0, h), -4), ((0, -h), -4)]),
        "A_NC": _st(C, N, t3, []),
        "A_XN": _st(N, X, t3, [((h, 0), -4), ((-h, 0), -4)]),
        "A_XX": _st(X, X, t3, [((0, 0), 16)]),
        "A_XY": _st(Y, X, t3, []),
        "A_XC": _st(C, X, t3, [((0, h), -4), ((0, -h), -4)]),
        "B_xN": _st(N, N, s6, [], 1),
        "B_xX": _st(N, X, t3, [((-h, 0), -1), ((h, 0), 1)], 1),
        "B_xY": _st(N, Y, s6, [((-1, h), -1), ((0, h), 1), ((0, -h), -1), ((1, -h), 1)], 1),
        "B_xC": _st(N, C, s6, [((-h, h), -1), ((h, h), 1), ((-h, -h), -1), ((h, -h), 1)], 1),
        "R_NN": _st(N, N, 1, [((0, 0), 1)]),
        "R_NX": _st(X, N, e8, [((-3 * h, 1), -1), ((h, 1), -1), ((-3 * h, 0), -1), ((-h, 0), 3),
                                ((h, 0), 3), ((3 * h, 0), -1), ((-h, -1), -1), ((3 * h, -1), -1)]),
        "R_NY": _st(Y, N, e8, [((-1, 3 * h), -1), ((0, 3 * h), -1), ((0, h), 3), ((1, h), -1),
                                ((-1, -h), -1), ((0, -h), 3), ((0, -3 * h), -1), ((1, -3 * h), -1)]),
        "R_NC": _st(C, N, e8, [((-3 * h, 3 * h), -1), ((-h, 3 * h), -1), ((-3 * h, h), -1),
                                ((-h, h), 3), ((h, -h), 3), ((3 * h, -h), -1), ((h, -3 * h), -1),
                                ((3 * h, -3 * h), -1)]),
        "R_p": _st(N, N, h, [((0, 0), 2), ((-1, 1), 1), ((0, 1), 1), ((-1, 0), 1), ((1, 0), 1),
                              ((0, -1), 1), ((1, -1), 1)]),
    }
    return ref


def _assembled_counterpart(st: OperatorStencilSet, name):
    N, X, Y, C = VELOCITY_TYPES
    tmap = {"N": N, "X": X, "Y": Y, "C": C}
    if name.startswith("A_"):
        return st.laplacian[tmap[name[2]]][tmap[name[3]]]
    if name.startswith("B_x"):
        return st.grad_x[tmap[name[3]]]
    if name == "R_p":
        return st.restriction_p
    return st.restriction_v[tmap[name[2]]][tmap[name[3]]]


def _deviation(a: StaggeredStencil, b: StaggeredStencil):
    keys = set(a.entries) | set(b.entries)
    if not keys:
        return Fraction(0)
    return max(abs(a.entries.get(k, 0) - b.entries.get(k, 0)) for k in keys)


def verify_against_reference(stencils: OperatorStencilSet, tol=1e-12):
    """Compare assembled stencils with the reference P2-P1 ones.

    Returns ``{"blocks": {name: deviation}, "max_deviation": float,
    "failures": [names above tol]}``.  Q2-Q1 has no reference stencils, so the
    report is empty.
    """
    if stencils.discretization != "P2P1":
        return {"blocks": {}, "max_deviation": 0.0, "failures": []}
    blocks = {}
    for name, ref in reference_p2p1_stencils().items():
        blocks[name] = float(_deviation(_assembled_counterpart(stencils, name), ref))
    worst = max(blocks.values())
    return {"blocks": blocks, "max_deviation": worst,
            "failures": [k for k, v in blocks.items() if v > tol]}
