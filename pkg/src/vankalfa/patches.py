"""Vanka patches, their weights and the additive Vanka symbol.

A patch is seeded at a pressure node and lists its sites as
``(field, DofType, offset)`` with offsets in units of h relative to the
seed.  VKI patches hold every velocity DoF of the elements sharing the seed
node; VKE patches drop the nodal (N-type) velocities other than the seed.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .fem import cell_layout
from .lfa import LABELS, harmonics
from .stencils import VELOCITY_TYPES, DofType, OperatorStencilSet, dof_type_of

__all__ = [
    "PATCH_KINDS",
    "SingularPatch",
    "Site",
    "PatchSpec",
    "WeightScheme",
    "build_patch",
    "assemble_patch_matrix",
    "relative_fourier_matrix",
    "duplication_matrix",
    "vanka_symbol",
    "VankaSymbolCache",
]

PATCH_KINDS = ("VKI", "VKE")
_TYPE_ORDER = {t: i for i, t in enumerate(VELOCITY_TYPES)}


class SingularPatch(np.linalg.LinAlgError):
    """A patch matrix could not be factorised."""


@dataclass(frozen=True)
class Site:
    field: str
    dof_type: DofType
    offset: tuple  # Fractions, units of h, relative to the seed pressure node

    def label(self):
        return (self.field, self.dof_type)


@dataclass(frozen=True)
class PatchSpec:
    discretization: str
    kind: str
    sites: tuple
    anchor: tuple  # reference position x_s relative to the seed

    def __len__(self):
        return len(self.sites)

    def offsets(self):
        return np.array([[float(s.offset[0]), float(s.offset[1])] for s in self.sites])

    def counts(self):
        """Number of sites per ``(field, DofType)`` label."""
        out = {}
        for s in self.sites:
            out[s.label()] = out.get(s.label(), 0) + 1
        return out

    def to_json(self):
        return json.dumps({
            "discretization": self.discretization, "kind": self.kind,
            "anchor": [str(a) for a in self.anchor],
            "sites": [{"field": s.field, "type": s.dof_type.name,
                       "offset": [str(s.offset[0]), str(s.offset[1])]} for s in self.sites],
        })

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        sites = tuple(Site(s["field"], DofType[s["type"]],
                           (Fraction(s["offset"][0]), Fraction(s["offset"][1])))
                      for s in d["sites"])
        return cls(d["discretization"], d["kind"], sites,
                   tuple(Fraction(a) for a in d["anchor"]))


def _velocity_positions(discretization):
    """Half-unit positions of velocity DoFs of the elements touching node (0,0)."""
    pts = set()
    for ci in range(-2, 2):
        for cj in range(-2, 2):
            shift = (2 * ci, 2 * cj)
            for elem in cell_layout(discretization):
                ppos = [(p[0] + shift[0], p[1] + shift[1]) for p in elem.pdofs]
                if (0, 0) in ppos:
                    pts.update((p[0] + shift[0], p[1] + shift[1]) for p in elem.vdofs)
    return pts


@lru_cache(maxsize=None)
def build_patch(discretization: str, kind: str) -> PatchSpec:
    """Patch geometry with sites ordered u1 (N,X,Y,C), u2 (N,X,Y,C), p.

    Within a type sites run bottom to top, left to right.
    """
    kind = kind.upper()
    if kind not in PATCH_KINDS:
        raise ValueError(f"unknown patch kind {kind!r}; expected one of {PATCH_KINDS}")
    pts = _velocity_positions(discretization)
    if kind == "VKE":
        pts = {p for p in pts if dof_type_of(p) is not DofType.N or p == (0, 0)}
    ordered = sorted(pts, key=lambda p: (_TYPE_ORDER[dof_type_of(p)], p[1], p[0]))
    sites = []
    for comp in ("u1", "u2"):
        sites += [Site(comp, dof_type_of(p), (Fraction(p[0], 2), Fraction(p[1], 2)))
                  for p in ordered]
    sites.append(Site("p", DofType.N, (Fraction(0), Fraction(0))))
    anchor = (Fraction(0), Fraction(-1)) if discretization == "P2P1" else (
        Fraction(-1), Fraction(-1))
    return PatchSpec(discretization, kind, tuple(sites), anchor)


@dataclass(frozen=True)
class WeightScheme:
    """Diagonal patch weights.

    ``variant`` is ``none``, ``geometric``, ``three`` (N-velocity,
    other velocity, pressure) or ``five`` (N, X, Y, C velocity, pressure).
    """

    variant: str = "none"
    values: tuple = ()

    def __post_init__(self):
        need = {"none": 0, "geometric": 0, "three": 3, "five": 5}
        if self.variant not in need:
            raise ValueError(f"unknown weight scheme {self.variant!r}")
        if len(self.values) != need[self.variant]:
            raise ValueError(f"{self.variant} weights need {need[self.variant]} values")

    @classmethod
    def parse(cls, spec):
        """Accept ``"none"``, ``"geometric"``, a dict or a list of 3/5 weights."""
        if isinstance(spec, WeightScheme):
            return spec
        if spec is None:
            return cls()
        if isinstance(spec, str):
            return cls(spec.lower())
        if isinstance(spec, dict):
            return cls(spec["variant"], tuple(float(v) for v in spec.get("values", ())))
        vals = tuple(float(v) for v in spec)
        return cls({3: "three", 5: "five"}.get(len(vals), "invalid"), vals)

    def diagonal(self, patch: PatchSpec) -> np.ndarray:
        if self.variant == "none":
            return np.ones(len(patch))
        if self.variant == "geometric":
            counts = patch.counts()
            return np.array([1.0 / counts[s.label()] for s in patch.sites])
        out = []
        for s in patch.sites:
            if s.field == "p":
                idx = len(self.values) - 1
            elif self.variant == "three":
                idx = 0 if s.dof_type is DofType.N else 1
            else:
                idx = _TYPE_ORDER[s.dof_type]
            out.append(self.values[idx])
        return np.array(out)

    def to_dict(self):
        return {"variant": self.variant, "values": list(self.values)}


def assemble_patch_matrix(stencils: OperatorStencilSet, patch: PatchSpec, h=1.0) -> np.ndarray:
    """Patch matrix from infinite-grid stencil couplings between sites."""
    if stencils.discretization != patch.discretization:
        raise ValueError("patch and stencils belong to different discretizations")
    blocks = stencils.blocks()
    m = len(patch)
    K = np.zeros((m, m))
    for r, sr in enumerate(patch.sites):
        for c, sc in enumerate(patch.sites):
            st = blocks.get((sr.label(), sc.label()))
            if st is None:
                continue
            d = (sc.offset[0] - sr.offset[0], sc.offset[1] - sr.offset[1])
            v = st.entries.get(d)
            if v is not None:
                K[r, c] = float(v) * h ** st.h_power
    return K


def relative_fourier_matrix(patch: PatchSpec, theta, anchor=None) -> np.ndarray:
    """Diagonal of Phi: ``exp(i theta.(x_j - x_s))`` per site, shape ``(..., m)``."""
    a = patch.anchor if anchor is None else anchor
    rel = patch.offsets() - np.array([float(a[0]), float(a[1])])
    return np.exp(1j * (np.asarray(theta, dtype=float) @ rel.T))


def duplication_matrix(patch: PatchSpec) -> np.ndarray:
    """0/1 matrix mapping the 9 type coefficients to the patch sites."""
    V = np.zeros((len(patch), 9))
    for j, s in enumerate(patch.sites):
        V[j, LABELS.index(s.label())] = 1.0
    return V


def _local_solves(Ki, phi, V):
    """``(Phi^H K_i Phi)^{-1} V`` for a batch of phase diagonals ``phi``."""
    Kt = np.conj(phi)[..., :, None] * Ki * phi[..., None, :]
    try:
        return np.linalg.solve(Kt, np.broadcast_to(V, Kt.shape[:-1] + (9,)))
    except np.linalg.LinAlgError as exc:
        raise SingularPatch("patch matrix is singular") from exc


def vanka_symbol(patch: PatchSpec, weights, stencils: OperatorStencilSet, theta, h=1.0,
                 anchor=None) -> np.ndarray:
    """Additive Vanka symbol ``V^T D (Phi^H K_i Phi)^{-1} V``, shape ``(..., 9, 9)``."""
    Ki = assemble_patch_matrix(stencils, patch, h)
    _check_factorizable(Ki)
    V = duplication_matrix(patch)
    d = WeightScheme.parse(weights).diagonal(patch)
    Y = _local_solves(Ki, relative_fourier_matrix(patch, theta, anchor), V)
    return (V.T * d) @ Y


def _check_factorizable(Ki):
    if np.linalg.matrix_rank(Ki) < Ki.shape[0]:
        raise SingularPatch("patch matrix is singular")


class VankaSymbolCache:
    """Local solves cached over a fixed set of base frequencies.

    ``minv(weights)`` returns the Vanka symbols at the four harmonics of every
    cached frequency, shape ``(n, 4, 9, 9)``; only the cheap diagonal
    weighting is redone when the weights change.
    """

    def __init__(self, patch: PatchSpec, stencils: OperatorStencilSet, thetas, h=1.0):
        self.patch = patch
        Ki = assemble_patch_matrix(stencils, patch, h)
        _check_factorizable(Ki)
        self.V = duplication_matrix(patch)
        self.Y = _local_solves(Ki, relative_fourier_matrix(patch, harmonics(thetas)), self.V)

    def minv(self, weights, Y=None) -> np.ndarray:
        d = weights if isinstance(weights, np.ndarray) else \
            WeightScheme.parse(weights).diagonal(self.patch)
        return (self.V.T * d) @ (self.Y if Y is None else Y)
