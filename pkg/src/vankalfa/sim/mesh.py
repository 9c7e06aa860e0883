"""Structured meshes of the unit square and sparse Stokes assembly.

Velocity DoFs live on the half-unit lattice (spacing h/2), pressure DoFs on
the mesh vertices.  Global numbering is u1, then u2, then p, each
lexicographic in (y, x).
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from ..fem import DISCRETIZATIONS, cell_layout, reference_element
from ..stencils import dof_type_of

__all__ = ["BOUNDARIES", "MeshConfig", "DiscreteSystem", "InvertedElementError", "assemble"]

BOUNDARIES = ("periodic", "dirichlet")
FIELD_NAMES = ("u1", "u2", "p")


class InvertedElementError(ValueError):
    """The mesh map produced an element with non-positive Jacobian."""


@dataclass(frozen=True)
class MeshConfig:
    """Uniform ``n x n`` mesh of the unit square, optionally distorted.

    The distortion moves the vertices by
    ``(x + eps s(x) s(y), y - eps s(x) s(y))`` with ``s(t) = sin(2 pi t)``;
    elements stay straight-sided.
    """

    discretization: str = "P2P1"
    n: int = 20
    boundary: str = "periodic"
    epsilon: float = 0.0

    def __post_init__(self):
        disc = self.discretization.upper()
        if disc not in DISCRETIZATIONS:
            raise ValueError(f"unknown discretization {self.discretization!r}; "
                             f"expected one of {DISCRETIZATIONS}")
        object.__setattr__(self, "discretization", disc)
        bnd = self.boundary.lower()
        if bnd not in BOUNDARIES:
            raise ValueError(f"unknown boundary {self.boundary!r}; expected one of {BOUNDARIES}")
        object.__setattr__(self, "boundary", bnd)
        if int(self.n) != self.n or self.n < 2 or self.n % 2:
            raise ValueError(f"n must be an even integer >= 2 (got {self.n})")
        object.__setattr__(self, "n", int(self.n))
        if self.epsilon < 0:
            raise ValueError("distortion epsilon must be non-negative")
        # the map has Jacobian determinant 1 + 2 pi eps sin(2 pi (y - x)) >= 1 - 2 pi eps
        if 2 * np.pi * self.epsilon >= 1:
            raise InvertedElementError(
                f"distortion epsilon={self.epsilon} folds the mesh (need 2*pi*eps < 1)")
        object.__setattr__(self, "epsilon", float(self.epsilon))

    @property
    def h(self):
        return 1.0 / self.n

    @property
    def periodic(self):
        return self.boundary == "periodic"

    def coarse(self) -> "MeshConfig":
        return MeshConfig(self.discretization, self.n // 2, self.boundary, self.epsilon)

    def map(self, x, y):
        """Physical coordinates of logical points ``(x, y)``."""
        if self.epsilon == 0:
            return x, y
        s = self.epsilon * np.sin(2 * np.pi * x) * np.sin(2 * np.pi * y)
        return x + s, y - s

    def to_dict(self):
        return asdict(self)

    # lattice numbering ---------------------------------------------------
    def velocity_lattice(self):
        """Half-unit positions of the velocity DoFs of one component, in order."""
        m = 2 * self.n
        r = np.arange(m) if self.periodic else np.arange(1, m)
        jj, ii = np.meshgrid(r, r, indexing="ij")
        return np.stack([ii.ravel(), jj.ravel()], axis=1)

    def pressure_lattice(self):
        r = np.arange(self.n) if self.periodic else np.arange(self.n + 1)
        jj, ii = np.meshgrid(r, r, indexing="ij")
        return 2 * np.stack([ii.ravel(), jj.ravel()], axis=1)

    def velocity_index(self, i, j):
        """Scalar velocity index of half-unit points; -1 where no DoF exists."""
        i, j = np.asarray(i), np.asarray(j)
        m = 2 * self.n
        if self.periodic:
            return (j % m) * m + (i % m)
        inside = (i > 0) & (i < m) & (j > 0) & (j < m)
        return np.where(inside, (j - 1) * (m - 1) + (i - 1), -1)

    def pressure_index(self, i, j):
        """Pressure index of half-unit vertex points; -1 outside the domain."""
        i, j = np.asarray(i), np.asarray(j)
        if self.periodic:
            return ((j // 2) % self.n) * self.n + (i // 2) % self.n
        m = 2 * self.n
        inside = (i >= 0) & (i <= m) & (j >= 0) & (j <= m) & (i % 2 == 0) & (j % 2 == 0)
        return np.where(inside, (j // 2) * (self.n + 1) + i // 2, -1)


@dataclass
class DiscreteSystem:
    """Assembled saddle-point matrix ``K = [[A, 0, Bx^T], [0, A, By^T], [Bx, By, 0]]``."""

    mesh: MeshConfig
    K: sp.csr_matrix
    n_velocity: int
    n_pressure: int
    field: np.ndarray  # 0, 1, 2 for u1, u2, p
    position: np.ndarray  # half-unit lattice position of every DoF
    nullspace: np.ndarray  # orthonormal columns

    @property
    def size(self):
        return self.K.shape[0]

    @cached_property
    def dof_type(self):
        return np.array([dof_type_of(tuple(p)).name for p in self.position])

    def index(self, field, i, j):
        """Global index of a DoF from its field and half-unit position (-1 if absent)."""
        f = FIELD_NAMES.index(field) if isinstance(field, str) else int(field)
        if f == 2:
            loc = self.mesh.pressure_index(i, j)
            return np.where(loc >= 0, loc + 2 * self.n_velocity, -1)
        loc = self.mesh.velocity_index(i, j)
        return np.where(loc >= 0, loc + f * self.n_velocity, -1)

    def project(self, x):
        """Remove the null-space component of ``x``."""
        Z = self.nullspace
        return x - Z @ (Z.T @ x)

    def write_coo(self, path):
        """Write ``K`` as ``row col value`` lines."""
        coo = self.K.tocoo()
        with open(path, "w") as fh:
            fh.write(f"# {coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
            for r, c, v in zip(coo.row, coo.col, coo.data):
                fh.write(f"{r} {c} {v:.17g}\n")


def _elements(mesh: MeshConfig):
    """Half-unit velocity and pressure node positions of every element."""
    vpos, ppos = [], []
    cells = np.array([(cx, cy) for cy in range(mesh.n) for cx in range(mesh.n)])
    for elem in cell_layout(mesh.discretization):
        vpos.append(2 * cells[:, None, :] + np.array(elem.vdofs)[None])
        ppos.append(2 * cells[:, None, :] + np.array(elem.pdofs)[None])
    # element-major order: all elements of cell 0, then cell 1, ...
    vpos = np.stack(vpos, axis=1).reshape(-1, vpos[0].shape[1], 2)
    ppos = np.stack(ppos, axis=1).reshape(-1, ppos[0].shape[1], 2)
    return vpos, ppos


def _physical(mesh, pos):
    x, y = mesh.map(pos[..., 0] * (mesh.h / 2), pos[..., 1] * (mesh.h / 2))
    return np.stack([x, y], axis=-1)


def _check_det(det, mesh):
    bad = np.flatnonzero(np.min(det.reshape(len(det), -1), axis=1) <= 0)
    if bad.size:
        raise InvertedElementError(
            f"{bad.size} inverted elements (first: element {bad[0]}) for epsilon={mesh.epsilon}")


def _triangle_matrices(mesh, vpos):
    ref = reference_element(mesh.discretization)
    X = _physical(mesh, vpos[:, :3])
    J = np.stack([X[:, 1] - X[:, 0], X[:, 2] - X[:, 0]], axis=2)  # columns: images of e1, e2
    det = np.linalg.det(J)
    _check_det(det, mesh)
    Jinv = np.linalg.inv(J)  # Jinv[e, a, x] = d xi_a / d x
    G = Jinv @ np.swapaxes(Jinv, 1, 2)
    A = det[:, None, None] * np.einsum("eab,abij->eij", G, ref.stiff_array())
    B = -det[:, None, None, None] * np.einsum("eax,aqj->exqj", Jinv, ref.mixed_array())
    return A, B


def _quad_matrices(mesh, vpos, order=4):
    ref = reference_element(mesh.discretization)
    g, w = np.polynomial.legendre.leggauss(order)
    g, w = (g + 1) / 2, w / 2
    xi, eta = np.meshgrid(g, g, indexing="xy")
    xi, eta, wq = xi.ravel(), eta.ravel(), np.outer(w, w).ravel()
    grads = ref.vbasis_grad()
    dphi = np.stack([np.stack([gr[a].evalf(xi, eta) for a in (0, 1)], axis=-1)
                     for gr in grads], axis=1)  # (Q, nv, 2)
    qv = np.stack([q.evalf(xi, eta) for q in ref.pbasis], axis=1)  # (Q, np)
    corners = [0, 2, 6, 8]  # vertex nodes of the 3x3 velocity layout
    X = _physical(mesh, vpos[:, corners])  # (E, 4, 2)

    def jac(s, t):
        dN = np.stack([np.stack([-(1 - t), 1 - t, -t, t], axis=-1),
                       np.stack([-(1 - s), -s, 1 - s, s], axis=-1)], axis=-1)  # (Q, 4, 2)
        return np.einsum("ekc,qka->eqca", X, dN)

    cs = np.array([0.0, 1.0, 0.0, 1.0]), np.array([0.0, 0.0, 1.0, 1.0])
    _check_det(np.linalg.det(jac(*cs)), mesh)
    J = jac(xi, eta)
    det = np.linalg.det(J)
    _check_det(det, mesh)
    Jinv = np.linalg.inv(J)  # (E, Q, a, c)
    gph = np.einsum("qia,eqac->eqic", dphi, Jinv)
    wd = det * wq[None]
    A = np.einsum("eq,eqic,eqjc->eij", wd, gph, gph)
    B = -np.einsum("eq,qk,eqjc->eckj", wd, qv, gph)
    return A, B


def _scatter(rows, cols, vals, shape):
    r = np.broadcast_to(rows[:, :, None], vals.shape).ravel()
    c = np.broadcast_to(cols[:, None, :], vals.shape).ravel()
    v = vals.ravel()
    keep = (r >= 0) & (c >= 0)
    return sp.coo_matrix((v[keep], (r[keep], c[keep])), shape=shape).tocsr()


def assemble(mesh: MeshConfig) -> DiscreteSystem:
    """Assemble the Stokes saddle-point system on ``mesh``.

    Dirichlet meshes drop the boundary velocity DoFs; pressure is never
    constrained, so constant pressure spans the null space.  Periodic meshes
    add the two constant velocities.
    """
    vpos, ppos = _elements(mesh)
    if mesh.discretization == "P2P1":
        Ae, Be = _triangle_matrices(mesh, vpos)
    else:
        Ae, Be = _quad_matrices(mesh, vpos)
    vidx = mesh.velocity_index(vpos[..., 0], vpos[..., 1])
    pidx = mesh.pressure_index(ppos[..., 0], ppos[..., 1])
    nv = len(mesh.velocity_lattice())
    npr = len(mesh.pressure_lattice())
    A = _scatter(vidx, vidx, Ae, (nv, nv))
    Bx = _scatter(pidx, vidx, Be[:, 0], (npr, nv))
    By = _scatter(pidx, vidx, Be[:, 1], (npr, nv))
    K = sp.bmat([[A, None, Bx.T], [None, A, By.T], [Bx, By, None]], format="csr")
    K.sum_duplicates()
    K.sort_indices()

    vl, pl = mesh.velocity_lattice(), mesh.pressure_lattice()
    field = np.concatenate([np.zeros(nv, int), np.ones(nv, int), np.full(npr, 2)])
    position = np.concatenate([vl, vl, pl])
    blocks = [np.arange(nv), nv + np.arange(nv)] if mesh.periodic else []
    blocks.append(2 * nv + np.arange(npr))
    Z = np.zeros((K.shape[0], len(blocks)))
    for c, b in enumerate(blocks):
        Z[b, c] = 1.0 / np.sqrt(len(b))
    return DiscreteSystem(mesh, K, nv, npr, field, position, Z)
