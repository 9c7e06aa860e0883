"""Concrete Vanka patches on an assembled system."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from ..patches import SingularPatch, WeightScheme, build_patch
from .mesh import DiscreteSystem

__all__ = ["LocalPatch", "PatchSet", "extract_patches", "submatrices"]


@dataclass(frozen=True)
class LocalPatch:
    seed: tuple  # half-unit position of the seed pressure node
    dofs: np.ndarray
    inverse: np.ndarray  # K_i^{-1}
    weights: np.ndarray  # diagonal of D_i


def submatrices(K: sp.csr_matrix, idx: np.ndarray) -> np.ndarray:
    """Dense ``K[idx_g][:, idx_g]`` for every row ``idx_g`` of ``idx``."""
    K = K.tocsr()
    K.sort_indices()
    n = K.shape[1]
    rows = np.repeat(np.arange(K.shape[0], dtype=np.int64), np.diff(K.indptr))
    keys = rows * n + K.indices
    g, m = idx.shape
    out = np.empty((g, m, m))
    chunk = max(1, 2_000_000 // (m * m))
    for s in range(0, g, chunk):
        ii = idx[s:s + chunk].astype(np.int64)
        q = (ii[:, :, None] * n + ii[:, None, :]).ravel()
        pos = np.minimum(np.searchsorted(keys, q), len(keys) - 1)
        hit = keys[pos] == q
        out[s:s + chunk] = np.where(hit, K.data[pos], 0.0).reshape(len(ii), m, m)
    return out


def _invert(Ks, seeds):
    try:
        inv = np.linalg.inv(Ks)
    except np.linalg.LinAlgError:
        inv = None
    if inv is not None:
        err = np.abs(Ks @ inv - np.eye(Ks.shape[1])).max(axis=(1, 2))
        bad = np.flatnonzero(~np.isfinite(err) | (err > 1e-6))
    else:
        bad = [i for i in range(len(Ks)) if np.linalg.matrix_rank(Ks[i]) < Ks.shape[1]]
    if len(bad):
        raise SingularPatch(f"singular patch matrix at seed node {tuple(seeds[bad[0]])} "
                            f"(half-unit coordinates)")
    return inv


class PatchSet:
    """All patches of a system, in lexicographic seed order."""

    def __init__(self, system: DiscreteSystem, kind, weights, seeds, dofs, inverses, diag):
        self.system = system
        self.kind = kind
        self.weights = weights
        self.seeds = seeds
        self._dofs = dofs
        self._inv = inverses
        self._diag = diag

    def __len__(self):
        return len(self._dofs)

    def __getitem__(self, i) -> LocalPatch:
        return LocalPatch(tuple(int(v) for v in self.seeds[i]), self._dofs[i], self._inv[i],
                          self._diag[i])

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def sizes(self):
        return np.array([len(d) for d in self._dofs])

    @cached_property
    def additive_operator(self) -> sp.csr_matrix:
        """``sum_i V_i D_i K_i^{-1} V_i^T`` as a sparse matrix."""
        rows, cols, vals = [], [], []
        for d, inv, w in zip(self._dofs, self._inv, self._diag):
            rows.append(np.repeat(d, len(d)))
            cols.append(np.tile(d, len(d)))
            vals.append((w[:, None] * inv).ravel())
        n = self.system.size
        M = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(n, n)).tocsr()
        M.sum_duplicates()
        return M

    def apply_additive(self, r):
        return self.additive_operator @ r

    @cached_property
    def _row_blocks(self):
        K = self.system.K
        return [K[d] for d in self._dofs]

    def sweep(self, x, b):
        """One multiplicative Schwarz sweep, patches in seed order; updates ``x``."""
        for d, inv, w, Kd in zip(self._dofs, self._inv, self._diag, self._row_blocks):
            x[d] += w * (inv @ (b[d] - Kd @ x))
        return x

    def apply_multiplicative(self, r):
        """The multiplicative preconditioner: one sweep from zero for residual ``r``."""
        return self.sweep(np.zeros_like(r), r)


def extract_patches(system: DiscreteSystem, kind="VKI", weights="none") -> PatchSet:
    """One patch per pressure node with the geometry of ``build_patch``.

    Sites outside a Dirichlet domain or on its boundary are dropped.
    Geometric weights are the reciprocal of the number of patches that
    actually contain each DoF; other schemes keep their per-type values.
    """
    mesh = system.mesh
    spec = build_patch(mesh.discretization, kind)
    scheme = WeightScheme.parse(weights)
    seeds = mesh.pressure_lattice()
    fields = np.array([("u1", "u2", "p").index(s.field) for s in spec.sites])
    half = np.array([[int(2 * s.offset[0]), int(2 * s.offset[1])] for s in spec.sites])
    idx = np.full((len(seeds), len(spec)), -1, dtype=np.int64)
    for f in range(3):
        cols = np.flatnonzero(fields == f)
        pi = seeds[:, None, 0] + half[None, cols, 0]
        pj = seeds[:, None, 1] + half[None, cols, 1]
        idx[:, cols] = system.index(f, pi, pj)
    valid = idx >= 0
    if scheme.variant == "geometric":
        counts = np.bincount(idx[valid], minlength=system.size)
        site_w = np.where(valid, 1.0 / np.maximum(counts[np.maximum(idx, 0)], 1), 0.0)
    else:
        site_w = np.broadcast_to(scheme.diagonal(spec), idx.shape)

    dofs, inverses, diag = [None] * len(seeds), [None] * len(seeds), [None] * len(seeds)
    masks, group = np.unique(valid, axis=0, return_inverse=True)
    for gi, mask in enumerate(masks):
        members = np.flatnonzero(group.ravel() == gi)
        sub = idx[members][:, mask]
        inv = _invert(submatrices(system.K, sub), seeds[members])
        w = site_w[members][:, mask]
        for k, p in enumerate(members):
            dofs[p], inverses[p], diag[p] = sub[k], inv[k], np.ascontiguousarray(w[k])
    return PatchSet(system, spec.kind, scheme, seeds, dofs, inverses, diag)
