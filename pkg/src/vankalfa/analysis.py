"""Cached two-grid LFA for one discretization and patch type.

Everything that does not depend on the relaxation parameters is computed
once per sampling grid: the fine and coarse symbols, the coarse-grid
correction C and the local patch solves.  Since every smoother here is a
polynomial in ``T = M^{-1} K``, the error symbol ``S_post C S_pre`` has the
spectrum of ``C q(T)`` with ``q`` the product of both polynomials.  C is a
projector of rank 27, so with ``C = U W^H`` the nonzero spectrum is that of
the 27x27 matrix ``W^H q(T) U``.

Real stencil coefficients make the radius at ``-theta`` equal to the one at
``theta``; the sampling grid is symmetric under negation, so only samples
with ``theta2 > 0`` are evaluated.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import lfa
from .patches import VankaSymbolCache, WeightScheme, build_patch
from .relaxation import RelaxConfig, matrix_polynomial
from .stencils import assemble_element_matrices

__all__ = ["TwoGridLFA", "PredictConfig", "predict", "get_model"]

_RANK_TOL = 1e-8
_CHUNK = 4096


@dataclass(frozen=True)
class PredictConfig:
    discretization: str = "P2P1"
    patch: str = "VKI"
    relax: RelaxConfig = field(default_factory=RelaxConfig)
    sampling: int = 32

    def to_dict(self):
        return {"discretization": self.discretization, "patch": self.patch,
                "relax": self.relax.to_dict(), "sampling": self.sampling}


class TwoGridLFA:
    """LFA model over a fixed :class:`~vankalfa.lfa.SamplingGrid`."""

    def __init__(self, discretization="P2P1", patch="VKI", grid=None, h=1.0, symmetric=True):
        self.discretization = discretization
        self.patch = build_patch(discretization, patch)
        self.grid = grid or lfa.SamplingGrid()
        self.stencils = assemble_element_matrices(discretization)
        th = self.grid.thetas()
        KH = lfa.coarse_symbol(self.stencils, th, h)
        keep = np.linalg.svd(KH, compute_uv=False)[:, -1] >= self.grid.eps_sing
        self.excluded = int((~keep).sum())
        if symmetric:
            keep &= th[:, 1] > 0
        self.symmetric = symmetric
        self.index = np.flatnonzero(keep)  # positions in the full sampling grid
        self.thetas = th[keep]
        self.K = lfa.fine_symbols(self.stencils, self.thetas, h)  # (n, 4, 9, 9)
        self.C = lfa.cgc_symbol(self.stencils, self.thetas, h, eps_sing=0.0)
        self._vanka = VankaSymbolCache(self.patch, self.stencils, self.thetas, h)
        self._reduce()
        self._T = {}

    def _reduce(self):
        U, s, Vh = np.linalg.svd(self.C)
        rank = (s > _RANK_TOL * s[:, :1]).sum(axis=1)
        if np.all(rank == 27):
            self.Wh = s[:, :27, None] * Vh[:, :27, :]  # (n, 27, 36)
            self.U = U[:, :, :27]
        else:
            self.Wh = self.C
            self.U = np.broadcast_to(np.eye(36), self.C.shape)

    @property
    def n(self):
        return len(self.thetas)

    def T(self, weights="none", idx=None):
        """Per-harmonic ``M^{-1} K`` symbols for a weight scheme or diagonal."""
        if isinstance(weights, np.ndarray) or idx is not None:
            Y = self._vanka.Y if idx is None else self._vanka.Y[idx]
            K = self.K if idx is None else self.K[idx]
            return self._vanka.minv(weights, Y) @ K
        key = WeightScheme.parse(weights)
        if key not in self._T:
            self._T[key] = self._vanka.minv(key) @ self.K
        return self._T[key]

    def full_grid(self, radii):
        """``(thetas, radii)`` on the whole sampling grid; excluded samples are NaN."""
        n = self.grid.n
        out = np.full(n * n, np.nan)
        out[self.index] = radii
        if self.symmetric:
            i2, i1 = np.divmod(self.index, n)
            out[(n - 1 - i2) * n + (n - 1 - i1)] = radii
        return self.grid.thetas(), out

    def eigenvalues_T(self, weights="none"):
        """Eigenvalues of ``M^{-1} K`` at every cached sample and harmonic."""
        return np.linalg.eigvals(self.T(weights))

    def radii_factors(self, factors, weights="none", idx=None, T=None):
        """Spectral radii for factor sets ``factors`` (c, f) at samples ``idx``.

        Each row of ``factors`` lists the weights ``w`` of the error polynomial
        ``prod (1 - w t)`` (pre and post factors together).  Returns shape
        ``(c, len(idx))``.
        """
        idx = np.arange(self.n) if idx is None else np.asarray(idx, dtype=int)
        if T is None:
            T = self.T(weights)[idx] if not isinstance(weights, np.ndarray) else \
                self.T(weights, idx)
        factors = np.atleast_2d(np.asarray(factors, dtype=float))
        c, nidx = len(factors), len(idx)
        out = np.empty((c, nidx))
        if nidx == 0:
            return out
        per = max(1, _CHUNK // nidx)
        r = self.Wh.shape[1]
        Wh = np.ascontiguousarray(self.Wh[idx].reshape(nidx, r, 4, 9).transpose(0, 2, 1, 3))
        U = self.U[idx].reshape(nidx, 4, 9, r)
        eye = np.eye(9)
        for s in range(0, c, per):
            f = factors[s:s + per]
            q = np.broadcast_to(eye, (len(f),) + T.shape).astype(complex)
            for j in range(f.shape[1]):
                w = f[:, j][:, None, None, None, None]
                q = q - w * (T[None] @ q)
            X = ((Wh[None] @ q) @ U[None]).sum(axis=2)
            out[s:s + per] = np.max(np.abs(np.linalg.eigvals(X)), axis=-1)
        return out

    def radii(self, config: RelaxConfig, idx=None):
        idx = np.arange(self.n) if idx is None else np.asarray(idx)
        pre, post = config.factors()
        return self.radii_factors([pre + post], config.weights, idx)[0]

    def rho(self, config: RelaxConfig) -> lfa.LFAResult:
        r = self.radii(config)
        i = int(np.argmax(r))
        return lfa.LFAResult(float(r[i]), tuple(self.thetas[i]), self.excluded,
                             self.thetas, r)

    def rho_factors(self, factors, weights="none", idx=None):
        """Max radius for each row of ``factors`` (all rows equal length)."""
        return self.radii_factors(factors, weights, idx).max(axis=1)

    def error_symbol(self, config: RelaxConfig, idx=None):
        """Full 36x36 error symbols ``S_post C S_pre`` (reference path)."""
        idx = np.arange(self.n) if idx is None else np.asarray(idx)
        T = self.T(config.weights)[idx]
        pre, post = config.factors()
        Spre = lfa.blockdiag(matrix_polynomial(T, pre))
        Spost = lfa.blockdiag(matrix_polynomial(T, post))
        return Spost @ self.C[idx] @ Spre


_MODELS: dict = {}


def get_model(discretization, patch, sampling=32) -> TwoGridLFA:
    """Shared cached model per (discretization, patch, sampling)."""
    key = (discretization, patch.upper(), sampling)
    if key not in _MODELS:
        _MODELS[key] = TwoGridLFA(discretization, patch, lfa.SamplingGrid(sampling))
    return _MODELS[key]


def predict(config: PredictConfig) -> lfa.LFAResult:
    return get_model(config.discretization, config.patch, config.sampling).rho(config.relax)
