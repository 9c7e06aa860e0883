"""Fourier symbols and the two-grid error-propagation symbol.

Frequencies are pairs ``theta = (theta1, theta2)``.  Every routine accepts a
batch of frequencies with shape ``(..., 2)`` and returns symbols with the
batch dimensions leading, so a whole sampling grid is evaluated at once.

Velocity/pressure symbols use the 9-dimensional type-indexed ordering
``u1:N,X,Y,C; u2:N,X,Y,C; p:N``.  Two-grid symbols are 36-dimensional, one
9-block per harmonic in the order ``(0,0), (1,0), (0,1), (1,1)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .stencils import VELOCITY_TYPES, DofType, OperatorStencilSet, StaggeredStencil

__all__ = [
    "LABELS",
    "ALPHAS",
    "SingularCoarseSymbol",
    "SymbolMatrix",
    "SamplingGrid",
    "LFAResult",
    "is_low_frequency",
    "harmonics",
    "stencil_symbol",
    "stokes_symbol",
    "restriction_symbol",
    "interpolation_symbol",
    "coarse_symbol",
    "blockdiag",
    "cgc_symbol",
    "twogrid_symbol",
    "spectral_radius",
    "sampled_convergence_factor",
    "write_radius_csv",
    "write_eigenvalue_csv",
]

LABELS = tuple([("u1", t) for t in VELOCITY_TYPES] + [("u2", t) for t in VELOCITY_TYPES]
               + [("p", DofType.N)])
ALPHAS = ((0, 0), (1, 0), (0, 1), (1, 1))
HARMONIC_LABELS = tuple((a, lab) for a in ALPHAS for lab in LABELS)
_INDEX = {lab: i for i, lab in enumerate(LABELS)}


class SingularCoarseSymbol(ArithmeticError):
    """The coarse symbol is (numerically) singular at the requested frequency."""


@dataclass
class SymbolMatrix:
    """Complex symbol with labelled rows and columns (batch dims lead)."""

    data: np.ndarray
    row_labels: tuple
    col_labels: tuple

    def __post_init__(self):
        if self.data.shape[-2:] != (len(self.row_labels), len(self.col_labels)):
            raise ValueError(f"symbol shape {self.data.shape[-2:]} does not match labels "
                             f"({len(self.row_labels)}, {len(self.col_labels)})")

    def block(self, rows, cols):
        ri = [self.row_labels.index(r) for r in rows]
        ci = [self.col_labels.index(c) for c in cols]
        return self.data[..., ri, :][..., ci]


def is_low_frequency(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    return np.all((theta >= -np.pi / 2) & (theta < np.pi / 2), axis=-1)


def harmonics(theta) -> np.ndarray:
    """The four harmonics of low frequencies ``theta``, shape ``(..., 4, 2)``."""
    theta = np.asarray(theta, dtype=float)
    if not np.all(is_low_frequency(theta)):
        raise ValueError("base frequency must lie in [-pi/2, pi/2)^2")
    return theta[..., None, :] + np.pi * np.asarray(ALPHAS, dtype=float)


def stencil_symbol(st: StaggeredStencil, theta) -> np.ndarray:
    """``sum_k s_k exp(i theta.k)`` without the h-power factor."""
    return st.symbol(theta)


class _CompiledSymbol:
    """Vectorised evaluator for a matrix of stencils.

    ``entries`` maps ``(row, col)`` to a stencil; the symbol at ``theta`` is
    ``sum over entries of s_k h^p exp(i theta.k)`` scattered into ``shape``.
    """

    def __init__(self, entries, shape, signs=None):
        offs, vals, hps, flat = [], [], [], []
        for (r, c), st in entries.items():
            o, v = st.arrays()
            offs.append(o)
            vals.append(v)
            hps.append(np.full(len(v), st.h_power))
            flat.append(np.full(len(v), r * shape[1] + c))
        self.shape = shape
        self.offsets = np.concatenate(offs) if offs else np.zeros((0, 2))
        self.values = np.concatenate(vals) if vals else np.zeros(0)
        self.h_powers = np.concatenate(hps) if hps else np.zeros(0)
        flat = np.concatenate(flat).astype(int) if flat else np.zeros(0, int)
        self.scatter = np.zeros((len(self.values), shape[0] * shape[1]))
        self.scatter[np.arange(len(flat)), flat] = 1.0

    def __call__(self, theta, h=1.0):
        theta = np.asarray(theta, dtype=float)
        coef = self.values * np.power(float(h), self.h_powers)
        terms = coef * np.exp(1j * (theta @ self.offsets.T))
        return (terms @ self.scatter).reshape(theta.shape[:-1] + self.shape)


_COMPILED: dict = {}


def _compiled(stencils: OperatorStencilSet, what: str) -> _CompiledSymbol:
    key = (id(stencils), what)
    if key not in _COMPILED:
        if what == "K":
            entries = {(_INDEX[t], _INDEX[s]): st for (t, s), st in stencils.blocks().items()}
        else:
            entries = {}
            for comp in ("u1", "u2"):
                for tc in VELOCITY_TYPES:
                    for tf in VELOCITY_TYPES:
                        entries[_INDEX[comp, tc], _INDEX[comp, tf]] = stencils.restriction_v[tc][tf]
            entries[8, 8] = stencils.restriction_p
        _COMPILED[key] = (stencils, _CompiledSymbol(entries, (9, 9)))
    return _COMPILED[key][1]


def stokes_symbol(stencils: OperatorStencilSet, theta, h=1.0) -> np.ndarray:
    """9x9 symbol of the Stokes operator at ``theta`` (shape ``(..., 9, 9)``)."""
    if h <= 0:
        raise ValueError("h must be positive")
    return _compiled(stencils, "K")(theta, h)


# coarse-grid type sign e^{i pi alpha . x_c / h}
_SIGNS = np.array([[(-1) ** (a[0] * lab[1].value[0] + a[1] * lab[1].value[1])
                    for lab in LABELS] for a in ALPHAS], dtype=float)


def restriction_symbol(stencils: OperatorStencilSet, theta, alpha=None) -> np.ndarray:
    """Restriction symbol.

    With ``alpha`` given, ``theta`` is taken as the harmonic frequency
    ``theta^alpha`` and the signed 9x9 block is returned.  Otherwise
    ``theta`` is a low base frequency and the full ``(..., 9, 36)`` symbol
    over its four harmonics is returned.
    """
    comp = _compiled(stencils, "R")
    if alpha is not None:
        sign = _SIGNS[ALPHAS.index(tuple(alpha))]
        return sign[:, None] * comp(theta)
    th = harmonics(theta)
    blocks = _SIGNS[:, :, None] * comp(th)  # (..., 4, 9, 9)
    return np.concatenate([blocks[..., a, :, :] for a in range(4)], axis=-1)


def interpolation_symbol(stencils: OperatorStencilSet, theta) -> np.ndarray:
    """``(..., 36, 9)`` interpolation symbol, one quarter of R^H."""
    R = restriction_symbol(stencils, theta)
    return 0.25 * np.conj(np.swapaxes(R, -1, -2))


def coarse_symbol(stencils: OperatorStencilSet, theta, h=1.0) -> np.ndarray:
    """Rediscretised coarse symbol at frequency ``2 theta`` with mesh size 2h."""
    return stokes_symbol(stencils, 2.0 * np.asarray(theta, dtype=float), 2.0 * h)


def blockdiag(blocks) -> np.ndarray:
    """``(..., 4, n, n)`` -> ``(..., 4n, 4n)`` block-diagonal matrix."""
    blocks = np.asarray(blocks)
    nb, n = blocks.shape[-3], blocks.shape[-1]
    out = np.zeros(blocks.shape[:-3] + (nb * n, nb * n), dtype=blocks.dtype)
    for a in range(nb):
        out[..., a * n:(a + 1) * n, a * n:(a + 1) * n] = blocks[..., a, :, :]
    return out


def fine_symbols(stencils: OperatorStencilSet, theta, h=1.0) -> np.ndarray:
    """Stokes symbols at the four harmonics, shape ``(..., 4, 9, 9)``."""
    return stokes_symbol(stencils, harmonics(theta), h)


def _min_singular(K):
    return np.linalg.svd(K, compute_uv=False)[..., -1]


def cgc_symbol(stencils: OperatorStencilSet, theta, h=1.0, eps_sing=1e-10, galerkin=False):
    """``(..., 36, 36)`` coarse-grid correction ``I - P K_H^{-1} R K``.

    Raises :class:`SingularCoarseSymbol` if the coarse symbol has a singular
    value below ``eps_sing`` at any of the requested frequencies.
    """
    theta = np.asarray(theta, dtype=float)
    K = blockdiag(fine_symbols(stencils, theta, h))
    R = restriction_symbol(stencils, theta)
    P = interpolation_symbol(stencils, theta)
    KH = R @ K @ P if galerkin else coarse_symbol(stencils, theta, h)
    smin = _min_singular(KH)
    if np.any(smin < eps_sing):
        raise SingularCoarseSymbol(f"coarse symbol singular (sigma_min={np.min(smin):.3e})")
    corr = P @ np.linalg.solve(KH, R @ K)
    return np.eye(36) - corr


@dataclass
class TwoGridSymbol:
    """Two-grid symbol and its constituents at one batch of base frequencies."""

    E: np.ndarray
    K: np.ndarray
    R: np.ndarray
    P: np.ndarray
    KH: np.ndarray
    S_pre: np.ndarray
    S_post: np.ndarray


def twogrid_symbol(stencils: OperatorStencilSet, smoother: Callable, theta, h=1.0,
                   eps_sing=1e-10) -> TwoGridSymbol:
    """``E = S_post (I - P K_H^{-1} R K) S_pre`` on the 36-dimensional space.

    ``smoother(theta_harmonics, K_blocks)`` must return the per-harmonic
    pre- and post-smoother symbols, each of shape ``(..., 4, 9, 9)``.
    """
    theta = np.asarray(theta, dtype=float)
    Kb = fine_symbols(stencils, theta, h)
    K = blockdiag(Kb)
    R = restriction_symbol(stencils, theta)
    P = interpolation_symbol(stencils, theta)
    KH = coarse_symbol(stencils, theta, h)
    if np.any(_min_singular(KH) < eps_sing):
        raise SingularCoarseSymbol("coarse symbol singular")
    C = np.eye(36) - P @ np.linalg.solve(KH, R @ K)
    pre, post = smoother(harmonics(theta), Kb)
    Spre, Spost = blockdiag(pre), blockdiag(post)
    return TwoGridSymbol(Spost @ C @ Spre, K, R, P, KH, Spre, Spost)


def spectral_radius(M) -> np.ndarray:
    """Largest eigenvalue modulus of each matrix in a batch (dense LAPACK)."""
    return np.max(np.abs(np.linalg.eigvals(M)), axis=-1)


@dataclass(frozen=True)
class SamplingGrid:
    """Cell-centred sampling of the low-frequency box.

    ``theta_i = -pi/2 + pi (i + 1/2) / n`` in each direction.
    """

    n: int = 32
    eps_sing: float = 1e-10

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("sampling resolution must be positive")

    def axis(self):
        return -np.pi / 2 + np.pi * (np.arange(self.n) + 0.5) / self.n

    def thetas(self) -> np.ndarray:
        """Sample frequencies, shape ``(n*n, 2)``, theta1 varying fastest."""
        t = self.axis()
        t1, t2 = np.meshgrid(t, t)
        return np.stack([t1.ravel(), t2.ravel()], axis=-1)


@dataclass
class LFAResult:
    """Sampled two-grid factor with its per-frequency radii."""

    rho: float
    argmax: tuple
    excluded: int
    thetas: np.ndarray = field(repr=False)
    radii: np.ndarray = field(repr=False)


def sampled_convergence_factor(error_symbol: Callable, grid: SamplingGrid,
                               coarse: Callable | None = None) -> LFAResult:
    """Maximum spectral radius of ``error_symbol(theta)`` over ``grid``.

    ``coarse(theta)`` optionally returns the coarse symbols so samples with a
    near-singular coarse operator can be excluded and counted.
    """
    th = grid.thetas()
    keep = np.ones(len(th), dtype=bool)
    if coarse is not None:
        keep = _min_singular(coarse(th)) >= grid.eps_sing
    radii = np.full(len(th), np.nan)
    if keep.any():
        radii[keep] = spectral_radius(error_symbol(th[keep]))
    i = int(np.nanargmax(radii)) if keep.any() else 0
    return LFAResult(float(radii[i]) if keep.any() else float("nan"), tuple(th[i]),
                     int((~keep).sum()), th, radii)


def write_radius_csv(path, thetas, radii):
    """Per-frequency spectral radii as ``theta1,theta2,rho`` rows."""
    data = np.column_stack([np.asarray(thetas), np.asarray(radii)])
    np.savetxt(path, data, delimiter=",", header="theta1,theta2,rho", comments="",
               fmt="%.12g")


def write_eigenvalue_csv(path, eigenvalues):
    ev = np.asarray(eigenvalues).ravel()
    np.savetxt(path, np.column_stack([ev.real, ev.imag]), delimiter=",", header="re,im",
               comments="", fmt="%.12g")
