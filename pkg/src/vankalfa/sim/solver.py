"""Two-grid iteration with measured per-cycle convergence factors."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from ..relaxation import RelaxConfig, apply_relaxation
from .mesh import MeshConfig, assemble
from .transfer import build_transfer
from .vanka import extract_patches

__all__ = ["Hierarchy", "StopRule", "TwoGridRun", "two_grid_solve", "summarize"]


class Hierarchy:
    """Fine system, coarse system, transfers and a factorised coarse operator.

    The coarse operator is rediscretised on the coarse mesh (``galerkin=False``)
    or formed as ``R K P``.  Its null space is removed by pinning one DoF in
    the support of each null vector (the vectors have disjoint supports);
    the correction is then projected orthogonal to the null space.
    """

    def __init__(self, mesh: MeshConfig, galerkin=False):
        self.mesh = mesh
        self.galerkin = galerkin
        self.fine = assemble(mesh)
        self.coarse = assemble(mesh.coarse())
        self.R, self.P = build_transfer(self.fine, self.coarse)
        Kc = (self.R @ self.fine.K @ self.P).tocsr() if galerkin else self.coarse.K
        self.Kc = Kc
        Z = self.coarse.nullspace
        pinned = [int(np.flatnonzero(Z[:, j])[0]) for j in range(Z.shape[1])]
        self._free = np.setdiff1d(np.arange(Kc.shape[0]), pinned)
        self._lu = spla.splu(Kc[self._free][:, self._free].tocsc())

    def coarse_solve(self, rc):
        """Minimum-norm-in-null-space solution of ``Kc e = rc`` (``rc`` projected first)."""
        rc = self.coarse.project(rc)
        e = np.zeros_like(rc)
        e[self._free] = self._lu.solve(rc[self._free])
        return self.coarse.project(e)

    def coarse_correction(self, x, b):
        r = b - self.fine.K @ x
        return x + self.P @ self.coarse_solve(self.R @ r)


@dataclass(frozen=True)
class StopRule:
    """When to stop and how to summarise the per-cycle factors.

    The run stops once the residual norm has dropped by ``rtol`` (the
    default asks for 150 orders of magnitude, reachable because residuals are
    tracked in log space), after
    ``max_cycles`` cycles, or when the factor exceeds one for
    ``diverge_after`` consecutive cycles.  If the last ``window`` factors
    spread by more than ``spread`` (relative), their geometric mean is
    reported instead of the last factor.
    """

    rtol: float = 1e-150
    max_cycles: int = 3000
    window: int = 7
    spread: float = 0.05
    diverge_after: int = 5

    def __post_init__(self):
        if not (0 < self.rtol < 1):
            raise ValueError("rtol must lie in (0, 1)")
        if self.max_cycles < 2 or self.window < 1 or self.diverge_after < 1:
            raise ValueError("max_cycles >= 2, window >= 1 and diverge_after >= 1 required")


@dataclass
class TwoGridRun:
    config: dict
    cycles: int
    log10_residuals: list
    rho_hat_history: list
    rho_hat: float
    averaged: bool
    diverged: bool
    lfa_rho: float | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


def summarize(history, stop: StopRule):
    """``(rho_hat, averaged)`` from a list of per-cycle factors."""
    if len(history) < 1:
        raise ValueError("need at least one cycle to report a factor")
    tail = np.asarray(history[-stop.window:], dtype=float)
    mean = tail.mean()
    if len(tail) > 1 and mean > 0 and (tail.max() - tail.min()) / mean > stop.spread:
        return float(np.exp(np.mean(np.log(np.maximum(tail, 1e-300))))), True
    return float(tail[-1]), False


def two_grid_solve(hierarchy: Hierarchy, relax: RelaxConfig, patch="VKI", stop=StopRule(),
                   seed=0, multiplicative=False, patches=None) -> TwoGridRun:
    """Measure two-grid convergence for ``K x = 0`` from a random start.

    The residual norm is tracked in log space: the iterate is rescaled after
    every cycle, which the homogeneous problem allows, so tolerances far
    below machine range can be used.
    """
    fine = hierarchy.fine
    K = fine.K
    if patches is None:
        patches = extract_patches(fine, patch, relax.weights)
    minv = patches.apply_multiplicative if multiplicative else patches.apply_additive

    def apply_k(v):
        return K @ v

    rng = np.random.default_rng(seed)
    x = fine.project(rng.uniform(-1.0, 1.0, fine.size))
    b = np.zeros_like(x)
    rn = np.linalg.norm(K @ x)
    logs = [float(np.log10(rn))]
    x /= rn
    history, over = [], 0
    diverged = False
    target = logs[0] + np.log10(stop.rtol)
    for _ in range(stop.max_cycles):
        x = apply_relaxation(relax, apply_k, minv, x, b, stage="pre")
        x = hierarchy.coarse_correction(x, b)
        x = apply_relaxation(relax, apply_k, minv, x, b, stage="post")
        x = fine.project(x)
        rn = float(np.linalg.norm(K @ x))
        history.append(rn)
        if rn == 0.0:
            logs.append(-np.inf)
            break
        logs.append(logs[-1] + float(np.log10(rn)))
        x /= rn
        over = over + 1 if rn > 1 else 0
        if over >= stop.diverge_after:
            diverged = True
            break
        if logs[-1] <= target:
            break
    rho_hat, averaged = summarize(history, stop)
    m = max(1, min(50, len(history) // 2))
    long_mean = float(np.exp(np.mean(np.log(np.maximum(history[-m:], 1e-300)))))
    config = {"mesh": hierarchy.mesh.to_dict(), "patch": patches.kind, "relax": relax.to_dict(),
              "stop": asdict(stop), "seed": seed, "multiplicative": bool(multiplicative),
              "coarse": "galerkin" if hierarchy.galerkin else "rediscretized"}
    return TwoGridRun(config, len(history), logs, history, rho_hat, averaged, diverged,
                      extra={"rho_hat_long": long_mean, "long_window": m})
