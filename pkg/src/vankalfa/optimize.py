"""Parameter search for the sampled two-grid convergence factor.

The objective is a maximum over frequencies of spectral radii, so it is
nonsmooth; only derivative-free methods are used.  Two accelerations keep
the searches at desk scale while returning full-grid values:

* grid searches over polynomial smoothers use branch and bound, since the
  maximum over any subset of sample frequencies is a lower bound of the
  full-grid factor;
* local searches over patch weights optimise over an active set of
  frequencies that is grown with the full-grid maximisers until the
  active-set value agrees with the full-grid one.
"""
from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import minimize

from .analysis import TwoGridLFA
from .relaxation import chebyshev_roots

__all__ = [
    "SearchSpec",
    "SearchResult",
    "grid_points",
    "brute_force",
    "brute_force_factors",
    "chebyshev_grid",
    "chebyshev_factors",
    "optimize_interval",
    "robust_minimize",
    "optimize_weights",
    "sensitivity_scan",
    "write_landscape_csv",
]

_TIE = 1e-12


@dataclass
class SearchSpec:
    """Box-constrained search problem.

    ``objective`` maps an array of points ``(c, d)`` to values ``(c,)``.
    ``constraint`` (optional) maps points to a boolean feasibility mask.
    """

    names: tuple
    bounds: tuple
    objective: Callable
    step: float | tuple = 0.1
    constraint: Callable | None = None
    simplex_scale: float = 0.1
    n_start: int = 8
    seed: int = 0
    x0: tuple | None = None

    def __post_init__(self):
        if len(self.names) != len(self.bounds):
            raise ValueError("one bound pair per parameter is required")
        for lo, hi in self.bounds:
            if not hi > lo:
                raise ValueError(f"degenerate search box [{lo}, {hi}]")


@dataclass
class SearchResult:
    params: tuple
    rho: float
    points: np.ndarray = field(default=None, repr=False)
    values: np.ndarray = field(default=None, repr=False)
    exact: np.ndarray = field(default=None, repr=False)  # False: value is a lower bound
    evaluations: int = 0


def grid_points(bounds, step, constraint=None) -> np.ndarray:
    """Lexicographically ordered grid over the box (inclusive ends)."""
    steps = step if isinstance(step, (tuple, list)) else [step] * len(bounds)
    axes = []
    for (lo, hi), h in zip(bounds, steps):
        if not (h > 0 and hi >= lo):
            raise ValueError(f"empty search box [{lo}, {hi}] or non-positive step {h}")
        n = int(np.floor((hi - lo) / h + 1e-9)) + 1
        axes.append(np.round(lo + h * np.arange(n), 10))
    pts = np.array(list(itertools.product(*axes)), dtype=float).reshape(-1, len(axes))
    if constraint is not None:
        pts = pts[constraint(pts)]
    if len(pts) == 0:
        raise ValueError("search grid is empty")
    return pts


def _argbest(values, tol=_TIE):
    """First index within ``tol`` of the minimum (points are lexicographic)."""
    vmin = np.min(values)
    return int(np.flatnonzero(values <= vmin + tol * max(1.0, abs(vmin)))[0])


def brute_force(spec: SearchSpec, chunk=256) -> SearchResult:
    """Evaluate every grid point; ties go to the lexicographically smallest."""
    pts = grid_points(spec.bounds, spec.step, spec.constraint)
    vals = np.concatenate([np.asarray(spec.objective(pts[s:s + chunk]), dtype=float)
                           for s in range(0, len(pts), chunk)])
    i = _argbest(vals)
    return SearchResult(tuple(float(v) for v in pts[i]), float(vals[i]), pts, vals,
                        np.ones(len(pts), bool),
                        len(pts))


def _coarse_subset(model: TwoGridLFA, stride=8):
    """Indices of a sub-lattice of the model's samples."""
    ax = model.grid.axis()
    pick = ax[stride // 2::stride]
    th = model.thetas
    mask = np.isin(th[:, 0], pick) & np.isin(th[:, 1], pick)
    return np.flatnonzero(mask)


def brute_force_factors(model: TwoGridLFA, points, to_factors: Callable, weights="none",
                        batch=16, seed_idx=None, verbose=False) -> SearchResult:
    """Exact grid minimisation for polynomial smoothers by branch and bound.

    ``to_factors(points)`` returns the factor weights ``(c, f)`` of every grid
    point.  Returned values are exact full-grid factors where ``exact`` is
    set and valid lower bounds elsewhere; the minimiser (lexicographic tie
    rule) is always exact.  Points with identical factors share one
    evaluation.
    """
    points = np.asarray(points, dtype=float)
    F_all = np.asarray(to_factors(points), dtype=float)
    F, inv = np.unique(np.round(F_all, 12), axis=0, return_inverse=True)
    inv = inv.ravel()
    T = model.T(weights)
    S = list(_coarse_subset(model) if seed_idx is None else seed_idx)
    lb = model.radii_factors(F, T=T[S], idx=S).max(axis=1)
    exact = np.zeros(len(F), bool)
    best, evals = np.inf, 0

    def tied(v):
        return v <= best + _TIE * max(1.0, best)

    while True:
        live = np.flatnonzero(~exact & tied(lb))
        if live.size == 0:
            break
        order = live[np.argsort(lb[live], kind="stable")][:batch]
        R = model.radii_factors(F[order], T=T)
        evals += len(order)
        vals = R.max(axis=1)
        lb[order] = vals
        exact[order] = True
        best = min(best, float(vals.min()))
        new = sorted(set(np.argmax(R, axis=1).tolist()) - set(S))
        if verbose:
            print(f"evaluated {evals}, live {live.size}, best {best:.6f}, |S| {len(S)}")
        if new:
            S += new
            rest = np.flatnonzero(~exact & tied(lb))
            if rest.size:
                extra = model.radii_factors(F[rest], T=T[new], idx=new).max(axis=1)
                lb[rest] = np.maximum(lb[rest], extra)
    vals = lb[inv]
    ex = exact[inv]
    i = int(np.flatnonzero(ex & tied(vals))[0])
    return SearchResult(tuple(float(v) for v in points[i]), float(vals[i]), points, vals, ex,
                        evals)


def chebyshev_factors(k, symmetric=True):
    """Map interval points ``(c, 2)`` to Chebyshev factor weights."""
    def f(points):
        w = np.array([1.0 / chebyshev_roots(k, a, b) for a, b in points])
        return np.concatenate([w, w], axis=1) if symmetric else w
    return f


def chebyshev_grid(step=0.1, beta_max=10.0, alpha_min=None):
    lo = step if alpha_min is None else alpha_min
    return grid_points(((lo, beta_max), (lo, beta_max)), step, lambda p: p[:, 0] < p[:, 1] - 1e-9)


def optimize_interval(model: TwoGridLFA, k, weights="none", step=0.1, beta_max=10.0,
                      symmetric=True) -> SearchResult:
    """Brute-force Chebyshev interval search with step ``step``."""
    return brute_force_factors(model, chebyshev_grid(step, beta_max),
                               chebyshev_factors(k, symmetric), weights)


def robust_minimize(spec: SearchSpec, objective=None) -> SearchResult:
    """Multi-start Nelder-Mead inside the box.

    Starts are ``spec.x0`` (if given) plus seeded uniform samples; the result
    is the best of all local searches.  ``objective`` overrides the scalar
    objective (defaults to ``spec.objective`` on a single point).
    """
    f = objective or (lambda x: float(np.asarray(spec.objective(np.atleast_2d(x)))[0]))
    lo = np.array([b[0] for b in spec.bounds], dtype=float)
    hi = np.array([b[1] for b in spec.bounds], dtype=float)
    rng = np.random.default_rng(spec.seed)
    starts = [] if spec.x0 is None else [np.asarray(spec.x0, dtype=float)]
    while len(starts) < spec.n_start:
        starts.append(lo + (hi - lo) * rng.random(len(lo)))
    best, evals = None, 0
    for x0 in starts:
        d = len(x0)
        simplex = np.vstack([x0] + [x0 + spec.simplex_scale * (hi - lo) * np.eye(d)[j]
                                     for j in range(d)])
        simplex = np.clip(simplex, lo, hi)
        res = minimize(f, x0, method="Nelder-Mead", bounds=list(zip(lo, hi)),
                       options={"initial_simplex": simplex, "xatol": 1e-3, "fatol": 1e-5,
                                "maxfev": 200 * d})
        evals += res.nfev
        if best is None or res.fun < best[1]:
            best = (tuple(float(v) for v in res.x), float(res.fun))
    return SearchResult(best[0], best[1], evaluations=evals)


def optimize_weights(model: TwoGridLFA, variant="three", sweeps=1, n_start=8, seed=0,
                     bounds=None, max_rounds=8, x0=None) -> SearchResult:
    """Optimise patch weights for Richardson with ``omega = 1``.

    ``sweeps`` is ``nu1 + nu2`` (1 or 2, symmetric when 2).  Works on an
    active set of frequencies, grown with full-grid maximisers until both
    agree; the returned factor is the full-grid value.
    """
    from .patches import WeightScheme

    nw = {"three": 3, "five": 5}[variant]
    bounds = bounds or tuple((0.0, 1.5) for _ in range(nw))
    factors = [[1.0] * sweeps]
    patch = model.patch

    def diag(x):
        return WeightScheme(variant, tuple(x)).diagonal(patch)

    if x0 is None:
        x0 = (0.5,) * nw  # constant start; random starts alone can stall
    S = list(_coarse_subset(model, stride=4))
    spec = SearchSpec(tuple(f"d{i + 1}" for i in range(nw)), bounds, None, n_start=n_start,
                      seed=seed, x0=x0, simplex_scale=0.1)
    total = 0
    best = None
    for _ in range(max_rounds):
        idx = np.array(S)

        def f(x, idx=idx):
            if np.any(np.asarray(x) <= 0):
                return 10.0
            return float(model.radii_factors(factors, diag(x), idx).max())

        res = robust_minimize(spec, f)
        total += res.evaluations
        R = model.radii_factors(factors, diag(res.params))[0]
        full = float(R.max())
        if best is None or full < best.rho:
            best = SearchResult(res.params, full)
        if full <= res.rho + 1e-6:
            break
        order = np.argsort(R)[::-1]
        new = [int(j) for j in order if R[j] > res.rho + 1e-6 and j not in S][:8]
        S += new
        spec.x0 = best.params
    best.evaluations = total
    return best


def sensitivity_scan(model: TwoGridLFA, to_factors: Callable, axes, weights="none"):
    """Full-grid factor over a 1-D or 2-D parameter grid.

    Returns ``(points, rho, diverging)`` with ``diverging = rho >= 1``.
    """
    pts = np.array(list(itertools.product(*[np.asarray(a, dtype=float) for a in axes])))
    rho = model.rho_factors(to_factors(pts), weights)
    return pts, rho, rho >= 1.0


def write_landscape_csv(path, names, points, values, exact=None):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(names) + ["rho"] + ([] if exact is None else ["exact"]))
        for i, (p, v) in enumerate(zip(points, values)):
            row = [f"{x:.6g}" for x in p] + [f"{v:.10g}"]
            if exact is not None:
                row.append(int(exact[i]))
            w.writerow(row)
