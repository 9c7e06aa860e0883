"""Work model for Vanka sweeps: patch LU fill, sweep cost and efficiency.

Costs are model counts of multiply-adds per mesh node, not timings.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sl

from .patches import WeightScheme, assemble_patch_matrix, build_patch
from .reference import FILL_COUNTS, RESIDUAL_MADDS
from .stencils import VELOCITY_TYPES, assemble_element_matrices

__all__ = [
    "FillCount",
    "patch_fill_counts",
    "residual_stencil_madds",
    "sweep_cost",
    "total_work",
    "relative_efficiency",
    "cost_table",
    "table_csv",
    "table_markdown",
]


@dataclass(frozen=True)
class FillCount:
    """Nonzeros of the patch factors; ``pivoted`` marks a fallback with row exchanges."""

    nnz_l: int
    nnz_u: int
    pivoted: bool = False

    @property
    def total(self):
        return self.nnz_l + self.nnz_u


def _symbolic_lu(pattern):
    P = pattern.copy()
    n = len(P)
    for k in range(n):
        r = np.flatnonzero(P[k + 1:, k]) + k + 1
        c = np.flatnonzero(P[k, k + 1:]) + k + 1
        P[np.ix_(r, c)] = True
    return int(np.tril(P).sum()), int(np.triu(P).sum())


def _has_zero_pivot(K, tol):
    A = K.astype(float).copy()
    for k in range(len(A)):
        if abs(A[k, k]) <= tol:
            return True
        A[k + 1:, k] /= A[k, k]
        A[k + 1:, k + 1:] -= np.outer(A[k + 1:, k], A[k, k + 1:])
    return False


def patch_fill_counts(discretization: str, kind: str, tol=1e-12) -> FillCount:
    """Nonzeros of ``L`` and ``U`` (diagonals included) for one interior patch.

    Sites are ordered as in ``build_patch`` (u1, u2, then the pressure) and
    eliminated without pivoting; fill is traced symbolically on the pattern
    of nonzero matrix entries plus the diagonal.  A zero pivot switches to a
    partially pivoted factorisation whose counts are flagged.
    """
    K = assemble_patch_matrix(assemble_element_matrices(discretization),
                              build_patch(discretization, kind))
    scale = tol * np.abs(K).max()
    pattern = (np.abs(K) > scale) | np.eye(len(K), dtype=bool)
    if _has_zero_pivot(K, scale):
        _, L, U = sl.lu(K)
        return FillCount(int((np.abs(L) > scale).sum()), int((np.abs(U) > scale).sum()), True)
    return FillCount(*_symbolic_lu(pattern))


def residual_stencil_madds(discretization: str) -> int:
    """Nonzero stencil entries of the saddle operator per mesh node.

    Each velocity type occurs once per node for each component; the pressure
    row couples to all velocity types.
    """
    st = assemble_element_matrices(discretization)
    lap = sum(len(st.laplacian[t][s]) for t in VELOCITY_TYPES for s in VELOCITY_TYPES)
    grad = sum(len(st.grad_x[t]) + len(st.grad_y[t]) for t in VELOCITY_TYPES)
    div = sum(len(st.div_x[t]) + len(st.div_y[t]) for t in VELOCITY_TYPES)
    return 2 * lap + grad + div


def sweep_cost(discretization: str, kind: str, weights="none", fill=None, residual=None) -> int:
    """Multiply-adds per node of one sweep: residual + patch solves (+ weighting).

    ``fill`` defaults to the published L+U totals and ``residual`` to the
    published residual constant; pass ``"computed"`` for either to use
    ``patch_fill_counts`` or ``residual_stencil_madds`` instead.
    """
    disc, kind = discretization.upper(), kind.upper()
    if fill is None:
        fill_total = sum(FILL_COUNTS[(disc, kind)])
    elif fill == "computed":
        fill_total = patch_fill_counts(disc, kind).total
    else:
        fill_total = int(fill)
    if residual is None:
        res = RESIDUAL_MADDS[disc]
    elif residual == "computed":
        res = residual_stencil_madds(disc)
    else:
        res = int(residual)
    w = WeightScheme.parse(weights)
    extra = len(build_patch(disc, kind)) if w.variant != "none" else 0
    return res + fill_total + extra


def total_work(w_sweep, k=1, sweeps=1) -> int:
    """``W_t = k (nu1 + nu2) W_s``."""
    if k < 1 or sweeps < 1:
        raise ValueError("k and the number of sweeps must be positive")
    return k * sweeps * w_sweep


def relative_efficiency(rho1, w1, rho2, w2) -> float:
    """Error reduction of method 1 within the work ``w2`` of method 2: ``rho1**(w2/w1)``."""
    for r in (rho1, rho2):
        if not (0 < r < 1):
            raise ValueError(f"convergence factors must lie in (0, 1), got {r}")
    if w1 <= 0 or w2 <= 0:
        raise ValueError("work must be positive")
    return float(rho1 ** (w2 / w1))


_METHODS = (("VKI", "none"), ("VKE", "none"), ("VKI", "geometric"), ("VKE", "geometric"))


def cost_table(discretization: str, selections: dict, baseline="VKEW"):
    """Rows ``{method: {...}}`` for the given ``{method: ((k, sweeps), rho)}`` choices."""
    disc = discretization.upper()
    rows = {}
    for kind, w in _METHODS:
        name = kind + ("W" if w == "geometric" else "")
        ws = sweep_cost(disc, kind, w)
        fc = patch_fill_counts(disc, kind)
        (k, sweeps), rho = selections[name]
        rows[name] = {"W_s": ws, "W_s_computed": sweep_cost(disc, kind, w, fill="computed"),
                      "fill_published": sum(FILL_COUNTS[(disc, kind)]), "fill_computed": fc.total,
                      "k": k, "sweeps": sweeps, "rho": rho, "W_t": total_work(ws, k, sweeps)}
    base = rows[baseline]
    for r in rows.values():
        r["relative_efficiency"] = relative_efficiency(r["rho"], r["W_t"], base["rho"],
                                                       base["W_t"])
    return rows


def table_csv(rows: dict) -> str:
    buf = io.StringIO()
    keys = list(next(iter(rows.values())))
    wr = csv.writer(buf)
    wr.writerow(["method"] + keys)
    for name, r in rows.items():
        wr.writerow([name] + [r[k] for k in keys])
    return buf.getvalue()


def table_markdown(rows: dict, digits=3) -> str:
    keys = list(next(iter(rows.values())))
    lines = ["| quantity | " + " | ".join(rows) + " |",
             "|---|" + "---|" * len(rows)]
    for k in keys:
        vals = [rows[m][k] for m in rows]
        cells = [f"{v:.{digits}f}" if isinstance(v, float) else str(v) for v in vals]
        lines.append(f"| {k} | " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"
