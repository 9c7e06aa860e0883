"""Grid transfer between nested structured meshes."""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from ..stencils import VELOCITY_TYPES, restriction_stencils
from .mesh import DiscreteSystem

__all__ = ["build_transfer"]


def build_transfer(fine: DiscreteSystem, coarse: DiscreteSystem):
    """Restriction ``R`` and interpolation ``P = R^T``.

    ``P`` is nodal finite-element interpolation on the logical (undistorted)
    mesh, so every coarse basis function is reproduced exactly on uniform
    meshes.  Rows of ``R`` are the restriction stencils centred at the
    coarse DoFs.
    """
    fm, cm = fine.mesh, coarse.mesh
    if (fm.discretization, fm.boundary) != (cm.discretization, cm.boundary) or fm.n != 2 * cm.n:
        raise ValueError(f"meshes do not nest: fine {fm.to_dict()} vs coarse {cm.to_dict()}")
    rv, rp = restriction_stencils(fm.discretization)
    rows, cols, vals = [], [], []
    vl = cm.velocity_lattice()
    ctype = (vl[:, 0] % 2) + 2 * (vl[:, 1] % 2)  # index into VELOCITY_TYPES order N, X, Y, C
    for ti, tc in enumerate(VELOCITY_TYPES):
        sel = ctype == ti
        if not sel.any():
            continue
        cpos = vl[sel]
        for tf in VELOCITY_TYPES:
            off, val = rv[tc][tf].arrays()
            for (ox, oy), v in zip(off, val):
                fi = 2 * cpos[:, 0] + int(round(2 * ox))
                fj = 2 * cpos[:, 1] + int(round(2 * oy))
                floc = fm.velocity_index(fi, fj)
                cloc = cm.velocity_index(cpos[:, 0], cpos[:, 1])
                ok = floc >= 0
                for comp in (0, 1):
                    rows.append(cloc[ok] + comp * coarse.n_velocity)
                    cols.append(floc[ok] + comp * fine.n_velocity)
                    vals.append(np.full(ok.sum(), v))
    pl = cm.pressure_lattice()
    off, val = rp.arrays()
    for (ox, oy), v in zip(off, val):
        fi = 2 * pl[:, 0] + int(round(2 * ox))
        fj = 2 * pl[:, 1] + int(round(2 * oy))
        floc = fm.pressure_index(fi, fj)
        ok = floc >= 0
        rows.append(cm.pressure_index(pl[ok, 0], pl[ok, 1]) + 2 * coarse.n_velocity)
        cols.append(floc[ok] + 2 * fine.n_velocity)
        vals.append(np.full(ok.sum(), v))
    R = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(coarse.size, fine.size)).tocsr()
    R.sum_duplicates()
    return R, R.T.tocsr()
