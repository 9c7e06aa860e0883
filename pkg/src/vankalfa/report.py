"""Regenerate the published tables from fresh computations.

Every computed cell is placed next to the published value and the absolute
difference.  Measured (solver) columns can be skipped for a quick LFA-only
report.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

from . import reference as ref
from .analysis import get_model
from .cost import cost_table
from .relaxation import RelaxConfig

__all__ = ["REPORT_IDS", "Report", "generate"]

REPORT_IDS = ("no-weights-p2p1", "weights-p2p1", "richardson-p2p1", "3w-p2p1", "5w-p2p1",
              "no-weights-q2q1", "weights-q2q1", "richardson-q2q1", "3w-q2q1", "distorted",
              "cost-p2p1", "cost-q2q1")

_RICH_NU = ((1, 0), (1, 1), (2, 2), (3, 3), (4, 4), (5, 5))


@dataclass
class Report:
    table_id: str
    columns: list
    rows: list = field(default_factory=list)

    def to_markdown(self, digits=3) -> str:
        def fmt(v):
            if v is None:
                return "-"
            if isinstance(v, float):
                return "div" if math.isinf(v) else f"{v:.{digits}f}"
            return str(v)
        lines = ["| " + " | ".join(self.columns) + " |", "|" + "---|" * len(self.columns)]
        for r in self.rows:
            lines.append("| " + " | ".join(fmt(r.get(c)) for c in self.columns) + " |")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=self.columns, extrasaction="ignore")
        w.writeheader()
        for r in self.rows:
            w.writerow({c: ("" if r.get(c) is None else r.get(c)) for c in self.columns})
        return buf.getvalue()


def _delta(a, b):
    if a is None or b is None:
        return None
    return abs(a - b)


def _measure(disc, n, boundary, relax, patch, window=7, epsilon=0.0, seed=0, cache=None):
    from .sim import Hierarchy, MeshConfig, StopRule, two_grid_solve

    key = (disc, n, boundary, epsilon)
    if cache is not None and key in cache:
        hier = cache[key]
    else:
        hier = Hierarchy(MeshConfig(disc, n, boundary, epsilon))
        if cache is not None:
            cache[key] = hier
    run = two_grid_solve(hier, relax, patch, stop=StopRule(window=window), seed=seed)
    return float("inf") if run.diverged else run.rho_hat


def _chebyshev(table_id, ns, solve, optimize, progress):
    disc, rows = ref.CHEBYSHEV_TABLES[table_id]
    cols = ["method", "k", "interval", "rho", "rho_published", "d_rho"]
    if optimize:
        cols += ["opt_interval", "opt_rho"]
    all_ns = sorted({n for r in rows for n in r.measured} | {n for r in rows for n in r.dirichlet})
    use_ns = [n for n in all_ns if ns is None or n in ns]
    if solve:
        for n in use_ns:
            cols += [f"rhat_{n}", f"rhat_{n}_published", f"d_rhat_{n}"]
            if any(n in r.dirichlet for r in rows):
                cols += [f"rhatD_{n}", f"rhatD_{n}_published", f"d_rhatD_{n}"]
    out = Report(table_id, cols)
    cache = {}
    for r in rows:
        relax = RelaxConfig("chebyshev", r.k, r.interval, weights=r.weights)
        rho = get_model(disc, r.patch).rho(relax).rho
        row = {"method": r.label, "k": r.k, "interval": f"[{r.interval[0]}, {r.interval[1]}]",
               "rho": rho, "rho_published": r.rho, "d_rho": _delta(rho, r.rho)}
        if optimize:
            from .optimize import optimize_interval
            res = optimize_interval(get_model(disc, r.patch), r.k, r.weights)
            row["opt_interval"] = f"[{res.params[0]:.1f}, {res.params[1]:.1f}]"
            row["opt_rho"] = res.rho
        if solve:
            for n in use_ns:
                for bnd, col, table in (("periodic", "rhat", r.measured),
                                        ("dirichlet", "rhatD", r.dirichlet)):
                    if n not in table:
                        continue
                    v = _measure(disc, n, bnd, relax, r.patch, r.trailing, cache=cache)
                    row[f"{col}_{n}"] = v
                    row[f"{col}_{n}_published"] = table[n]
                    row[f"d_{col}_{n}"] = _delta(v, table[n])
        out.rows.append(row)
        if progress:
            progress(row)
    return out


def _richardson(table_id, progress):
    disc, rows = ref.RICHARDSON_TABLES[table_id]
    cols = ["method", "omega"]
    for a, b in _RICH_NU:
        cols += [f"rho_{a}{b}", f"rho_{a}{b}_published"]
    cols += ["omega_pair", "rho_pair", "rho_pair_published"]
    out = Report(table_id, cols)
    for r in rows:
        model = get_model(disc, r.patch)
        row = {"method": r.label, "omega": r.omega,
               "omega_pair": f"({r.omega_pair[0]:.2f}, {r.omega_pair[1]:.2f})"}
        for (a, b), published in zip(_RICH_NU, r.rho_sym):
            relax = RelaxConfig("richardson", nu1=a, nu2=b, omega1=r.omega, omega2=r.omega,
                                weights=r.weights)
            row[f"rho_{a}{b}"] = model.rho(relax).rho
            row[f"rho_{a}{b}_published"] = published
        relax = RelaxConfig("richardson", nu1=1, nu2=1, omega1=r.omega_pair[0],
                            omega2=r.omega_pair[1], weights=r.weights)
        row["rho_pair"] = model.rho(relax).rho
        row["rho_pair_published"] = r.rho_pair
        out.rows.append(row)
        if progress:
            progress(row)
    return out


def _weights(table_id, optimize, progress):
    from .patches import WeightScheme

    disc, rows = ref.WEIGHT_TABLES[table_id]
    cols = ["method", "sweeps", "weights", "rho", "rho_published", "d_rho"]
    if optimize:
        cols += ["opt_weights", "opt_rho"]
    out = Report(table_id, cols)
    for r in rows:
        model = get_model(disc, r.patch)
        scheme = WeightScheme.parse(r.weights)
        relax = RelaxConfig("richardson", nu1=1, nu2=r.sweeps - 1, weights=scheme)
        rho = model.rho(relax).rho
        row = {"method": r.patch, "sweeps": r.sweeps,
               "weights": "(" + ", ".join(f"{v:.2f}" for v in r.weights) + ")",
               "rho": rho, "rho_published": r.rho, "d_rho": _delta(rho, r.rho)}
        if optimize:
            from .optimize import optimize_weights
            res = optimize_weights(model, scheme.variant, r.sweeps)
            row["opt_weights"] = "(" + ", ".join(f"{v:.3f}" for v in res.params) + ")"
            row["opt_rho"] = res.rho
        out.rows.append(row)
        if progress:
            progress(row)
    return out


def _distorted(ns, eps, solve, progress):
    n = (ns or [80])[0]
    eps = ref.DISTORTION_EPS if eps is None else eps
    params = {(r.patch, r.weights, r.k): r for t in ("no-weights-p2p1", "weights-p2p1")
              for r in ref.CHEBYSHEV_TABLES[t][1]}
    cols = ["method", "k"]
    for e in eps:
        cols += [f"eps={e}", f"eps={e}_published"]
    out = Report("distorted", cols)
    cache = {}
    for (patch, weights), table in ref.DISTORTED.items():
        for k, published in table.items():
            r = params[(patch, weights, k)]
            relax = RelaxConfig("chebyshev", k, r.interval, weights=weights)
            row = {"method": r.label, "k": k}
            for e in eps:
                p = published[ref.DISTORTION_EPS.index(e)] if e in ref.DISTORTION_EPS else None
                row[f"eps={e}_published"] = float("inf") if p is None and e in ref.DISTORTION_EPS \
                    else p
                if solve:
                    row[f"eps={e}"] = _measure("P2P1", n, "periodic", relax, patch,
                                               epsilon=e, cache=cache)
            out.rows.append(row)
            if progress:
                progress(row)
    return out


def _cost(table_id):
    disc, table = ref.COST_TABLES[table_id]
    rows = cost_table(disc, {m: (v[1], v[2]) for m, v in table.items()})
    out = Report(table_id, ["quantity"] + list(rows))
    keys = ["W_s", "W_s_computed", "fill_published", "fill_computed", "k", "sweeps", "rho",
            "W_t", "relative_efficiency"]
    published = {"W_s": 0, "W_t": 3, "relative_efficiency": 4}
    for key in keys:
        out.rows.append({"quantity": key, **{m: rows[m][key] for m in rows}})
        if key in published:
            out.rows.append({"quantity": key + "_published",
                             **{m: table[m][published[key]] for m in rows}})
    return out


def generate(table_id, ns=None, solve=True, optimize=False, eps=None, progress=None) -> Report:
    """Build the report for ``table_id`` (one of ``REPORT_IDS``)."""
    if table_id not in REPORT_IDS:
        raise ValueError(f"unknown table id {table_id!r}; valid ids: {', '.join(REPORT_IDS)}")
    if table_id in ref.CHEBYSHEV_TABLES:
        return _chebyshev(table_id, ns, solve, optimize, progress)
    if table_id in ref.RICHARDSON_TABLES:
        return _richardson(table_id, progress)
    if table_id in ref.WEIGHT_TABLES:
        return _weights(table_id, optimize, progress)
    if table_id == "distorted":
        return _distorted(ns, eps, solve, progress)
    return _cost(table_id)
