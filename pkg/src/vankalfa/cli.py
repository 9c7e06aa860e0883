"""Command-line front end: ``vankalfa predict|optimize|solve|compare|report``.

Exit codes: 0 success, 1 invalid input, 2 divergence detected by ``solve``.
"""
from __future__ import annotations

import argparse
import json
import os
import platform
import sys
from dataclasses import dataclass, field
from pathlib import Path

EXIT_OK, EXIT_INVALID, EXIT_DIVERGED = 0, 1, 2

_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


def _pair(text, name):
    try:
        vals = [float(v) for v in str(text).split(",")]
    except ValueError:
        raise ValueError(f"{name} must be two comma-separated numbers, got {text!r}") from None
    if len(vals) != 2:
        raise ValueError(f"{name} must be two comma-separated numbers, got {text!r}")
    return tuple(vals)


def _ints(text):
    return [int(v) for v in str(text).split(",")]


def _weights(text):
    if text is None:
        return None
    if isinstance(text, (list, tuple, dict)):
        return text
    t = str(text).strip().lower()
    if t in ("none", "geometric"):
        return t
    try:
        return [float(v) for v in t.split(",")]
    except ValueError:
        raise ValueError(f"weights must be none, geometric or 3/5 numbers, got {text!r}") from None


def _load_file(path):
    text = Path(path).read_text()
    if str(path).endswith(".toml"):
        try:
            import tomllib
        except ModuleNotFoundError:  # Python < 3.11
            import tomli as tomllib
        return tomllib.loads(text)
    return json.loads(text)


@dataclass
class RunConfig:
    """Everything that determines a run; built from a config file and flags."""

    subcommand: str
    discretization: str = "P2P1"
    patch: str = "VKI"
    weights: object = "none"
    relax: dict = field(default_factory=dict)
    mesh: dict = field(default_factory=dict)
    sampling: int = 32
    out: str | None = None
    seed: int = 0
    options: dict = field(default_factory=dict)

    def relax_config(self):
        from .relaxation import RelaxConfig

        d = dict(self.relax)
        d["weights"] = self.weights
        return RelaxConfig.from_dict(d)

    def mesh_config(self, n=None):
        from .sim import MeshConfig

        d = {"discretization": self.discretization, "n": 20, "boundary": "periodic",
             "epsilon": 0.0}
        d.update(self.mesh)
        if n is not None:
            d["n"] = n
        return MeshConfig(**d)

    def to_dict(self):
        return {"subcommand": self.subcommand, "discretization": self.discretization,
                "patch": self.patch, "weights": self.relax_config().weights.to_dict(),
                "relax": self.relax_config().to_dict(), "mesh": dict(self.mesh),
                "sampling": self.sampling, "out": self.out, "seed": self.seed,
                "options": dict(self.options)}


_RELAX_FLAGS = {"smoother": "smoother", "k": "k", "interval": "interval", "nu1": "nu1",
                "nu2": "nu2", "omega1": "omega1", "omega2": "omega2"}
_MESH_FLAGS = {"n": "n", "boundary": "boundary", "epsilon": "epsilon"}


def build_config(args) -> RunConfig:
    """Merge ``--config`` file contents with explicit flags (flags win)."""
    data = _load_file(args.config) if getattr(args, "config", None) else {}
    cfg = RunConfig(args.command)
    disc = data.get("discretization", data.get("disc"))
    if disc:
        cfg.discretization = str(disc).upper()
    cfg.patch = str(data.get("patch", cfg.patch)).upper()
    cfg.weights = _weights(data.get("weights", cfg.weights))
    cfg.relax = dict(data.get("relax", {}))
    cfg.mesh = dict(data.get("mesh", {}))
    cfg.sampling = int(data.get("sampling", cfg.sampling))
    cfg.seed = int(data.get("seed", cfg.seed))
    cfg.out = data.get("out", cfg.out)
    cfg.options = dict(data.get("options", {}))

    if getattr(args, "disc", None):
        cfg.discretization = args.disc.upper()
    if getattr(args, "patch", None):
        cfg.patch = args.patch.upper()
    if getattr(args, "weights", None) is not None:
        cfg.weights = _weights(args.weights)
    if cfg.patch.endswith("W"):
        # VKIW / VKEW: inclusive / exclusive patch with geometric weights
        cfg.patch = cfg.patch[:-1]
        if cfg.weights in (None, "none"):
            cfg.weights = "geometric"
    if cfg.patch not in ("VKI", "VKE"):
        raise ValueError(f"unknown patch {cfg.patch!r}; expected VKI, VKE, VKIW or VKEW")
    for flag, key in _RELAX_FLAGS.items():
        v = getattr(args, flag, None)
        if v is not None:
            cfg.relax[key] = _pair(v, "interval") if flag == "interval" else v
    if getattr(args, "omega", None) is not None:
        cfg.relax["omega1"] = cfg.relax["omega2"] = args.omega
    if "interval" in cfg.relax and isinstance(cfg.relax["interval"], str):
        cfg.relax["interval"] = _pair(cfg.relax["interval"], "interval")
    for flag, key in _MESH_FLAGS.items():
        v = getattr(args, flag, None)
        if v is not None:
            cfg.mesh[key] = v
    if getattr(args, "sampling", None) is not None:
        cfg.sampling = args.sampling
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "out", None) is not None:
        cfg.out = args.out
    cfg.relax_config()  # validate early
    return cfg


def _versions():
    import numpy
    import scipy

    from . import __version__
    return {"python": platform.python_version(), "numpy": numpy.__version__,
            "scipy": scipy.__version__, "vankalfa": __version__}


def _write_outputs(cfg: RunConfig, files: dict, argv):
    """Write ``files`` ({name: text}) and a manifest into ``cfg.out``."""
    if not cfg.out:
        return
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (out / name).write_text(text)
    manifest = {"argv": list(argv), "config": cfg.to_dict(), "seed": cfg.seed,
                "versions": _versions(), "outputs": sorted(files)}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))


def _csv_text(writer, *a):
    import tempfile

    with tempfile.NamedTemporaryFile("r+", suffix=".csv") as fh:
        writer(fh.name, *a)
        return Path(fh.name).read_text()


# subcommands ---------------------------------------------------------------

def cmd_predict(cfg: RunConfig, argv):
    from .analysis import get_model
    from .lfa import write_eigenvalue_csv, write_radius_csv

    relax = cfg.relax_config()
    model = get_model(cfg.discretization, cfg.patch, cfg.sampling)
    res = model.rho(relax)
    th, radii = model.full_grid(res.radii)
    print(f"rho = {res.rho:.6f} at theta = ({res.argmax[0]:.6f}, {res.argmax[1]:.6f}); "
          f"{res.excluded} near-singular samples excluded")
    result = {"rho": res.rho, "argmax": list(res.argmax), "excluded": res.excluded,
              "config": cfg.to_dict()}
    files = {"result.json": json.dumps(result, indent=2),
             "radii.csv": _csv_text(write_radius_csv, th, radii)}
    if cfg.options.get("eigenvalues", True):
        files["eigenvalues.csv"] = _csv_text(write_eigenvalue_csv,
                                             model.eigenvalues_T(relax.weights))
    _write_outputs(cfg, files, argv)
    return EXIT_OK


def cmd_optimize(cfg: RunConfig, args, argv):
    import numpy as np

    from .analysis import get_model
    from .optimize import (brute_force_factors, chebyshev_factors, grid_points,
                           optimize_weights, write_landscape_csv)

    relax = cfg.relax_config()
    model = get_model(cfg.discretization, cfg.patch, cfg.sampling)
    target = args.target
    files = {}
    if target == "interval":
        if relax.smoother != "chebyshev":
            raise ValueError("interval search needs --smoother chebyshev")
        step = args.step or 0.1
        a_box = _pair(args.alpha or "0.1,10", "alpha range")
        b_box = _pair(args.beta or "0.1,10", "beta range")
        pts = grid_points((a_box, b_box), step, lambda p: p[:, 0] < p[:, 1] - 1e-9)
        base = chebyshev_factors(relax.k, symmetric=False)

        def to_factors(p):
            w = base(p)
            return np.concatenate([w] * (relax.nu1 + relax.nu2), axis=1)

        res = brute_force_factors(model, pts, to_factors, relax.weights)
        names = ("alpha", "beta")
        print(f"best interval [{res.params[0]:.2f}, {res.params[1]:.2f}]  rho = {res.rho:.6f}  "
              f"({res.evaluations} full evaluations of {len(pts)} grid points)")
    elif target == "omega":
        step = args.step or 0.02
        box1 = _pair(args.omega_range or "0.02,1.0", "omega range")
        if args.omega2_range:
            box2 = _pair(args.omega2_range, "omega2 range")
            pts = grid_points((box1, box2), step)
            names = ("omega1", "omega2")

            def to_factors(p):
                return np.concatenate([np.repeat(p[:, :1], relax.nu1, axis=1),
                                       np.repeat(p[:, 1:2], relax.nu2, axis=1)], axis=1)
        else:
            pts = grid_points((box1,), step)
            names = ("omega",)

            def to_factors(p):
                return np.repeat(p[:, :1], relax.nu1 + relax.nu2, axis=1)
        res = brute_force_factors(model, pts, to_factors, relax.weights)
        print(f"best {', '.join(names)} = {', '.join(f'{v:.3f}' for v in res.params)}  "
              f"rho = {res.rho:.6f}")
    elif target == "weights":
        variant = args.variant
        res = optimize_weights(model, variant, relax.nu1 + relax.nu2, n_start=args.n_start,
                               seed=cfg.seed)
        names = tuple(f"d{i + 1}" for i in range(len(res.params)))
        print(f"best weights ({', '.join(f'{v:.4f}' for v in res.params)})  rho = {res.rho:.6f}"
              f"  ({res.evaluations} objective evaluations)")
    else:
        raise ValueError(f"unknown optimisation target {target!r}")
    result = {"target": target, "names": list(names), "params": list(res.params),
              "rho": res.rho, "evaluations": res.evaluations, "config": cfg.to_dict()}
    files["result.json"] = json.dumps(result, indent=2)
    if res.points is not None:
        files["landscape.csv"] = _csv_text(write_landscape_csv, names, res.points, res.values,
                                           res.exact)
    _write_outputs(cfg, files, argv)
    return EXIT_OK


def _stop_rule(args, window=None):
    from .sim import StopRule

    kw = {}
    if getattr(args, "rtol", None) is not None:
        kw["rtol"] = args.rtol
    if getattr(args, "max_cycles", None) is not None:
        kw["max_cycles"] = args.max_cycles
    w = getattr(args, "window", None) or window
    if w is not None:
        kw["window"] = w
    return StopRule(**kw)


def _solve_once(cfg, args, n=None):
    from .analysis import get_model
    from .sim import Hierarchy, two_grid_solve

    relax = cfg.relax_config()
    mesh = cfg.mesh_config(n)
    hier = Hierarchy(mesh, galerkin=bool(getattr(args, "galerkin", False)))
    run = two_grid_solve(hier, relax, cfg.patch, stop=_stop_rule(args), seed=cfg.seed,
                         multiplicative=bool(getattr(args, "multiplicative", False)))
    if not getattr(args, "no_lfa", False):
        run.lfa_rho = get_model(cfg.discretization, cfg.patch, cfg.sampling).rho(relax).rho
    return hier, run


def cmd_solve(cfg: RunConfig, args, argv):
    hier, run = _solve_once(cfg, args)
    lfa = "n/a" if run.lfa_rho is None else f"{run.lfa_rho:.4f}"
    tag = " (trailing average)" if run.averaged else ""
    print(f"rho_hat = {run.rho_hat:.4f}{tag}  lfa rho = {lfa}  cycles = {run.cycles}  "
          f"diverged = {run.diverged}")
    d = run.to_dict()
    out = {"config": d["config"], "rho_hat_history": d["rho_hat_history"],
           "rho_hat": d["rho_hat"], "diverged": d["diverged"], "lfa_rho": d["lfa_rho"],
           "averaged": d["averaged"], "cycles": d["cycles"],
           "log10_residuals": d["log10_residuals"], "extra": d["extra"]}
    files = {"run.json": json.dumps(out, indent=2)}
    _write_outputs(cfg, files, argv)
    if cfg.out and args.export_coo:
        hier.fine.write_coo(Path(cfg.out) / "K_fine.coo")
        hier.coarse.write_coo(Path(cfg.out) / "K_coarse.coo")
    return EXIT_DIVERGED if run.diverged else EXIT_OK


def cmd_compare(cfg: RunConfig, args, argv):
    ns = _ints(args.ns) if args.ns else [20, 40]
    rows, diverged = [], False
    print(f"{'n':>5} {'rho_hat':>9} {'lfa rho':>9} {'|diff|':>8} diverged")
    for n in ns:
        _, run = _solve_once(cfg, args, n)
        diff = abs(run.rho_hat - run.lfa_rho)
        print(f"{n:>5} {run.rho_hat:>9.4f} {run.lfa_rho:>9.4f} {diff:>8.4f} {run.diverged}")
        rows.append({"n": n, "rho_hat": run.rho_hat, "lfa_rho": run.lfa_rho,
                     "diverged": run.diverged, "cycles": run.cycles})
        diverged |= run.diverged
    _write_outputs(cfg, {"compare.json": json.dumps(rows, indent=2)}, argv)
    return EXIT_DIVERGED if diverged else EXIT_OK


def cmd_report(cfg: RunConfig, args, argv):
    from .report import generate

    ns = _ints(args.ns) if args.ns else None
    eps = [float(v) for v in args.eps.split(",")] if args.eps else None
    rep = generate(args.table_id, ns=ns, solve=not args.no_solve, optimize=args.optimize,
                   eps=eps)
    text = rep.to_csv() if args.format == "csv" else rep.to_markdown()
    print(text, end="")
    _write_outputs(cfg, {f"{args.table_id}.md": rep.to_markdown(),
                         f"{args.table_id}.csv": rep.to_csv()}, argv)
    return EXIT_OK


# parser ----------------------------------------------------------------------

def _add_common(p):
    p.add_argument("--config", help="JSON or TOML file with run settings")
    p.add_argument("--disc", help="discretization: p2p1 or q2q1")
    p.add_argument("--patch", help="vki, vke, vkiw or vkew (W = geometric weights)")
    p.add_argument("--weights", help="none, geometric, or 3/5 comma-separated weights")
    p.add_argument("--smoother", choices=("chebyshev", "richardson"))
    p.add_argument("--k", type=int, help="Chebyshev degree")
    p.add_argument("--interval", help="Chebyshev interval 'alpha,beta'")
    p.add_argument("--nu1", type=int)
    p.add_argument("--nu2", type=int)
    p.add_argument("--omega", type=float, help="Richardson weight for both stages")
    p.add_argument("--omega1", type=float)
    p.add_argument("--omega2", type=float)
    p.add_argument("--sampling", type=int, help="LFA samples per direction (default 32)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="directory for CSV/JSON outputs and the manifest")


def _add_mesh(p):
    p.add_argument("--n", type=int, help="cells per direction (even)")
    p.add_argument("--boundary", choices=("periodic", "dirichlet"))
    p.add_argument("--epsilon", type=float, help="mesh distortion amplitude")
    p.add_argument("--rtol", type=float, help="residual reduction to stop at (default 1e-150)")
    p.add_argument("--max-cycles", type=int, dest="max_cycles")
    p.add_argument("--window", type=int, help="trailing window for oscillating runs")
    p.add_argument("--multiplicative", action="store_true",
                   help="multiplicative instead of additive Vanka")
    p.add_argument("--galerkin", action="store_true", help="Galerkin coarse operator R K P")
    p.add_argument("--no-lfa", action="store_true", dest="no_lfa")


def build_parser():
    from .report import REPORT_IDS

    parser = argparse.ArgumentParser(prog="vankalfa", description=__doc__.splitlines()[0])
    parser.add_argument("--threads", type=int, help="cap BLAS/OpenMP worker threads")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("predict", help="two-grid LFA convergence factor")
    _add_common(p)

    p = sub.add_parser("optimize", help="search relaxation parameters with LFA")
    _add_common(p)
    p.add_argument("--target", choices=("interval", "omega", "weights"), default="interval")
    p.add_argument("--alpha", help="alpha range 'lo,hi' for interval search")
    p.add_argument("--beta", help="beta range 'lo,hi' for interval search")
    p.add_argument("--step", type=float, help="grid step (0.1 intervals, 0.02 omega)")
    p.add_argument("--omega-range", dest="omega_range", help="omega (or omega1) range 'lo,hi'")
    p.add_argument("--omega2-range", dest="omega2_range", help="omega2 range for a 2-D scan")
    p.add_argument("--variant", choices=("three", "five"), default="three")
    p.add_argument("--n-start", type=int, default=8, dest="n_start")

    p = sub.add_parser("solve", help="measured two-grid convergence")
    _add_common(p)
    _add_mesh(p)
    p.add_argument("--export-coo", action="store_true", dest="export_coo",
                   help="also write the fine and coarse matrices as COO text")

    p = sub.add_parser("compare", help="measured versus predicted over mesh sizes")
    _add_common(p)
    _add_mesh(p)
    p.add_argument("--ns", help="comma-separated mesh sizes (default 20,40)")

    p = sub.add_parser("report", help="regenerate a published table")
    p.add_argument("table_id", metavar="table-id", help=", ".join(REPORT_IDS))
    p.add_argument("--ns", help="restrict measured columns to these mesh sizes")
    p.add_argument("--eps", help="distortion amplitudes for the distorted table")
    p.add_argument("--no-solve", action="store_true", dest="no_solve",
                   help="LFA columns only")
    p.add_argument("--optimize", action="store_true", help="also rerun the optimisers")
    p.add_argument("--format", choices=("md", "csv"), default="md")
    p.add_argument("--out")
    return parser


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads is not None:
        if args.threads < 1:
            print("error: --threads must be positive", file=sys.stderr)
            return EXIT_INVALID
        for var in _THREAD_VARS:
            os.environ[var] = str(args.threads)
    try:
        if args.command == "report":
            from .report import REPORT_IDS
            if args.table_id not in REPORT_IDS:
                raise ValueError(f"unknown table id {args.table_id!r}; valid ids: "
                                 f"{', '.join(REPORT_IDS)}")
            cfg = RunConfig("report", out=args.out)
            return cmd_report(cfg, args, argv)
        cfg = build_config(args)
        if args.command == "predict":
            return cmd_predict(cfg, argv)
        if args.command == "optimize":
            return cmd_optimize(cfg, args, argv)
        if args.command == "solve":
            return cmd_solve(cfg, args, argv)
        return cmd_compare(cfg, args, argv)
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
