"""Command-line front end: kernel synthesis, perturbation, verification, emission.

One binary with subcommands; all numerics live in the library modules.  A
flat key-value config file can seed any run and every field has a flag
override.  Environment variables are never consulted.

Exit codes: 0 success, 2 configuration error, 3 resolution gate,
4 solver non-convergence, 5 verification failure.
"""
from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from dataclasses import dataclass, fields as dc_fields, asdict

import numpy as np

from .grid import SpaceTimeGrid
from .symbols import isotropic_symbol, PseudoGradientSpec, SymbolError
from .spectral import (synthesize_g0, constant_drift_kernel, check_resolution,
                       ResolutionError)
from .fields import snapshot_field
from .drift import constant_drift, min_p_exponent
from .volterra import ConvergenceMonitor, ConvergenceError, PerturbationProblem
from .evolution import constant_one, fourier_mode, compact_bump, apply_operator
from . import verify as verify_mod

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RESOLUTION = 3
EXIT_NONCONVERGENCE = 4
EXIT_VERIFY = 5

_PHI_CHOICES = ("one", "mode8", "bump")


class ConfigError(ValueError):
    def __init__(self, problems):
        super().__init__("; ".join(problems))
        self.problems = list(problems)


@dataclass
class RunConfig:
    """Every tunable of a run, parsed from file and/or flags."""

    alpha: float = 1.5
    beta: float = 0.5
    gamma: float = 0.5
    c: float = 1.0
    dim: int = 1
    points: int = 256
    half_extent: float = 40.0
    horizon: float = 1.0
    steps: int = 16
    drift: str = "0.0"
    p_exponent: float = math.inf
    dt: float = 1.0
    closed_form: bool = False
    phi: str = "one"
    stop_tol: float = 1e-6
    max_iter: int = 40
    tail_tol: float = 1e-6
    outdir: str = "out"

    # -- validation: report every problem at once --------------------------
    def validate(self):
        errs = []
        if not 1.0 < self.alpha < 2.0:
            errs.append(f"alpha={self.alpha:g} outside (1, 2)")
        if not 0.0 < self.beta < 1.0:
            errs.append(f"beta={self.beta:g} outside (0, 1)")
        if not 0.0 < self.gamma < 1.0:
            errs.append(f"gamma={self.gamma:g} outside (0, 1)")
        if self.c <= 0:
            errs.append("c must be positive")
        if self.dim not in (1, 2):
            errs.append(f"dim={self.dim} unsupported (need 1 or 2)")
        if self.points < 4 or self.points % 2:
            errs.append(f"points={self.points} must be even and >= 4")
        if self.half_extent <= 0:
            errs.append("half_extent must be positive")
        if self.horizon <= 0:
            errs.append("horizon must be positive")
        if self.steps < 1:
            errs.append("steps must be >= 1")
        if self.dt <= 0:
            errs.append("dt must be positive")
        if self.stop_tol <= 0:
            errs.append("stop_tol must be positive")
        if self.phi not in _PHI_CHOICES:
            errs.append(f"phi={self.phi!r} not one of {_PHI_CHOICES}")
        try:
            self.drift_vector()
        except ValueError as e:
            errs.append(str(e))
        if self.dim in (1, 2) and 1.0 < self.alpha < 2.0:
            bound = min_p_exponent(self.alpha, self.dim)
            if not self.p_exponent > bound:
                errs.append(f"p_exponent={self.p_exponent:g} must exceed "
                            f"(d+alpha)/(alpha-1) = {bound:g}")
        if errs:
            raise ConfigError(errs)
        return self

    # -- assembly -----------------------------------------------------------
    def drift_vector(self) -> np.ndarray:
        try:
            vec = np.array([float(t) for t in str(self.drift).split(",")])
        except ValueError:
            raise ValueError(f"drift={self.drift!r} is not a comma-separated vector")
        if vec.size == 1 and self.dim > 1:
            vec = np.concatenate([vec, np.zeros(self.dim - 1)])
        if vec.size != self.dim:
            raise ValueError(f"drift needs {self.dim} components, got {vec.size}")
        return vec

    def grid(self) -> SpaceTimeGrid:
        return SpaceTimeGrid(self.dim, self.half_extent, self.points,
                             self.horizon, self.steps)

    def symbol(self):
        return isotropic_symbol(self.alpha, self.c, self.dim)

    def pgrad(self) -> PseudoGradientSpec:
        return PseudoGradientSpec(beta=self.beta, dim=self.dim)

    def phi_function(self):
        if self.phi == "one":
            return constant_one(self.dim)
        if self.phi == "mode8":
            return fourier_mode(2.0 * np.pi * 8 / (2.0 * self.half_extent),
                                self.dim)
        return compact_bump(5.0, self.dim)

    # -- file round trip ------------------------------------------------------
    def dump(self, path):
        with open(path, "w") as fh:
            for f in dc_fields(self):
                fh.write(f"{f.name} = {getattr(self, f.name)}\n")

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        raw = {}
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(
                        [f"{path}:{lineno}: expected 'key = value'"])
                key, val = (t.strip() for t in line.split("=", 1))
                raw[key] = val
        return cls.from_mapping(raw, source=path)

    @classmethod
    def from_mapping(cls, raw: dict, source="<flags>") -> "RunConfig":
        kwargs, errs = {}, []
        casts = {f.name: f.type for f in dc_fields(cls)}
        defaults = cls()
        for key, val in raw.items():
            if key not in casts:
                errs.append(f"{source}: unknown key {key!r}")
                continue
            current = getattr(defaults, key)
            try:
                if isinstance(current, bool):
                    kwargs[key] = str(val).strip().lower() in ("1", "true", "yes")
                elif isinstance(current, int):
                    kwargs[key] = int(val)
                elif isinstance(current, float):
                    kwargs[key] = float(val)
                else:
                    kwargs[key] = str(val)
            except ValueError:
                errs.append(f"{source}: cannot parse {key} = {val!r}")
        if errs:
            raise ConfigError(errs)
        return cls(**kwargs)


def _resolve_config(args, command_defaults=None) -> RunConfig:
    base = RunConfig.from_file(args.config) if args.config else RunConfig()
    values = asdict(base)
    if command_defaults and not args.config:
        values.update(command_defaults)
    for f in dc_fields(RunConfig):
        flag = getattr(args, f.name, None)
        if flag is not None:
            values[f.name] = flag
    cfg = RunConfig(**values).validate()
    if getattr(args, "dump_config", None):
        cfg.dump(args.dump_config)
    return cfg


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_kernel(args) -> int:
    cfg = _resolve_config(args, command_defaults={"points": 2048,
                                                  "half_extent": 160.0})
    os.makedirs(cfg.outdir, exist_ok=True)
    sym, grid, pg = cfg.symbol(), cfg.grid(), cfg.pgrad()
    bvec = cfg.drift_vector()
    try:
        if cfg.closed_form or np.any(bvec):
            field = constant_drift_kernel(sym, pg, bvec, grid, cfg.dt)
            stem = "G_closed_form"
        else:
            field = synthesize_g0(sym, grid, cfg.dt)
            stem = "g0"
    except ResolutionError as err:
        print(f"resolution gate: {err}", file=sys.stderr)
        for k, v in (err.diagnostics or {}).items():
            print(f"  {k} = {v}", file=sys.stderr)
        return EXIT_RESOLUTION
    paths = snapshot_field(field, cfg.outdir, stem)
    pair = field.pairs()[0]
    vals = field.slice(pair)
    print(f"wrote {len(paths)} snapshot(s) under {cfg.outdir}/{stem}_*")
    print(f"mass = {field.mass(pair):.12f}")
    print(f"min = {vals.min():.6e}")
    print(f"max = {vals.max():.6e}")
    return EXIT_OK


def cmd_perturb(args) -> int:
    cfg = _resolve_config(args, command_defaults={"drift": "1.0"})
    os.makedirs(cfg.outdir, exist_ok=True)
    sym, grid, pg = cfg.symbol(), cfg.grid(), cfg.pgrad()
    b = constant_drift(cfg.drift_vector(), p=cfg.p_exponent)
    prob = PerturbationProblem(sym, pg, grid, b)
    monitor = ConvergenceMonitor.for_problem(cfg.alpha, cfg.beta, cfg.dim,
                                             cfg.p_exponent,
                                             stop_tol=cfg.stop_tol,
                                             max_iter=cfg.max_iter)
    try:
        v_rows = prob.solve_v(monitor)
    except ConvergenceError as err:
        print(f"solver did not converge: {err}", file=sys.stderr)
        for k, (n, r) in enumerate(zip(err.norms, [""] + err.ratios)):
            print(f"  sweep {k + 1}: increment {n:.6e} ratio {r}",
                  file=sys.stderr)
        _write_convergence_log(os.path.join(cfg.outdir, "convergence.csv"),
                               monitor)
        return EXIT_NONCONVERGENCE
    G = prob.rows_to_scalar_field(prob.assemble_G_rows(v_rows), "G")
    paths = snapshot_field(G, cfg.outdir, "G")
    _write_convergence_log(os.path.join(cfg.outdir, "convergence.csv"), monitor)
    phi = cfg.phi_function()
    upath = os.path.join(cfg.outdir, "u_slices.csv")
    with open(upath, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["s_index", "x", "u"])
        x = grid.axis()
        for i in range(grid.time_steps):
            u = apply_operator(G, (i, grid.time_steps), phi)
            for xi, ui in zip(x, np.atleast_1d(u.ravel())):
                w.writerow([i, repr(float(xi)), repr(float(ui))])
    worst_mass = max(abs(G.mass(k) - 1.0) for k in G.pairs())
    print(f"wrote {len(paths)} kernel snapshots, convergence log and "
          f"u slices under {cfg.outdir}")
    print(f"sweeps = {len(monitor.iterate_norms)}")
    print(f"worst mass defect = {worst_mass:.3e}")
    print(f"min G = {min(G.slice(k).min() for k in G.pairs()):.6e}")
    return EXIT_OK


def _write_convergence_log(path, monitor):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "max_norm", "ratio", "wall_seconds"])
        for row in monitor.convergence_log():
            w.writerow(row)


def cmd_verify(args) -> int:
    cfg = _resolve_config(args)
    os.makedirs(cfg.outdir, exist_ok=True)
    fx = verify_mod.FixtureSet(alpha=cfg.alpha, beta=cfg.beta,
                               gamma=cfg.gamma, scale_c=cfg.c, dim=cfg.dim,
                               points=cfg.points, half_extent=cfg.half_extent,
                               horizon=cfg.horizon, steps=cfg.steps,
                               stop_tol=cfg.stop_tol)
    try:
        report = verify_mod.run_suite(fx, selection=args.only)
    except verify_mod.MissingFixtureError as err:
        print(f"fixture error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    print(report.table())
    report.to_csv(os.path.join(cfg.outdir, "verify_report.csv"))
    with open(os.path.join(cfg.outdir, "verify_summary.txt"), "w") as fh:
        fh.write(report.summary())
    if not report.passed:
        for r in report.failures():
            print(f"FAILED: {r.check} ({r.value:.4e} vs {r.threshold:.4e})",
                  file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def cmd_emit(args) -> int:
    cfg = _resolve_config(args)
    os.makedirs(cfg.outdir, exist_ok=True)
    sym, grid = cfg.symbol(), cfg.grid()
    what = args.what
    if what == "profiles":
        if cfg.dim != 1:
            print("profile emission is one-dimensional", file=sys.stderr)
            return EXIT_CONFIG
        from .spectral import g0_values
        path = os.path.join(cfg.outdir, "profiles.csv")
        gaps = [grid.dt * j for j in (1, 2, 4, 8, 16) if j <= grid.time_steps]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x"] + [f"g0_dt_{g:g}" for g in gaps])
            cols = [g0_values(sym, grid, g) for g in gaps]
            for idx, xv in enumerate(grid.axis()):
                w.writerow([repr(float(xv))] +
                           [repr(float(c[idx])) for c in cols])
        print(f"wrote {path}")
        return EXIT_OK
    if what == "decay":
        from .volterra import PerturbationProblem as PP
        b = constant_drift(cfg.drift_vector(), p=cfg.p_exponent)
        prob = PP(sym, cfg.pgrad(), grid, b)
        monitor = ConvergenceMonitor.for_problem(cfg.alpha, cfg.beta, cfg.dim,
                                                 cfg.p_exponent,
                                                 stop_tol=cfg.stop_tol)
        G = prob.rows_to_scalar_field(
            prob.assemble_G_rows(prob.solve_v(monitor)), "G")
        from .evolution import check_identity_limit
        table = check_identity_limit(G, cfg.phi_function())
        path = os.path.join(cfg.outdir, "identity_decay.csv")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["gap", "error"])
            for g, e in zip(table.gaps, table.errors):
                w.writerow([repr(float(g)), repr(float(e))])
        print(f"wrote {path}")
        return EXIT_OK
    if what == "resolution":
        rep = check_resolution(sym, grid, grid.dt, tail_tol=cfg.tail_tol)
        path = os.path.join(cfg.outdir, "resolution.csv")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["quantity", "value"])
            for k, v in rep.as_dict().items():
                w.writerow([k, v])
        print(f"wrote {path}")
        return EXIT_OK
    print(f"unknown emission target {what!r}", file=sys.stderr)
    return EXIT_CONFIG


# ---------------------------------------------------------------------------
# argument wiring
# ---------------------------------------------------------------------------

def _add_config_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", help="flat key-value config file")
    p.add_argument("--dump-config", help="write the resolved config and continue")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--c", type=float)
    p.add_argument("--dim", "--d", type=int, dest="dim")
    p.add_argument("--points", "--N", type=int, dest="points")
    p.add_argument("--half-extent", "--L", type=float, dest="half_extent")
    p.add_argument("--horizon", "--T", type=float, dest="horizon")
    p.add_argument("--steps", "--M", type=int, dest="steps")
    p.add_argument("--drift", "--b", dest="drift")
    p.add_argument("--p-exponent", type=float, dest="p_exponent")
    p.add_argument("--dt", type=float)
    p.add_argument("--closed-form", action="store_const", const=True,
                   dest="closed_form")
    p.add_argument("--phi", choices=_PHI_CHOICES)
    p.add_argument("--stop-tol", type=float, dest="stop_tol")
    p.add_argument("--max-iter", type=int, dest="max_iter")
    p.add_argument("--tail-tol", type=float, dest="tail_tol")
    p.add_argument("--outdir")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="pseudoproc",
        description="kernels and evolution operators of drift-perturbed "
                    "stable-type generators")
    sub = ap.add_subparsers(dest="command", required=True)

    pk = sub.add_parser("kernel", help="synthesize base or closed-form kernels")
    _add_config_flags(pk)
    pk.set_defaults(func=cmd_kernel)

    pp_ = sub.add_parser("perturb", help="solve the perturbation system")
    _add_config_flags(pp_)
    pp_.set_defaults(func=cmd_perturb)

    pv = sub.add_parser("verify", help="run the property suite")
    _add_config_flags(pv)
    pv.add_argument("--only", default=None,
                    help="substring filter on check names ('' selects none)")
    pv.set_defaults(func=cmd_verify)

    pe = sub.add_parser("emit", help="write plot-ready CSV data")
    _add_config_flags(pe)
    pe.add_argument("--what", default="profiles",
                    choices=("profiles", "decay", "resolution"))
    pe.set_defaults(func=cmd_emit)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        for p in err.problems:
            print(f"config error: {p}", file=sys.stderr)
        return EXIT_CONFIG
    except (SymbolError, ValueError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except ResolutionError as err:
        print(f"resolution gate: {err}", file=sys.stderr)
        return EXIT_RESOLUTION
    except ConvergenceError as err:
        print(f"non-convergence: {err}", file=sys.stderr)
        return EXIT_NONCONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
