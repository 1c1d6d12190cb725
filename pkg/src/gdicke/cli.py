"""Command-line interface.

Subcommands: validate, symmetry, basis dims, converge, solve, sweep, table2,
dimstudy.  Exit codes: 0 success, 2 configuration error, 3 convergence
failure.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from . import __version__
from .basis import build_truncated, dim_lambda, dim_v, dim_xi, enumerate_rwa_sector
from .config import RunConfig, load_config
from .errors import ConfigError, GdickeError, ModelError, NoConvergenceError
from .model import lambda_model, subsystems, vee_model, xi_model
from .observables import expectations
from .solver import (
    assemble_kappa,
    caps_for_region,
    caps_for_sector,
    converge_full,
    ground_over_sectors,
)
from .sweep import _fmt, reproduce_dim_study, reproduce_table2, run_sweep
from .symmetry import conventional_constants, find_constants, sector_from_label, sectors

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONVERGENCE = 3

_SHAPES = {"lambda": (lambda_model, dim_lambda),
           "xi": (xi_model, dim_xi),
           "vee": (vee_model, dim_v)}


def _load(path: str) -> RunConfig:
    try:
        return load_config(path)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _cmd_validate(args) -> int:
    cfg = _load(args.config)
    m = cfg.model
    print(f"levels ({m.n}): {' '.join(_fmt(w) for w in m.omega)}")
    print(f"modes ({m.ell}): {' '.join(_fmt(W) for W in m.Omega)}")
    print(f"particles: {m.n_atoms}")
    print(f"subsystems: {m.subsystem_count}")
    for sub in subsystems(m):
        print(f"coupling {sub.j}<->{sub.k} mode {sub.mode}: "
              f"x={_fmt(sub.x)} mu={_fmt(sub.mu)} mu_crit={_fmt(sub.mu_bar)} "
              f"detuning={_fmt(sub.delta)}")
    return EXIT_OK


def _cmd_symmetry(args) -> int:
    cfg = _load(args.config)
    model = cfg.model
    ops = find_constants(model) if args.generic else conventional_constants(model)
    secs = sectors(ops, model)
    if args.csv:
        print("operator," + ",".join(f"eta{s+1}" for s in range(model.ell))
              + "," + ",".join(f"lambda{k+1}" for k in range(model.n)))
        for i, op in enumerate(ops.ops):
            print(f"K{i+1}," + ",".join(str(v) for v in op.eta + op.lam))
        print("sector,kappa_min")
        for sec in secs:
            kmin = (" ".join(str(v) for v in sec.kappa_min)
                    if sec.kappa_min is not None else "empty")
            print(f"{sec.label},{kmin}")
    else:
        print(f"{len(ops.ops)} conserved operator(s), constraint rank {ops.rank}")
        for i, op in enumerate(ops.ops):
            print(f"  K{i+1}: {op}")
        print("parity sectors:")
        for sec in secs:
            kmin = sec.kappa_min if sec.kappa_min is not None else "empty"
            print(f"  {sec.label}: kappa_min = {kmin}")
    return EXIT_OK


def _cmd_basis_dims(args) -> int:
    shape = args.shape
    factory, formula = _SHAPES[shape]
    print("config,n_atoms,k1,k2,dim_formula,dim_enumerated")
    for na in args.particles:
        model = factory(na)
        ops = conventional_constants(model)
        for k1 in range(args.k1_max + 1):
            k2hi = k1 + na if shape == "lambda" else k1
            for k2 in range(k2hi + 1):
                dim_f = formula(na, k1, k2)
                dim_e = len(enumerate_rwa_sector(model, ops, (k1, k2)))
                print(f"{shape},{na},{k1},{k2},{dim_f},{dim_e}")
    return EXIT_OK


def _cmd_converge(args) -> int:
    cfg = _load(args.config)
    model = cfg.model
    if cfg.point is not None:
        model = model.with_strengths(cfg.point)
    ops = conventional_constants(model)
    err = args.err or cfg.run.err
    sigma = sector_from_label(args.sector) if args.sector else (0,) * len(ops.ops)
    try:
        rep = converge_full(model, ops, sigma, err, restriction=cfg.run.restriction)
    except NoConvergenceError as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    if args.csv:
        print("sector,m_bar,kappa,dim,iterations,deficit,err")
        print(f"{rep.label},{' '.join(map(str, rep.m_bar))},"
              f"{' '.join(map(str, rep.kappa))},{rep.dim},{rep.iterations},"
              f"{_fmt(rep.deficit)},{_fmt(rep.err)}")
    else:
        print(f"sector {rep.label}: m_bar={rep.m_bar} kappa={rep.kappa} "
              f"dim={rep.dim} iterations={rep.iterations} "
              f"deficit={_fmt(rep.deficit)} (target {_fmt(rep.err)})")
    return EXIT_OK


def _cmd_solve(args) -> int:
    cfg = _load(args.config)
    model = cfg.model
    if cfg.point is not None:
        model = model.with_strengths(cfg.point)
    caps_policy = caps_for_region if cfg.run.policy == "region" else caps_for_sector
    err = args.err or cfg.run.err
    try:
        scan = ground_over_sectors(model, kind=cfg.run.kind, err=err,
                                   caps_policy=caps_policy,
                                   restriction=cfg.run.restriction)
    except NoConvergenceError as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    obs = expectations(scan.winner.state)
    print(f"ground energy: {_fmt(scan.energy)}")
    print(f"winning sector: {scan.winner.label} (dim {scan.winner.dim}, "
          f"kappa {scan.winner.kappa})")
    print("photons: " + " ".join(_fmt(v) for v in obs.photon_mean))
    print("photon variance: " + " ".join(_fmt(v) for v in obs.photon_var))
    print("populations: " + " ".join(_fmt(v) for v in obs.populations))
    for r in scan.results:
        print(f"  sector {r.label}: E={_fmt(r.energy)} dim={r.dim}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = _load(args.config)
    if args.err:
        cfg = _override_run(cfg, err=args.err)
    if args.orders:
        orders = tuple(tuple(int(v) for v in tok.split(",")) for tok in args.orders.split())
        cfg = _override_run(cfg, orders=orders)
    if args.sectors:
        val = "all" if args.sectors == "all" else tuple(args.sectors.split())
        cfg = _override_run(cfg, sectors=val)
    if args.kind:
        cfg = _override_run(cfg, kind={"dicke": "dicke", "tc": "tc"}[args.kind])
    try:
        res = run_sweep(cfg, out_prefix=args.out, workers=args.workers)
    except NoConvergenceError as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    print(f"grid {res.shape[0]} x {res.shape[1]}; wrote {len(res.files)} file(s)")
    for f in res.files:
        print(f"  {f}")
    if res.failures:
        print(f"{len(res.failures)} point(s) failed; see errors CSV", file=sys.stderr)
    return EXIT_OK


def _override_run(cfg: RunConfig, **kw) -> RunConfig:
    from dataclasses import replace

    return replace(cfg, run=replace(cfg.run, **kw))


def _cmd_table2(args) -> int:
    rows = reproduce_table2(lambda na, x: xi_model(na, x, x),
                            args.particles, args.x, args.err, out_path=args.out)
    print("n_atoms,err,x,m_bar,kappa,dim")
    for r in rows:
        print(f"{r['n_atoms']},{_fmt(r['err'])},{_fmt(r['x'])},"
              f"{' '.join(map(str, r['caps']))},{' '.join(map(str, r['kappa']))},"
              f"{r['dim']}")
    return EXIT_OK


def _cmd_dimstudy(args) -> int:
    rows = reproduce_dim_study(lambda na, x: xi_model(na, x, x), args.particles,
                               x=args.x, err=args.err, policy=args.policy,
                               out_path=args.out)
    print("n_atoms,dim_full,dim_22,dim_11,dim_00")
    for r in rows:
        dims = r["dims"]
        print(f"{r['n_atoms']},{r['dim_full']},{dims[(2, 2)]},{dims[(1, 1)]},"
              f"{dims[(0, 0)]}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gdicke",
                                description="Symmetry-adapted bases and ground "
                                            "states for multilevel atom-field models")
    p.add_argument("--version", action="version", version=f"gdicke {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("validate", help="check a model configuration")
    sp.add_argument("--config", required=True)
    sp.set_defaults(fn=_cmd_validate)

    sp = sub.add_parser("symmetry", help="print conserved operators and sectors")
    sp.add_argument("--config", required=True)
    sp.add_argument("--csv", action="store_true")
    sp.add_argument("--generic", action="store_true",
                    help="use the generic discovery instead of the conventional set")
    sp.set_defaults(fn=_cmd_symmetry)

    sp = sub.add_parser("basis", help="basis utilities")
    bsub = sp.add_subparsers(dest="basis_command", required=True)
    bd = bsub.add_parser("dims", help="closed-form vs enumerated sector dimensions (CSV)")
    bd.add_argument("--shape", choices=sorted(_SHAPES), required=True)
    bd.add_argument("--particles", type=int, nargs="+", default=[1, 2, 3])
    bd.add_argument("--k1-max", type=int, default=8)
    bd.set_defaults(fn=_cmd_basis_dims)

    sp = sub.add_parser("converge", help="run the cutoff iteration for one sector")
    sp.add_argument("--config", required=True)
    sp.add_argument("--err", type=float)
    sp.add_argument("--sector", help="parity label such as ee")
    sp.add_argument("--csv", action="store_true")
    sp.set_defaults(fn=_cmd_converge)

    sp = sub.add_parser("solve", help="ground state at one parameter point")
    sp.add_argument("--config", required=True)
    sp.add_argument("--err", type=float)
    sp.set_defaults(fn=_cmd_solve)

    sp = sub.add_parser("sweep", help="run a parameter grid and write CSVs")
    sp.add_argument("--config", required=True)
    sp.add_argument("--out", required=True, help="output path prefix")
    sp.add_argument("--err", type=float)
    sp.add_argument("--orders", help="space-separated o1,o2 pairs")
    sp.add_argument("--sectors", help="'all' or space-separated labels")
    sp.add_argument("--kind", choices=["dicke", "tc"])
    sp.add_argument("--workers", type=int, default=None)
    sp.set_defaults(fn=_cmd_sweep)

    sp = sub.add_parser("table2", help="truncated-basis dimension table (cascade model)")
    sp.add_argument("--particles", type=int, nargs="+", default=[1, 2, 3, 4, 5])
    sp.add_argument("--x", type=float, nargs="+", default=[1.5, 3.0])
    sp.add_argument("--err", type=float, nargs="+", default=[1e-10, 1e-15])
    sp.add_argument("--out")
    sp.set_defaults(fn=_cmd_table2)

    sp = sub.add_parser("dimstudy", help="full vs reduced dimensions per particle count")
    sp.add_argument("--particles", type=int, nargs="+", default=[1, 2, 3, 4])
    sp.add_argument("--x", type=float, default=4.0)
    sp.add_argument("--err", type=float, default=1e-10)
    sp.add_argument("--policy", choices=["sector", "region"], default="sector")
    sp.add_argument("--out")
    sp.set_defaults(fn=_cmd_dimstudy)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except SystemExit:
        raise
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NoConvergenceError as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except GdickeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
