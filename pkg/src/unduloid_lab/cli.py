"""Command-line entry point: gen, modes, cousin, classify, verify, dims.

Exit codes: 0 all checks pass, 1 a check failed, 2 usage or parameter error,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import acceptance
from .classify import classify_unduloid, compare_dPhi_dA, dPhi_fd
from .config import RunConfig, parse_grid
from .cousin import boundary_hopf, rotation_identity_residual, left_killing_residual, integrate_cousin, killing_on_cousin, verify_cousin
from .delaunay import NecksizeParams, cotan_mean_curvature, immerse, profile_for, solve_profile
from .errors import ContractViolation, NumericalFailure, ParameterError
from .index_count import consistency_report, dimension_table, moduli_dims
from .io import Record, dumps, emit_report, export_obj, write_csv
from .jacobi_modes import classify_mode, mode_sweep, nondegeneracy_check
from .quat import KillingField, I

log = logging.getLogger("unduloid_lab")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


def _necksizes(text):
    return tuple(float(x) for x in text.split(","))


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat JSON file with RunConfig fields")
    common.add_argument("--necksize", type=_necksizes, help="necksize or comma-separated list")
    common.add_argument("--grid", type=parse_grid, help="n_t x n_phi, e.g. 200x100")
    common.add_argument("--t-range", type=float, help="t extent in conformal periods")
    common.add_argument("--tol", type=float, help="integrator tolerance")
    common.add_argument("--m-max", type=int, help="highest Fourier mode")
    common.add_argument("--h", type=float, help="finite-difference step in n")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int, help="seed for sampled checks")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="unduloid-lab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("gen", parents=[common], help="profile CSV and mesh OBJ").add_argument(
        "--half", action="store_true", help="upper half patch only")
    sub.add_parser("modes", parents=[common], help="Floquet table and nondegeneracy verdict")
    p = sub.add_parser("cousin", parents=[common], help="cousin mesh and identity residuals")
    p.add_argument("--center", type=lambda s: tuple(float(x) for x in s.split(",")),
                   help="stereographic projection center w,x,y,z")
    sub.add_parser("classify", parents=[common], help="Hopf images and necksize/distance report")
    sub.add_parser("verify", parents=[common], help="full acceptance suite")
    p = sub.add_parser("dims", parents=[common], help="dimension tables")
    p.add_argument("--k-max", type=int, default=6)
    return ap


def make_config(args) -> RunConfig:
    cfg = RunConfig.from_json(args.config) if args.config else RunConfig()
    return cfg.override(necksizes=args.necksize, grid=args.grid, t_range=args.t_range, tol=args.tol,
                        m_max=args.m_max, h=args.h, out_dir=args.out, seed=args.seed,
                        center=getattr(args, "center", None))


def _rec(name, anchor, value, target, tol, passed, informational=False):
    return Record(name, anchor, value, target, tol, bool(passed), informational)


def _path(cfg, name):
    return os.path.join(cfg.out_dir, name)


def _tag(n):
    return f"n{n:.6g}"


def cmd_gen(cfg, args):
    grid = cfg.grid_or((200, 100))
    recs = []
    for n in cfg.necksizes:
        p = NecksizeParams(n)
        prof = solve_profile(p, tol=cfg.tol)
        write_csv(_path(cfg, f"profile_{_tag(n)}.csv"), ["s", "x", "r", "psi", "residual"],
                  zip(prof.s, prof.x, prof.r, prof.psi, prof.residual),
                  comments=[f"necksize {n!r}", f"conformal period {profile_for(n).period_t!r}"])
        patch = immerse(profile_for(n), half=args.half, t_range=cfg.t_range, grid=grid)
        export_obj(_path(cfg, f"mesh_{_tag(n)}.obj"), patch.f, periodic=not patch.half,
                   comment=f"unduloid necksize {n!r} grid {grid[0]}x{grid[1]}")
        drift = float(np.abs(prof.residual).max())
        recs.append(_rec(f"gen.conservation[n={n}]", "first integral", drift, 0.0, 10 * cfg.tol,
                         drift <= 10 * cfg.tol))
        H = float(np.abs(cotan_mean_curvature(patch) - 1).max())
        recs.append(_rec(f"gen.mesh_H[n={n}]", "cotangent mean curvature", H, 1.0, None, True, True))
    return recs, "gen.json"


def cmd_modes(cfg, args):
    recs = []
    for n in cfg.necksizes:
        P = NecksizeParams(n)
        data = mode_sweep(P, cfg.m_max)
        rows = []
        for d in data:
            cls, cnt = classify_mode(d)
            mu = [complex(x) for x in d.multipliers]
            rows.append([d.m, mu[0].real, mu[0].imag, mu[1].real, mu[1].imag, cls,
                         "inconclusive" if cnt is None else cnt])
        write_csv(_path(cfg, f"modes_{_tag(n)}.csv"),
                  ["m", "mu1_re", "mu1_im", "mu2_re", "mu2_im", "class", "tempered"], rows,
                  comments=["modes -m are identical to +m by symmetry and are omitted",
                            f"necksize {n!r}"])
        v = nondegeneracy_check(P, cfg.m_max)
        recs.append(_rec(f"modes.verdict[n={n}]", "nondegeneracy", v.verdict, "nondegenerate", None,
                         v.verdict == "nondegenerate"))
        recs.append(_rec(f"modes.tempered[n={n}]", "tempered dimension (total, even)",
                         list(v.tempered.as_tuple()), [6, 4], None, v.tempered.as_tuple() == (6, 4)))
        recs.append(_rec(f"modes.evidence[n={n}]", "per-mode evidence", v.evidence, None, None, True, True))
    return recs, "modes.json"


def cmd_cousin(cfg, args):
    grid = cfg.grid_or((400, 100))
    recs = []
    for n in cfg.necksizes:
        patch = immerse(profile_for(n), half=True, t_range=cfg.t_range, grid=grid)
        c = integrate_cousin(patch)
        export_obj(_path(cfg, f"cousin_{_tag(n)}.obj"), c.ft, center=cfg.center,
                   comment=f"cousin necksize {n!r}")
        rep = verify_cousin(c)
        rep["left_killing_i"] = left_killing_residual(killing_on_cousin(KillingField("left", (1, 0, 0)), c), c)
        rep["rotation_identity_i"] = rotation_identity_residual(c, patch, I)
        rep["hopf_spread"] = max(s for _, s in boundary_hopf(c))
        limits = {"isometry_defect": 1e-5, "holonomy_max": 1e-6, "hopf_spread": 1e-5,
                  "transversality_defect": 1e-10, "left_killing_i": 1e-5, "rotation_identity_i": 1e-5}
        for key in sorted(rep):
            lim = limits.get(key)
            recs.append(_rec(f"cousin.{key}[n={n}]", "cousin identity", rep[key], 0.0, lim,
                             True if lim is None else rep[key] <= lim, lim is None))
    return recs, "cousin.json"


def cmd_classify(cfg, args):
    grid = cfg.grid_or((400, 100))
    recs, rows = [], []
    for n in cfg.necksizes:
        P = NecksizeParams(n)
        c = classify_unduloid(P, grid=grid, t_range=cfg.t_range)
        entry = {"n": n, "v1": c.tuple.points[0], "v2": c.tuple.points[1], "distance": c.distance,
                 "error": c.error, "spread": max(c.spreads)}
        if 0 < n - cfg.h and n + cfg.h < np.pi:
            cmp = compare_dPhi_dA(P, "necksize", h=cfg.h, grid=grid, t_range=cfg.t_range)
            entry.update(dPhi=cmp["dPhi_rate"], dA=cmp["dA_eta"], discrepancy=cmp["difference"])
        recs.append(_rec(f"classify[n={n}]", "Hopf images at spherical distance n", entry, n, 5e-3,
                         c.error <= 5e-3 and entry.get("discrepancy", 0.0) <= 1e-2))
        rows.append([n, c.distance, c.error, entry.get("dPhi", float("nan")), entry.get("discrepancy", float("nan"))])
    write_csv(_path(cfg, "classify.csv"), ["n", "distance", "abs_error", "dPhi_rate", "dPhi_dA_difference"], rows)
    return recs, "classify.json"


def cmd_verify(cfg, args):
    necks = None if args.necksize is None and not args.config else cfg.necksizes
    recs, timings = acceptance.run_all(necks, cfg.m_max, cfg.seed)
    with open(_path(cfg, "timings.json"), "w") as fh:
        fh.write(dumps(timings))
    return recs, "verify.json"


def cmd_dims(cfg, args):
    ks = range(2, args.k_max + 1)
    table = dimension_table(ks)
    write_csv(_path(cfg, "dims.csv"), list(table[0].keys()), [list(r.values()) for r in table])
    recs = [_rec(f"dims[k={r['k']}]", "dimension table", r,
                 {"coplanar": [2 * r["k"], 2 * r["k"] - 3], "general": [3 * r["k"], 3 * r["k"] - 6]}, None,
                 (r["coplanar_premoduli"], r["coplanar_moduli"], r["general_premoduli"], r["general_moduli"])
                 == (2 * r["k"], 2 * r["k"] - 3, 3 * r["k"], 3 * r["k"] - 6)) for r in table]
    for n in cfg.necksizes:
        rep = consistency_report(NecksizeParams(n), cfg.m_max)
        recs.append(_rec(f"dims.consistency[n={n}]", "even tempered count equals 2k at k = 2", rep,
                         rep["predicted"], None, rep["consistent"]))
    return recs, "dims.json"


COMMANDS = {"gen": cmd_gen, "modes": cmd_modes, "cousin": cmd_cousin, "classify": cmd_classify,
            "verify": cmd_verify, "dims": cmd_dims}


def run_command(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = make_config(args)
        os.makedirs(cfg.out_dir, exist_ok=True)
        recs, name = COMMANDS[args.command](cfg, args)
    except (ParameterError, json.JSONDecodeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalFailure, ContractViolation) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    path = _path(cfg, name)
    emit_report(recs, path, meta={"command": args.command, "config": cfg.as_dict()})
    failed = [r.name for r in recs if not r.passed and not r.informational]
    for r in failed:
        print(f"FAILED {r}", file=sys.stderr)
    print(f"{len(recs)} records, {len(failed)} failed -> {path}")
    return EXIT_FAIL if failed else EXIT_OK


def main():
    sys.exit(run_command())


if __name__ == "__main__":
    main()
