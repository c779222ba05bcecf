"""Command line entry point: ``abpoles <subcommand> [--config PATH] [--out DIR] ...``."""
from __future__ import annotations

import argparse
import json
import sys
import warnings

from ..eigensolve import EigenSolveError, assemble_crack, assemble_magnetic, solve_lowest
from ..geometry import PoleConfig, crack_polylines
from ..mesh import split, triangulate
from . import criteria
from .experiments import (
    ExperimentConfig,
    exterior_info,
    reference_profile,
    run_blowup_compare,
    run_convergence,
    run_disk_oracle,
    run_sign_experiment,
    solve_pair,
)
from .oracle import bessel_zeros
from .report import ReportError, emit_report

SIGN_POLES = PoleConfig.from_lists([0.9], [0.3], [0.5])


def load_config(args, kind: str) -> ExperimentConfig:
    over = {"threads": args.threads, "tol_eigen": args.tol_eigen, "trunc_radii": args.trunc,
            "seed": args.seed, "out": args.out, "kind": kind}
    if args.config:
        return ExperimentConfig.from_file(args.config, **over)
    base = {"poles": SIGN_POLES} if kind == "sign" else {}
    return ExperimentConfig(**base, **{k: v for k, v in over.items() if v is not None})


def _emit(args, cfg, results, rows=(), crit=(), series=None):
    paths = emit_report(args.out or ".", rows, results, crit, cfg, series, name=args.command)
    for c in crit:
        print(c.line())
    for kind in sorted(paths):
        print(f"wrote {paths[kind]}")


def cmd_solve(args, cfg):
    eps = args.eps if args.eps is not None else cfg.eps_ladder[-1]
    h = cfg.h_ladder[-1]
    ce = crack_polylines(cfg.poles, cfg.domain, eps)
    mesh = split(triangulate(cfg.domain, ce, h, cfg.mesh_grade), ce)
    n = args.count
    cr = solve_lowest(assemble_crack(mesh), n=2 * n, seed=cfg.seed, tol=cfg.tol_eigen)
    mg = solve_lowest(assemble_magnetic(mesh, cfg.poles, eps), n=n, seed=cfg.seed, tol=cfg.tol_eigen)
    res = {"eps": eps, "h": h, "n_dofs": mesh.n_dofs, "crack": cr.eigenvalues, "magnetic": mg.eigenvalues}
    print(f"eps={eps} h={h} dofs={mesh.n_dofs}")
    for i, lam in enumerate(mg.eigenvalues):
        print(f"  {i + 1}: magnetic {lam:.10g}  crack {cr.eigenvalues[2 * i]:.10g} {cr.eigenvalues[2 * i + 1]:.10g}")
    _emit(args, cfg, res)


def cmd_limit(args, cfg):
    info, state = reference_profile(cfg)
    res = {"profile": info.to_dict(), "eigenvalues": state.eigenvalues, "lambda_0": state.lam,
           "kreal_residual": state.kreal_residual}
    p = info.profile
    print(f"lambda_0={state.lam:.10g} m={p.m} order={p.order:.6g} beta={p.beta:.6g} gamma={p.gamma:.6g}")
    if info.warning:
        print(f"warning: {info.warning}")
    _emit(args, cfg, res)


def cmd_energy(args, cfg):
    h = cfg.h_ladder[-1]
    samples = [solve_pair(cfg, eps, h) for eps in cfg.eps_ladder]
    eps = [s.eps for s in samples]
    series = {k: ("epsilon", eps, [getattr(s, k) for s in samples]) for k in ("delta", "E_eps", "L_eps", "grad_gap")}
    for s in samples:
        print(f"eps={s.eps:<8g} delta={s.delta:.6e} E_eps={s.E_eps:.6e} L_eps={s.L_eps:.6e}")
    _emit(args, cfg, {"h": h, "samples": samples}, series=series)


def cmd_exterior(args, cfg):
    info, _ = reference_profile(cfg)
    ext = exterior_info(info.profile, cfg)
    x = ext.extrapolation
    print(f"E={ext.E:.8g} L={ext.L:.8g} E+L={ext.E + ext.L:.3e}")
    series = {"E_trunc": ("R", list(x.radii), list(x.energies))}
    _emit(args, cfg, {"profile": info.to_dict(), "exterior": ext}, series=series)


def cmd_converge(args, cfg):
    table = run_convergence(cfg)
    print(f"m={table.m} slope={table.slope:.4f} band={table.slope_band} target={table.target_slope:.4f}")
    crit = [criteria.rate(table), criteria.precise_coefficient(table), criteria.energy_scaling(table)]
    _emit(args, cfg, table.to_dict(), table.rows, crit)


def cmd_sign(args, cfg):
    cases = ["i", "ii"] if args.case == "both" else [args.case]
    reps = {c: run_sign_experiment(c, cfg) for c in cases}
    series = {}
    for c, r in reps.items():
        print(f"case {c}: alphas={r.alphas} E={r.E:.6g} L={r.L:.3e} signs_ok={r.signs_ok}")
        series[f"delta_lambda_{c}"] = ("epsilon", r.eps, r.delta_lambda)
        series[f"E_scaled_{c}"] = ("epsilon", r.eps, r.E_scaled)
    crit = [criteria.signs(reps["i"], reps["ii"])] if len(reps) == 2 else []
    _emit(args, cfg, {c: r.to_dict() for c, r in reps.items()}, crit=crit, series=series)


def cmd_blowup(args, cfg):
    rep = run_blowup_compare(cfg)
    print(f"discrepancy={rep.discrepancy} grad_ratio={rep.grad_ratio:.4f}")
    series = {"discrepancy": ("epsilon", rep.eps, rep.discrepancy),
              "grad_gap_scaled": ("epsilon", rep.eps, rep.grad_gap_scaled)}
    _emit(args, cfg, rep.to_dict(), crit=[criteria.blowup(rep)], series=series)


def cmd_oracle(args, cfg):
    zeros = bessel_zeros(args.nu, args.count)
    print(f"zeros of J_{args.nu}: " + " ".join(repr(z) for z in zeros))
    res = {"nu": args.nu, "zeros": zeros}
    series = {"zeros": ("index", list(range(1, len(zeros) + 1)), zeros)}
    crit = []
    if args.disk:
        rep = run_disk_oracle(args.rho)
        res["disk"] = rep.to_dict()
        series["disk_error"] = ("h", rep.h, rep.errors)
        crit.append(criteria.disk_oracle(rep))
    _emit(args, None, res, crit=crit, series=series)


COMMANDS = {
    "solve": (cmd_solve, "crack and magnetic eigenvalues at one eps"),
    "limit": (cmd_limit, "limit eigenfunction and its angular profile"),
    "energy": (cmd_energy, "interior energies along the eps ladder"),
    "exterior": (cmd_exterior, "exterior blow-up energy with truncation extrapolation"),
    "converge": (cmd_converge, "eigenvalue-shift convergence study"),
    "sign": (cmd_sign, "attractive/repulsive pole placement for circulation 1/2"),
    "blowup": (cmd_blowup, "blow-up comparison of eigenfunctions"),
    "oracle": (cmd_oracle, "Bessel zeros and the disk eigenvalue check"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON experiment config")
    common.add_argument("--out", metavar="DIR", help="report directory (default: current)")
    common.add_argument("--threads", type=int, metavar="N")
    common.add_argument("--tol-eigen", type=float, metavar="X", dest="tol_eigen")
    common.add_argument("--trunc", type=float, nargs="+", metavar="R", help="exterior truncation radii")
    common.add_argument("--seed", type=int, metavar="S")
    parser = argparse.ArgumentParser(prog="abpoles", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_)
        if name == "solve":
            p.add_argument("--eps", type=float)
            p.add_argument("--count", type=int, default=6)
        elif name == "sign":
            p.add_argument("--case", choices=["i", "ii", "both"], default="both")
        elif name == "oracle":
            p.add_argument("--nu", type=float, default=0.3)
            p.add_argument("--count", type=int, default=5)
            p.add_argument("--disk", action="store_true", help="also run the disk eigenvalue check")
            p.add_argument("--rho", type=float, default=0.3)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    func = COMMANDS[args.command][0]
    try:
        cfg = None if args.command == "oracle" else load_config(args, args.command)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            func(args, cfg)
    except (ValueError, EigenSolveError, ReportError, json.JSONDecodeError, FileNotFoundError) as exc:
        print(f"abpoles {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
