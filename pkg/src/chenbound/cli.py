"""Command line interface: ``chenbound {buchstab,wu,chen,goldbach} ...``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import buchstab, chen, goldbach, wu
from .cache import PsiCache
from .quadrature import NonConvergent, UndefinedIntegrand

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _emit(args, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _wu_config(args) -> wu.WuConfig:
    base = wu.DEFAULT_WU
    q = base.quad
    kw = {}
    if args.abs_tol is not None:
        kw["abs_tol"] = args.abs_tol
    if args.rel_tol is not None:
        kw["rel_tol"] = args.rel_tol
    if args.mc_samples is not None:
        kw["mc_samples"] = args.mc_samples
    try:
        q = replace(q, **kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return replace(base, quad=q, weight20=getattr(args, "weight20", base.weight20),
                   i2_upper=getattr(args, "i2_upper", base.i2_upper))


def _cache(args, cfg: wu.WuConfig) -> PsiCache | None:
    return PsiCache(args.cache_dir, cfg) if args.cache_dir else None


# ---------------------------------------------------------------- buchstab


def cmd_buchstab(args) -> int:
    spline = buchstab.build_spline(args.degree, args.intervals)
    if args.action == "eval":
        _emit(args, f"{spline(args.u):.10f}\n")
    elif args.action == "table":
        if args.step <= 0 or args.to < args.from_:
            raise UsageError("need --step > 0 and --to >= --from")
        n = int(round((args.to - args.from_) / args.step)) + 1
        u = args.from_ + args.step * np.arange(n)
        ref = buchstab.ode_reference(u_max=max(12.0, float(np.ceil(u[-1]))))
        ws, wo = spline(u), ref(u)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["u", "omega_spline", "omega_ode", "abs_diff"])
        for row in zip(u, ws, wo, np.abs(ws - wo)):
            w.writerow([f"{row[0]:.6f}", f"{row[1]:.15f}", f"{row[2]:.15f}", f"{row[3]:.3e}"])
        _emit(args, buf.getvalue())
    elif args.action == "compare":
        u = np.round(np.arange(1.0, 10.0 + 1e-9, 0.01), 10)
        ref = buchstab.ode_reference()
        dev = float(np.max(np.abs(spline(u) - ref(u))))
        closed = np.arange(2.0, 3.0 + 1e-12, 1e-3)
        cf = float(np.max(np.abs(spline(closed) - buchstab.omega_closed(closed))))
        _emit(args, json.dumps({"degree": args.degree, "intervals": args.intervals,
                                "error_bound": spline.error_bound, "max_vs_ode": dev,
                                "max_vs_closed_form": cf}, indent=2) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------- wu


def _row_params(args) -> wu.WuParams:
    if args.params:
        return wu.WuParams(*args.params)
    if args.row is None:
        raise UsageError("give --row or --params")
    if args.row not in wu.WU_ROWS:
        raise UsageError(f"--row must be in 1..9, got {args.row}")
    return wu.WU_ROWS[args.row]


def cmd_wu(args) -> int:
    cfg = _wu_config(args)
    cache = _cache(args, cfg)
    out: dict
    if args.action == "psi1":
        p = wu.WuParams(args.s, args.sp)
        parts = cache.psi1(p) if cache is not None else wu.psi1_parts(args.s, args.sp, cfg)
        m = parts["i1"]
        out = {"s": args.s, "s_prime": args.sp, "psi1": parts["value"],
               "i1_max": m.value, "phi_max": m.phi_max, "phi_low": m.phi_low}
    elif args.action == "psi2":
        p = _row_params(args)
        parts = cache.psi2(p) if cache is not None else wu.psi2_parts(p, cfg)
        out = {"params": [p.s, p.s_prime, p.k1, p.k2, p.k3], "psi2": parts["value"],
               "i2": {str(i): {"max": m.value, "phi_max": m.phi_max, "phi_low": m.phi_low}
                      for i, m in parts["i2"].items()}}
    elif args.action == "i1":
        out = {"phi": args.phi, "i1": wu.i1(args.phi, args.s, args.sp, cfg)}
    else:
        p = _row_params(args)
        if not 9 <= args.i <= 21:
            raise UsageError("--i must be in 9..21")
        out = {"i": args.i, "phi": args.phi, "i2": wu.i2(args.i, args.phi, p, cfg)}
    _emit(args, json.dumps(out, indent=2) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------- chen


def _dump_system(directory: str, rep: chen.GridReport) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    np.savetxt(d / "A.csv", rep.system.A, delimiter=",", fmt="%.17g")
    np.savetxt(d / "B.csv", rep.system.B, delimiter=",", fmt="%.17g")
    np.savetxt(d / "X.csv", rep.system.X, delimiter=",", fmt="%.17g")


def cmd_chen(args) -> int:
    cfg = _wu_config(args)
    cache = _cache(args, cfg)
    if args.action == "solve":
        rep = chen.solve_grid(args.grid, cfg, args.b_source, args.threads, cache)
        if args.dump_system:
            _dump_system(args.dump_system, rep)
        doc = rep.as_dict()
        doc["row_seconds"] = [r.seconds for r in rep.rows]
        _emit(args, json.dumps(doc, indent=2) + "\n")
    elif args.action == "refine":
        grids = [g.strip() for g in args.grids.split(",") if g.strip()]
        _emit(args, json.dumps(chen.refine_experiment(grids, cfg, args.threads, cache), indent=2) + "\n")
    else:
        out = [chen.interpolation_experiment(n, cfg) for n in args.intervals]
        _emit(args, json.dumps(out[0] if len(out) == 1 else out, indent=2) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------- goldbach


def cmd_goldbach(args) -> int:
    if args.action == "count":
        pt = goldbach.sieve(max(args.n, 4))
        _emit(args, f"{goldbach.d_count(args.n, pt)}\n")
    elif args.action == "comet":
        if args.max < 4:
            raise UsageError("--max must be >= 4")
        _emit(args, goldbach.comet_csv(args.max, args.filter))
    elif args.action == "c0":
        if args.limit < 3:
            raise UsageError("--limit must be >= 3")
        _emit(args, f"{goldbach.twin_prime_constant(args.limit):.8f}\n")
    else:
        _emit(args, f"{goldbach.theta(args.n):.10g}\n")
    return EXIT_OK


# ---------------------------------------------------------------- parser


def _global_flags(defaults: bool) -> argparse.ArgumentParser:
    # shared by the top-level parser and every leaf so the flags may appear
    # before or after the subcommand; leaves suppress their defaults
    p = argparse.ArgumentParser(add_help=False)
    dflt = (lambda v: v) if defaults else (lambda v: argparse.SUPPRESS)  # noqa: E731
    g = p.add_argument_group("global options")
    g.add_argument("--cache-dir", default=dflt(None), help="directory for the persistent Psi cache")
    g.add_argument("--abs-tol", type=float, default=dflt(None))
    g.add_argument("--rel-tol", type=float, default=dflt(None))
    g.add_argument("--mc-samples", type=int, default=dflt(None))
    g.add_argument("--threads", type=int, default=dflt(1))
    g.add_argument("--out", default=dflt(None), help="write output here instead of stdout")
    g.add_argument("-v", "--verbose", action="store_true", default=dflt(False))
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags(False)
    parser = argparse.ArgumentParser(prog="chenbound", parents=[_global_flags(True)],
                                     description="Numerical upper bound for Chen's constant.")
    top = parser.add_subparsers(dest="command", required=True)

    def leaf(sub, name, **kw):
        return sub.add_parser(name, parents=[common], **kw)

    b = top.add_parser("buchstab", help="Buchstab's function")
    b.set_defaults(func=cmd_buchstab)
    bs = b.add_subparsers(dest="action", required=True)
    for name in ("eval", "table", "compare"):
        p = leaf(bs, name)
        p.add_argument("--degree", type=int, default=20)
        p.add_argument("--intervals", type=int, default=10)
        if name == "eval":
            p.add_argument("--u", type=float, required=True)
        if name == "table":
            p.add_argument("--from", dest="from_", type=float, default=1.0)
            p.add_argument("--to", type=float, default=10.0)
            p.add_argument("--step", type=float, default=0.01)

    w = top.add_parser("wu", help="Psi values and the I integrals")
    w.set_defaults(func=cmd_wu)
    ws = w.add_subparsers(dest="action", required=True)
    for name in ("psi1", "psi2", "i1", "i2"):
        p = leaf(ws, name)
        p.add_argument("--weight20", choices=("printed", "alternate"), default="printed")
        p.add_argument("--i2-upper", type=int, choices=(19, 21), default=21)
        if name in ("psi1", "i1"):
            p.add_argument("--s", type=float, required=True)
            p.add_argument("--sp", type=float, required=True)
        else:
            p.add_argument("--row", type=int)
            p.add_argument("--params", type=float, nargs=5, metavar=("S", "SP", "K1", "K2", "K3"))
        if name in ("i1", "i2"):
            p.add_argument("--phi", type=float, required=True)
        if name == "i2":
            p.add_argument("--i", type=int, required=True)

    c = top.add_parser("chen", help="the linear system and C*")
    c.set_defaults(func=cmd_chen)
    cs = c.add_subparsers(dest="action", required=True)
    p = leaf(cs, "solve")
    p.add_argument("--grid", default="nine", help="nine, forty, fourhundred or custom:N")
    p.add_argument("--b-source", choices=("computed", "wu-published"), default="computed")
    p.add_argument("--dump-system", metavar="DIR", help="write A.csv, B.csv and X.csv here")
    p = leaf(cs, "refine")
    p.add_argument("--grids", default="nine,forty")
    p = leaf(cs, "interp")
    p.add_argument("--intervals", type=int, nargs="+", default=[9])

    g = top.add_parser("goldbach", help="Goldbach counts and constants")
    g.set_defaults(func=cmd_goldbach)
    gs = g.add_subparsers(dest="action", required=True)
    leaf(gs, "count").add_argument("--n", type=int, required=True)
    p = leaf(gs, "comet")
    p.add_argument("--max", type=int, required=True)
    p.add_argument("--filter", choices=("all", "12p"), default="all")
    leaf(gs, "c0").add_argument("--limit", type=int, default=1_000_000)
    leaf(gs, "theta").add_argument("--n", type=int, required=True)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    try:
        return args.func(args)
    except (UsageError, buchstab.BuchstabDomainError, goldbach.GoldbachDomainError,
            wu.ConstraintViolation) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NonConvergent, UndefinedIntegrand, chen.SingularMatrix, chen.RootNotBracketed,
            RuntimeError, ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
