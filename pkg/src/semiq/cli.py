"""Command-line driver: verification suites, pointwise evaluation, evolution."""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .errors import ConfigError, SemiqError
from .geometry import GeometryData, ScalarField, geometry_from_config
from .geometries import make_cpn, make_flat, make_flat_torsion
from .suites import SUITES, emit_report, run_suite
from . import semiquant as sq


def build_geometry(name: str, n: int = 1, hbar: float = 1.0,
                   lambda_im: float = None) -> GeometryData:
    if name == "flat":
        G = make_flat(n, hbar)
    elif name == "cpn":
        G = make_cpn(n)
    elif name == "flat-torsion":
        G = make_flat_torsion()
    elif name.endswith(".json") or name.startswith("config:"):
        path = name[7:] if name.startswith("config:") else name
        try:
            with open(path) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read geometry config {path!r}: {exc}")
        G = geometry_from_config(cfg)
    else:
        raise ConfigError(
            f"unknown geometry {name!r}; use flat, cpn, flat-torsion or a JSON config path")
    if lambda_im is not None:
        G.lam = 1j * float(lambda_im)
    return G


def default_suites(G: GeometryData) -> list:
    if G.name.startswith("cpn"):
        return ["classical-compat", "dga", "metric", "qlc", "cpn-catalogue"]
    if G.name == "flat-torsion":
        return ["classical-compat", "qlc"]
    return ["classical-compat", "dga", "metric", "evolution"]


def _report_path(path: str) -> str:
    base = os.environ.get("SEMIQ_REPORT_DIR")
    if base and not os.path.isabs(path):
        return os.path.join(base, path)
    return path


def cmd_check(args) -> int:
    G = build_geometry(args.geometry, args.n, args.hbar, args.lambda_im)
    suites = args.suite or default_suites(G)
    seed = G.default_seed if args.seed is None else args.seed
    results = []
    for s in suites:
        results.append(run_suite(s, G, points=args.points, seed=seed,
                                 tol=args.tol, timing=args.timing))
    doc = emit_report(results, args.format)
    if args.report:
        path = _report_path(args.report)
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        tmp = path + ".tmp"
        with open(tmp, "w") as fh:
            fh.write(doc)
        os.replace(tmp, path)
        print(f"report written to {path}")
    else:
        sys.stdout.write(doc)
    ok = all(r.all_passed for r in results)
    if not ok:
        failing = [f"{r.suite}:{c.check}" for r in results
                   for c in r.checks if not c.passed]
        print(f"FAILED checks: {', '.join(failing)}", file=sys.stderr)
    return 0 if ok else 1


def _parse_point(text: str, dim: int):
    vals = [float(v) for v in text.split(",")]
    if len(vals) != dim:
        raise ConfigError(f"point has {len(vals)} coordinates, chart has {dim}")
    return tuple(vals)


def _fmt_pair(c, l) -> str:
    return f"classical {c}  lambda-coefficient {l}"


def cmd_eval(args) -> int:
    G = build_geometry(args.geometry, args.n, args.hbar, args.lambda_im)
    pt = _parse_point(args.at, G.dim)
    a = ScalarField.from_expr(G.chart, args.a)
    if args.op == "star":
        v = sq.star_product(a, ScalarField.from_expr(G.chart, args.b), G).at(pt)
        c, l = v.values()
        print(_fmt_pair(complex(c), complex(l)))
        return 0
    if args.op == "commutator":
        b = ScalarField.from_expr(G.chart, args.b)
        v = sq.star_product(a, b, G).at(pt) - sq.star_product(b, a, G).at(pt)
        c, l = v.values()
        print(_fmt_pair(complex(c), complex(l)))
        return 0
    if args.op == "wedge":
        b = ScalarField.from_expr(G.chart, args.b)
        da = sq.QTensor.from_oneform(G, lambda p: _grad(a, p))
        db = sq.QTensor.from_oneform(G, lambda p: _grad(b, p))
        v = sq.wedge1(da, db, G).at(pt)
        c, l = v.values()
        print("da wedge1 db components:")
        print(_fmt_pair(np.array_str(c, precision=12), np.array_str(l, precision=12)))
        return 0
    if args.op == "nablaQ":
        da = sq.QTensor.from_oneform(G, lambda p: _grad(a, p))
        v = sq.nabla_Q(da, G).at(pt)
        c, l = v.values()
        print("nabla_Q(da) coefficients (direction slot first):")
        print(_fmt_pair(np.array_str(c, precision=12), np.array_str(l, precision=12)))
        return 0
    raise ConfigError(f"unknown eval op {args.op!r}")


def _grad(a: ScalarField, pt):
    from .lambda_core import LJet
    v = a.at(pt)
    return LJet(v.c.grad(), None if v.l is None else v.l.grad())


def cmd_evolve(args) -> int:
    from . import evolution as ev
    G = build_geometry(args.geometry, args.n, args.hbar, args.lambda_im)
    points = [_parse_point(chunk, G.dim)
              for chunk in args.at.split(";") if chunk.strip()]
    a = ScalarField.from_expr(G.chart, args.a)
    H = ScalarField.from_expr(G.chart, args.hamiltonian)
    adot = ev.evolve_scalar(a, H, G)
    defect = ev.evolution_defect(a, H, G)
    for pt in points:
        print(f"at {pt}:")
        print(f"  adot = {complex(adot.at(pt).c.value)}")
        print(f"  (da)dot - d(adot) components = "
              f"{np.array_str(defect.at(pt).c.val, precision=12)}")
        print(f"  two-route residual = {ev.defect_two_route_residual(a, H, G, pt):.3e}")
    return 0


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="semiq",
        description="First-order quantisation engine with numeric verification suites.")
    sub = p.add_subparsers(dest="command", required=True)

    def add_geometry_args(sp):
        sp.add_argument("--n", type=int, default=1, help="complex dimension parameter")
        sp.add_argument("--hbar", type=float, default=1.0)
        sp.add_argument("--lambda-im", type=float, default=None,
                        help="imaginary part of the deformation parameter")

    pc = sub.add_parser("check", help="run verification suites")
    pc.add_argument("geometry", help="flat | cpn | flat-torsion | path to JSON config")
    add_geometry_args(pc)
    pc.add_argument("--points", type=int, default=50)
    pc.add_argument("--seed", type=int, default=None,
                    help="sampling seed (default: the geometry's, else 0)")
    pc.add_argument("--tol", type=float, default=None)
    pc.add_argument("--suite", action="append", choices=SUITES,
                    help="suite to run (repeatable; default depends on geometry)")
    pc.add_argument("--report", default=None, help="write the report to this path")
    pc.add_argument("--format", choices=("json", "text"), default="json")
    pc.add_argument("--timing", action="store_true",
                    help="include wall time in the report (breaks byte determinism)")
    pc.set_defaults(fn=cmd_check)

    pe = sub.add_parser("eval", help="evaluate a deformed operation at a point")
    pe.add_argument("op", choices=("star", "wedge", "nablaQ", "commutator"))
    pe.add_argument("--geometry", required=True)
    add_geometry_args(pe)
    pe.add_argument("--a", required=True, help="scalar expression")
    pe.add_argument("--b", default="0", help="scalar expression")
    pe.add_argument("--at", required=True, help="comma-separated chart point")
    pe.set_defaults(fn=cmd_eval)

    pv = sub.add_parser("evolve", help="instantaneous evolution data at a point")
    pv.add_argument("--geometry", required=True)
    add_geometry_args(pv)
    pv.add_argument("--H", dest="hamiltonian", required=True)
    pv.add_argument("--a", required=True)
    pv.add_argument("--at", required=True,
                    help="chart point, or several separated by semicolons")
    pv.set_defaults(fn=cmd_evolve)
    return p


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.fn(args)
    except SemiqError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
