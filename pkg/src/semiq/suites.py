"""Verification suites with deterministic sampling and reports.

Each suite evaluates a set of named checks at seeded random points of a
geometry and records the max-abs residual of the classical and
first-order slots separately. Residuals are always read off the graded
arithmetic exactly; no numerical limit in the deformation parameter is
ever taken.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError
from .geometry import GeometryData, ScalarField, TensorField, compat_residuals
from .lambda_core import Jet, LJet, jet_einsum
from . import semiquant as sq
from . import geometries as geos


@dataclass
class CheckRecord:
    check: str
    max_abs_classical: float
    max_abs_lambda: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_abs_classical <= self.tol and self.max_abs_lambda <= self.tol


@dataclass
class SuiteResult:
    suite: str
    geometry: str
    points: int
    seed: int
    checks: list
    elapsed_ms: Optional[float] = None

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)


SUITES = ("classical-compat", "dga", "metric", "qlc", "cpn-catalogue", "evolution")


def default_tol(G: GeometryData) -> float:
    return 1e-9 if G.deriv_mode == "analytic" else 1e-6


def random_poly_field(chart, rng, degree: int = 2, terms: int = 4) -> ScalarField:
    """Random complex polynomial in the chart coordinates."""
    d = chart.dim
    monos = []
    for _ in range(terms):
        k = int(rng.integers(0, degree + 1))
        idxs = tuple(int(i) for i in rng.integers(0, d, size=k))
        coef = complex(rng.normal(), rng.normal())
        monos.append((coef, idxs))

    def fn(pt):
        total = Jet.zeros(d, (), 3)
        for coef, idxs in monos:
            term = Jet.const(d, coef, 3)
            for i in idxs:
                term = term * Jet.coordinate(d, pt, i, 3)
            total = total + term
        return LJet(total)

    return ScalarField(chart, fn)


def random_oneform(G: GeometryData, rng, degree: int = 2) -> sq.QTensor:
    comps = [random_poly_field(G.chart, rng, degree=degree) for _ in range(G.dim)]

    def fn(pt):
        jets = [c.at(pt).c for c in comps]
        levels = [np.stack([j.levels[k] for j in jets]) for k in range(4)]
        return LJet(Jet(G.dim, levels, 3))

    return sq.QTensor.from_oneform(G, fn)


def _acc(worst: dict, name: str, v: LJet) -> None:
    c, l = v.values()
    rec = worst.setdefault(name, [0.0, 0.0])
    rec[0] = max(rec[0], float(np.max(np.abs(c))))
    rec[1] = max(rec[1], float(np.max(np.abs(l))))


def _acc_vals(worst: dict, name: str, c, l) -> None:
    rec = worst.setdefault(name, [0.0, 0.0])
    rec[0] = max(rec[0], float(np.max(np.abs(c))))
    rec[1] = max(rec[1], float(np.max(np.abs(l))))


# -- individual suites -----------------------------------------------------------

def _suite_classical(G: GeometryData, pts, rng) -> dict:
    worst = {}
    t1, t2, mg = compat_residuals(G)
    for pt in pts:
        f = G.frame(pt)
        ident = jet_einsum("am,mb->ab", f.g, f.ginv).val - np.eye(G.dim)
        _acc_vals(worst, "metric-inverse", ident, 0.0)
        _acc(worst, "poisson-compat", t1.at(pt))
        _acc(worst, "poisson-jacobi", t2.at(pt))
        _acc(worst, "metric-parallel", mg.at(pt))
    return worst


def _suite_dga(G: GeometryData, pts, rng) -> dict:
    worst = {}
    skip_leibniz = G.name == "flat-torsion"
    for pt in pts:
        a = random_poly_field(G.chart, rng)
        b = random_poly_field(G.chart, rng)
        c = random_poly_field(G.chart, rng)
        ab_c = sq.star_product(sq.star_product(a, b, G), c, G)
        a_bc = sq.star_product(a, sq.star_product(b, c, G), G)
        _acc(worst, "star-associator", ab_c.at(pt) - a_bc.at(pt))

        xi = random_oneform(G, rng)
        a_xi_b = sq.module_action(a, sq.module_action(b, xi, "right", G), "left", G)
        axi_b = sq.module_action(b, sq.module_action(a, xi, "left", G), "right", G)
        _acc(worst, "bimodule-assoc", a_xi_b.at(pt) - axi_b.at(pt))

        if not skip_leibniz:
            ab = sq.star_product(a, b, G)
            d_ab = sq.QTensor.from_oneform(G, lambda p, s=ab: _dscalar(s.at(p)))
            da = sq.QTensor.from_oneform(G, lambda p, s=a: _dscalar(s.at(p)))
            db = sq.QTensor.from_oneform(G, lambda p, s=b: _dscalar(s.at(p)))
            rhs = sq.module_action(b, da, "right", G) + sq.module_action(a, db, "left", G)
            _acc(worst, "quantum-leibniz", d_ab.at(pt) - rhs.at(pt))

        eta = random_oneform(G, rng)
        w_xe = sq.wedge1(xi, eta, G).at(pt)
        w_ex = sq.wedge1(eta, xi, G).at(pt)
        _acc_vals(worst, "wedge1-graded-antisym", w_xe.c.val + w_ex.c.val, 0.0)

        lhs = sq.nabla_Q(sq.module_action(a, xi, "left", G), G).at(pt)
        t1 = sq.module_action(a, sq.nabla_Q(xi, G), "left", G).at(pt)
        t2 = sq.otimes1(sq.QTensor.from_oneform(G, lambda p, s=a: _dscalar(s.at(p))), xi).at(pt)
        _acc(worst, "nablaq-left-leibniz", lhs - (t1 + t2))

        # the braiding evaluated on xi (x) da reduces classically to the
        # flip da (x) xi, direction slot first
        sig = sq.sigma_Q(a, xi, G).at(pt)
        av = a.at(pt)
        xv = sq._oneform_model(xi, pt)
        flip = jet_einsum("m,n->mn", av.c.grad(), xv.c)
        _acc_vals(worst, "sigma-classical-flip", sig.c.val - flip.val, 0.0)
    return worst


def _dscalar(v: LJet) -> LJet:
    return LJet(v.c.grad(), None if v.l is None else v.l.grad())


def _suite_metric(G: GeometryData, pts, rng) -> dict:
    worst = {}
    gq = sq.g_q_build(G, check_compat=False)
    g1 = sq.g1_build(G)
    ngq = sq.nabla_Q(gq, G)
    qinv_g = sq.q_map(sq.classical_metric_qtensor(G), G, "q-inverse")
    for pt in pts:
        f = G.frame(pt)
        _acc_vals(worst, "ricci-two-routes", 0.0, (f.ricci2 - f.ricci2_direct).val)
        _acc(worst, "gq-vs-q-inverse", gq.at(pt) - qinv_g.at(pt))
        wq = sq.wedge1_map(gq).at(pt)
        # the deformed wedge of the quantum metric is minus the generalized
        # Ricci two-form; see the decisions record for the orientation
        _acc_vals(worst, "wedge-gq-ricci-pairing", wq.c.val, wq.lam().val + f.ricci2.val)
        w1 = sq.wedge1_map(g1).at(pt)
        _acc(worst, "wedge-g1-zero", w1)
        _acc(worst, "nablaq-gq-zero", ngq.at(pt))
        arr0 = rng.normal(size=(G.dim, G.dim)) + 1j * rng.normal(size=(G.dim, G.dim))
        arr1 = rng.normal(size=(G.dim, G.dim)) + 1j * rng.normal(size=(G.dim, G.dim))
        X = sq.QTensor(G, 2, lambda p, a0=arr0, a1=arr1:
                       LJet(Jet.const(G.dim, a0, 3), Jet.const(G.dim, a1, 3)))
        rt = sq.q_map(sq.q_map(X, G, "q"), G, "q-inverse").at(pt)
        _acc_vals(worst, "q-roundtrip", rt.c.val - arr0, rt.lam().val - arr1)
    return worst


def _suite_qlc(G: GeometryData, pts, rng) -> dict:
    worst = {}
    res = sq.qlc_residual(G)
    for pt in pts:
        _acc(worst, "qlc-residual", res.at(pt))
    return worst


def _suite_catalogue(G: GeometryData, pts, rng) -> dict:
    if not G.name.startswith("cpn"):
        raise ConfigError("the catalogue suite runs on the projective-space geometry")
    worst = {}
    for name in geos.CATALOGUE.names():
        for pt in pts:
            rc, rl = geos.cpn_catalogue_residual(G, name, pt)
            _acc_vals(worst, name, rc, rl)
    return worst


def _suite_evolution(G: GeometryData, pts, rng) -> dict:
    from . import evolution as ev
    worst = {}
    flat = G.name.startswith("flat(")
    for pt in pts:
        a = random_poly_field(G.chart, rng)
        b = random_poly_field(G.chart, rng)
        H = random_poly_field(G.chart, rng)
        _acc_vals(worst, "defect-two-routes", ev.defect_two_route_residual(a, H, G, pt), 0.0)
        # hamiltonian field acts as a derivation on products
        prod = ScalarField(G.chart, lambda p: LJet(a.at(p).c * b.at(p).c))
        adot = ev.evolve_scalar(a, H, G)
        bdot = ev.evolve_scalar(b, H, G)
        v = ev.evolve_scalar(prod, H, G).at(pt)
        rhs_c = a.at(pt).c * bdot.at(pt).c + b.at(pt).c * adot.at(pt).c
        _acc_vals(worst, "hamvf-derivation", (v.c - rhs_c).val, 0.0)
        if flat:
            for k in range(G.dim):
                basis = TensorField(G.chart, 0, 1,
                                    lambda p, k=k: LJet(Jet.const(G.dim, np.eye(G.dim)[k], 3)),
                                    form=True)
                _acc(worst, "cobasis-invariance", ev.evolve_oneform(basis, H, G).at(pt))
    return worst


_SUITE_FNS: dict = {
    "classical-compat": _suite_classical,
    "dga": _suite_dga,
    "metric": _suite_metric,
    "qlc": _suite_qlc,
    "cpn-catalogue": _suite_catalogue,
    "evolution": _suite_evolution,
}


def run_suite(suite: str, G: GeometryData, points: int = 50, seed: int = 0,
              tol: Optional[float] = None, timing: bool = False) -> SuiteResult:
    """Run one named suite at seeded random chart points."""
    if suite not in _SUITE_FNS:
        raise ConfigError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    tol = default_tol(G) if tol is None else float(tol)
    rng = np.random.default_rng(seed)
    pts = [tuple(p) for p in G.sample_points(points, seed)]
    start = time.perf_counter()
    worst = _SUITE_FNS[suite](G, pts, rng)
    elapsed = (time.perf_counter() - start) * 1000.0
    checks = [CheckRecord(name, vals[0], vals[1], tol)
              for name, vals in sorted(worst.items())]
    return SuiteResult(suite=suite, geometry=G.name, points=points, seed=seed,
                       checks=checks, elapsed_ms=elapsed if timing else None)


# -- reports ----------------------------------------------------------------------

def emit_report(results, fmt: str = "json") -> str:
    """Serialize one SuiteResult or a list of them."""
    if isinstance(results, SuiteResult):
        results = [results]
    if fmt == "json":
        payload = []
        for r in results:
            payload.append({
                "suite": r.suite,
                "geometry": r.geometry,
                "seed": r.seed,
                "points": r.points,
                "checks": [{
                    "check": c.check,
                    "max_abs_classical": c.max_abs_classical,
                    "max_abs_lambda": c.max_abs_lambda,
                    "tol": c.tol,
                    "passed": c.passed,
                } for c in r.checks],
                "elapsed_ms": r.elapsed_ms,
                "all_passed": r.all_passed,
            })
        return json.dumps(payload, indent=2) + "\n"
    if fmt == "text":
        lines = []
        for r in results:
            head = f"suite {r.suite} on {r.geometry} ({r.points} points, seed {r.seed})"
            if r.elapsed_ms is not None:
                head += f" [{r.elapsed_ms:.1f} ms]"
            lines.append(head)
            lines.append("-" * len(head))
            width = max(len(c.check) for c in r.checks)
            for c in r.checks:
                status = "pass" if c.passed else "FAIL"
                lines.append(f"  {c.check:<{width}}  classical {c.max_abs_classical:9.2e}"
                             f"  lambda {c.max_abs_lambda:9.2e}  tol {c.tol:.0e}  {status}")
            lines.append("")
        return "\n".join(lines)
    raise ConfigError(f"unknown report format {fmt!r}")
