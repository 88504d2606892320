"""Built-in geometries with exact closed-form jet providers.

``make_flat``: canonical phase space R^{2n} with coordinates
(q^1..q^n, p^1..p^n), Euclidean metric, canonical Poisson bivector and the
trivial connection.

``make_cpn``: the complex projective space CP^n on its standard affine
chart, in real coordinates x^a with z^k = x^k + i x^{k+n}. Index
expressions such as x^{a+n} beyond the chart range fold back with a sign
(x^b = -x^{b+2n}); the kappa symbol implements the same rule. All fields
(metric, inverse, Poisson bivector, Levi-Civita coefficients, curvature)
have rational closed forms evaluated through jets, hence exact.

``make_flat_torsion``: a flat 2d chart with one coordinate-dependent
connection coefficient, used as the registered counterexample that
violates the compatibility conditions.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .errors import UnknownCheckError
from .geometry import Chart, GeometryData, ScalarField, TensorField
from .lambda_core import Jet, LJet, jet_einsum


# -- index folding for CP^n -----------------------------------------------------

def fold_index(a: int, two_n: int) -> tuple[int, int]:
    """Reduce an index to 0..2n-1 with the sign of the folding rule."""
    sign = 1
    while a >= two_n:
        a -= two_n
        sign = -sign
    while a < 0:
        a += two_n
        sign = -sign
    return sign, a


def kappa(a: int, c: int, two_n: int) -> int:
    sa, ia = fold_index(a, two_n)
    sc, ic = fold_index(c, two_n)
    return sa * sc if ia == ic else 0


@lru_cache(maxsize=None)
def _shift_matrix(n: int) -> np.ndarray:
    """P with (P x)_a = x^{a+n} under the folding rule; 2n x 2n."""
    two_n = 2 * n
    P = np.zeros((two_n, two_n))
    for a in range(two_n):
        s, i = fold_index(a + n, two_n)
        P[a, i] = s
    return P


@lru_cache(maxsize=None)
def _kappa_shift(n: int) -> np.ndarray:
    """KP[a,c] = kappa_{a+n,c}."""
    two_n = 2 * n
    KP = np.zeros((two_n, two_n))
    for a in range(two_n):
        for c in range(two_n):
            KP[a, c] = kappa(a + n, c, two_n)
    return KP


# -- flat phase space ------------------------------------------------------------

def canonical_omega(n: int) -> np.ndarray:
    om = np.zeros((2 * n, 2 * n))
    for i in range(n):
        om[i, i + n] = 1.0
        om[i + n, i] = -1.0
    return om


def make_flat(n: int, hbar: float = 1.0) -> GeometryData:
    """Flat R^{2n} with canonical coordinates and trivial connection."""
    if n < 1:
        raise ValueError("n must be >= 1")
    d = 2 * n
    names = tuple([f"q{k+1}" for k in range(n)] + [f"p{k+1}" for k in range(n)])
    chart = Chart(d, names=names, pairing=True, box=1.5)
    eye = np.eye(d)
    om0 = canonical_omega(n)
    return GeometryData(
        chart,
        g_fn=lambda p: Jet.const(d, eye, 3),
        ginv_fn=lambda p: Jet.const(d, eye, 3),
        omega_fn=lambda p: Jet.const(d, om0, 3),
        gamma_fn=lambda p: Jet.zeros(d, (d, d, d), 3),
        levi_civita=True,
        lam=1j * hbar,
        name=f"flat(n={n})",
    )


def make_flat_torsion() -> GeometryData:
    """Flat 2d metric with a torsionful, metric-compatible connection.

    Gam^1_{12} = x^2 and Gam^2_{11} = -x^2: the antisymmetry in the last
    two slots (indices lowered with the flat metric) keeps the metric
    parallel while the torsion breaks Poisson compatibility and produces
    an order-one obstruction residual for the quantum connection. This is
    the registered counterexample geometry.
    """
    chart = Chart(2, box=1.5)
    eye = np.eye(2)
    om0 = np.array([[0.0, 1.0], [-1.0, 0.0]])

    def gamma_fn(pt):
        x2 = Jet.coordinate(2, pt, 1, 3)
        basis = np.zeros((2, 2, 2))
        basis[0, 0, 1] = 1.0
        basis2 = np.zeros((2, 2, 2))
        basis2[1, 0, 0] = -1.0
        return jet_einsum(",ijk->ijk", x2, basis + basis2)

    return GeometryData(
        chart,
        g_fn=lambda p: Jet.const(2, eye, 3),
        ginv_fn=lambda p: Jet.const(2, eye, 3),
        omega_fn=lambda p: Jet.const(2, om0, 3),
        gamma_fn=gamma_fn,
        levi_civita=False,
        lam=1j,
        name="flat-torsion",
    )


# -- CP^n -------------------------------------------------------------------------

def _cpn_base(n: int, pt: tuple, order: int = 3):
    """Common jets at a point: x, x_shift, t^2 and friends."""
    d = 2 * n
    x = Jet.coords(d, pt, order)
    xs = jet_einsum("ab,b->a", _shift_matrix(n), x)          # x^{a+n}
    s = jet_einsum("a,a->", x, x)
    t2 = (Jet.const(d, 1.0, order) + s).reciprocal()
    return x, xs, t2


def _cpn_g(n, pt, order: int = 3):
    x, xs, t2 = _cpn_base(n, pt, order)
    d = 2 * n
    outer = jet_einsum("a,b->ab", x, x) + jet_einsum("a,b->ab", xs, xs)
    return jet_einsum(",ab->ab", 2.0 * t2, np.eye(d)) - jet_einsum(",ab->ab", 2.0 * (t2 * t2), outer)


def _cpn_ginv(n, pt, order: int = 3):
    x, xs, t2 = _cpn_base(n, pt, order)
    d = 2 * n
    outer = jet_einsum("a,b->ab", x, x) + jet_einsum("a,b->ab", xs, xs)
    half_inv_t2 = 0.5 * t2.reciprocal()
    return jet_einsum(",ab->ab", half_inv_t2, np.eye(d)) + jet_einsum(",ab->ab", half_inv_t2, outer)


def _cpn_omega_upper(n, pt, order: int = 3):
    x, xs, t2 = _cpn_base(n, pt, order)
    KP = _kappa_shift(n)
    anti = jet_einsum("a,b->ab", x, xs) - jet_einsum("a,b->ab", xs, x)
    half_inv_t2 = 0.5 * t2.reciprocal()
    return jet_einsum(",ab->ab", half_inv_t2, KP.T) + jet_einsum(",ab->ab", half_inv_t2, anti)


def _cpn_omega_lower(n, pt, order: int = 3):
    x, xs, t2 = _cpn_base(n, pt, order)
    KP = _kappa_shift(n)
    anti = jet_einsum("a,b->ab", x, xs) - jet_einsum("a,b->ab", xs, x)
    return jet_einsum(",ab->ab", 2.0 * t2, KP.T) - jet_einsum(",ab->ab", 2.0 * (t2 * t2), anti)


def _cpn_gamma(n, pt, order: int = 3):
    x, xs, t2 = _cpn_base(n, pt, order)
    d = 2 * n
    KP = _kappa_shift(n)
    eye = np.eye(d)
    term = (jet_einsum("c,ab->abc", x, eye)
            + jet_einsum("b,ac->abc", x, eye)
            + jet_einsum("b,ac->abc", xs, KP)
            + jet_einsum("c,ab->abc", xs, KP))
    return jet_einsum(",abc->abc", -1.0 * t2, term)


def _cpn_riemann(n, pt, order: int = 3):
    """Closed form R[p,c,q,b] for comparison against the derived curvature."""
    d = 2 * n
    g = _cpn_g(n, pt, order)
    oml = _cpn_omega_lower(n, pt, order)
    KP = _kappa_shift(n)
    eye = np.eye(d)
    r = 0.5 * jet_einsum("cb,pq->pcqb", g, eye)
    r = r - 0.5 * jet_einsum("cq,pb->pcqb", g, eye)
    r = r + 0.5 * jet_einsum("bc,pq->pcqb", oml, KP)
    r = r - 0.5 * jet_einsum("qc,pb->pcqb", oml, KP)
    r = r + jet_einsum("bq,pc->pcqb", oml, KP)
    return r


def make_cpn(n: int, order: int = 3) -> GeometryData:
    """CP^n with the Fubini-Study data on the standard affine chart.

    ``order`` is the jet depth of the analytic providers; the default
    supports every operation, lower values speed up purely classical
    checks on high-dimensional charts.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    d = 2 * n
    chart = Chart(d, pairing=True, box=0.75)
    return GeometryData(
        chart,
        g_fn=lambda p: _cpn_g(n, p, order),
        ginv_fn=lambda p: _cpn_ginv(n, p, order),
        omega_fn=lambda p: _cpn_omega_upper(n, p, order),
        gamma_fn=lambda p: _cpn_gamma(n, p, order),
        levi_civita=True,
        lam=1j,
        name=f"cpn(n={n})",
    )


def cpn_complex_dim(G: GeometryData) -> int:
    return G.dim // 2


# -- complex frame on CP^n --------------------------------------------------------

@dataclass
class CPnFrame:
    """Complex-frame fields on the CP^n chart.

    Holds providers for z^i, w^i = t z^i, the one-form tau, the (0,2)
    tensors gamma/gamma_bar, the symplectic two-form, and the Kaehler
    potential. Component arrays are in the real frame.
    """

    G: GeometryData
    n: int

    @property
    def dim(self) -> int:
        return 2 * self.n

    def cvec(self, i: int) -> np.ndarray:
        """Cobasis coefficients of dz^i in the real frame."""
        v = np.zeros(self.dim, dtype=np.complex128)
        v[i] = 1.0
        v[i + self.n] = 1j
        return v

    def z_jets(self, pt) -> Jet:
        """Shape (n,) jet of the complex coordinates."""
        d = self.dim
        x = Jet.coords(d, pt)
        cm = np.zeros((self.n, d), dtype=np.complex128)
        for i in range(self.n):
            cm[i] = self.cvec(i)
        return jet_einsum("ia,a->i", cm, x)

    def t2_jet(self, pt) -> Jet:
        return _cpn_base(self.n, tuple(pt))[2]

    def t_jet(self, pt) -> Jet:
        return self.t2_jet(pt) ** 0.5

    def w_jets(self, pt) -> Jet:
        return jet_einsum(",i->i", self.t_jet(pt), self.z_jets(pt))

    def z_field(self, i: int, conj: bool = False) -> ScalarField:
        def fn(pt):
            j = jet_einsum("i,i->", self.z_jets(pt), _unit(self.n, i))
            return LJet(j.conj() if conj else j)
        return ScalarField(self.G.chart, fn)

    def w_field(self, i: int, conj: bool = False) -> ScalarField:
        def fn(pt):
            j = jet_einsum("i,i->", self.w_jets(pt), _unit(self.n, i))
            return LJet(j.conj() if conj else j)
        return ScalarField(self.G.chart, fn)

    def tau_jet(self, pt) -> Jet:
        """Components of tau = t^2 zbar^i dz^i in the real frame."""
        z = self.z_jets(pt)
        t2 = self.t2_jet(pt)
        cm = np.stack([self.cvec(i) for i in range(self.n)])
        zbar_c = jet_einsum("i,ia->a", z.conj(), cm)
        return jet_einsum(",a->a", t2, zbar_c)

    def tau_field(self, conj: bool = False) -> TensorField:
        def fn(pt):
            t = self.tau_jet(pt)
            return LJet(t.conj() if conj else t)
        return TensorField(self.G.chart, 0, 1, fn, form=True)

    def gamma_jet(self, pt, bar: bool = False) -> Jet:
        """gamma = t^2 dzbar^i (x) dz^i - taubar (x) tau (bar swaps all)."""
        t2 = self.t2_jet(pt)
        cm = np.stack([self.cvec(i) for i in range(self.n)])
        cmb = np.conjugate(cm)
        tau = self.tau_jet(pt)
        if not bar:
            first = jet_einsum(",ab->ab", t2, np.einsum("ia,ib->ab", cmb, cm))
            second = jet_einsum("a,b->ab", tau.conj(), tau)
        else:
            first = jet_einsum(",ab->ab", t2, np.einsum("ia,ib->ab", cm, cmb))
            second = jet_einsum("a,b->ab", tau, tau.conj())
        return first - second

    def varpi_jet(self, pt) -> Jet:
        """Symplectic two-form components: varpi = om_{ab} dx^b wedge dx^a."""
        oml = _cpn_omega_lower(self.n, tuple(pt))
        return -2.0 * oml

    def varpi_field(self) -> TensorField:
        return TensorField.from_jet_fn(self.G.chart, 0, 2,
                                       lambda pt: self.varpi_jet(pt), form=True)

    def kahler_potential(self) -> ScalarField:
        def fn(pt):
            t2 = self.t2_jet(pt)
            # K0 = ln(1 + |z|^2) = -ln t^2
            return LJet(-t2.compose(_ln_derivs(t2.value)))
        return ScalarField(self.G.chart, fn)

    def g_hermitian(self, pt) -> np.ndarray:
        """g_{i jbar} = t^2 delta_{ij} - t^4 zbar^i z^j at a point."""
        z = self.z_jets(pt).val
        t2 = complex(self.t2_jet(pt).value)
        return t2 * np.eye(self.n) - t2 * t2 * np.einsum("i,j->ij", np.conjugate(z), z)


def _unit(n: int, i: int) -> np.ndarray:
    v = np.zeros(n, dtype=np.complex128)
    v[i] = 1.0
    return v


def _ln_derivs(v: complex):
    return (np.log(v), 1 / v, -1 / v ** 2, 2 / v ** 3)


def cpn_frame(G: GeometryData) -> CPnFrame:
    """Complex frame fields for a geometry built by make_cpn."""
    return CPnFrame(G, cpn_complex_dim(G))


# -- expected-value catalogue for the projective space -----------------------------

def _zero_pair(shape):
    z = np.zeros(shape, dtype=np.complex128)
    return z, z.copy()


class _Catalogue:
    """Closed-form checks on the projective-space chart.

    Each entry provides ``engine`` and ``expected`` callables returning
    (classical, first-order) value arrays of identical shape at a point,
    so suites can report both residual slots per check.
    """

    def __init__(self):
        self.entries: dict = {}
        self.aliases: dict = {}

    def register(self, name: str, engine, expected, alias: Optional[str] = None):
        self.entries[name] = (engine, expected)
        if alias:
            self.aliases[alias] = name

    def resolve(self, name: str) -> str:
        if name in self.entries:
            return name
        if name in self.aliases:
            return self.aliases[name]
        raise UnknownCheckError(f"unknown catalogue check {name!r}")

    def names(self):
        return sorted(self.entries)


CATALOGUE = _Catalogue()


def _ctx(G: GeometryData, pt):
    F = cpn_frame(G)
    n = F.n
    z = F.z_jets(pt).val
    t2 = complex(F.t2_jet(pt).value)
    tau = F.tau_jet(pt).val
    return F, n, z, t2, tau, np.conjugate(tau)


def _star_comm_grid(G, pt, left_fields, right_fields):
    from .semiquant import star_product
    n = len(left_fields)
    c = np.zeros((n, n), dtype=np.complex128)
    l = np.zeros((n, n), dtype=np.complex128)
    for i in range(n):
        for j in range(n):
            ab = star_product(left_fields[i], right_fields[j], G).at(pt)
            ba = star_product(right_fields[j], left_fields[i], G).at(pt)
            v = ab - ba
            c[i, j] = complex(v.c.value)
            l[i, j] = complex(v.lam().value)
    return c, l


def _form_comm_grid(G, pt, fields, forms):
    from .semiquant import module_action
    n = len(fields)
    d = G.dim
    c = np.zeros((n, n, d), dtype=np.complex128)
    l = np.zeros((n, n, d), dtype=np.complex128)
    for i in range(n):
        for j in range(n):
            lft = module_action(fields[i], forms[j], "left", G).at(pt)
            rgt = module_action(fields[i], forms[j], "right", G).at(pt)
            v = lft - rgt
            c[i, j] = v.c.val
            l[i, j] = v.lam().val
    return c, l


def _z_fields(G, F, conj=False):
    return [F.z_field(i, conj=conj) for i in range(F.n)]


def _w_fields(G, F, conj=False):
    return [F.w_field(i, conj=conj) for i in range(F.n)]


def _dz_forms(G, F, conj=False):
    from .semiquant import QTensor
    return [QTensor.constant_oneform(G, np.conjugate(F.cvec(i)) if conj else F.cvec(i))
            for i in range(F.n)]


def _dw_forms(G, F, conj=False):
    from .semiquant import QTensor

    def mk(i):
        def fn(pt):
            w = F.w_jets(pt)
            comps = w.grad()                     # [i, a]
            ji = jet_einsum("ia,i->a", comps, _unit(F.n, i))
            return LJet(ji.conj() if conj else ji)
        return fn

    return [QTensor.from_oneform(G, mk(i)) for i in range(F.n)]


# engine/expected builders

def _eng_z_z(G, pt):
    F, n, *_ = _ctx(G, pt)
    return _star_comm_grid(G, pt, _z_fields(G, F), _z_fields(G, F))


def _exp_zero_nn(G, pt):
    F, n, *_ = _ctx(G, pt)
    return _zero_pair((n, n))


def _eng_z_zbar(G, pt):
    F, n, *_ = _ctx(G, pt)
    return _star_comm_grid(G, pt, _z_fields(G, F), _z_fields(G, F, conj=True))


def _exp_z_zbar(G, pt):
    F, n, z, t2, tau, taub = _ctx(G, pt)
    c = np.zeros((n, n), dtype=np.complex128)
    l = 1j / t2 * (np.eye(n) + np.einsum("i,j->ij", z, np.conjugate(z)))
    return c, l


def _eng_w_w(G, pt):
    F, n, *_ = _ctx(G, pt)
    return _star_comm_grid(G, pt, _w_fields(G, F), _w_fields(G, F))


def _eng_w_wbar(G, pt):
    F, n, *_ = _ctx(G, pt)
    return _star_comm_grid(G, pt, _w_fields(G, F), _w_fields(G, F, conj=True))


def _exp_w_wbar(G, pt):
    F, n, *_ = _ctx(G, pt)
    return np.zeros((n, n), dtype=np.complex128), 1j * np.eye(n, dtype=np.complex128)


def _eng_z_dz(G, pt):
    F, n, *_ = _ctx(G, pt)
    return _form_comm_grid(G, pt, _z_fields(G, F), _dz_forms(G, F))


def _eng_zbar_dzbar(G, pt):
    F, n, *_ = _ctx(G, pt)
    return _form_comm_grid(G, pt, _z_fields(G, F, conj=True), _dz_forms(G, F, conj=True))


def _exp_zero_nnd(G, pt):
    F, n, *_ = _ctx(G, pt)
    return _zero_pair((n, n, G.dim))


def _eng_z_dzbar(G, pt):
    F, n, *_ = _ctx(G, pt)
    return _form_comm_grid(G, pt, _z_fields(G, F), _dz_forms(G, F, conj=True))


def _exp_z_dzbar(G, pt):
    F, n, z, t2, tau, taub = _ctx(G, pt)
    c, l = _zero_pair((n, n, G.dim))
    for i in range(n):
        for j in range(n):
            delta = 1.0 if i == j else 0.0
            l[i, j] = 1j / t2 * ((delta + z[i] * np.conjugate(z[j])) * taub
                                 + z[i] * np.conjugate(F.cvec(j)))
    return c, l


def _eng_zbar_dz(G, pt):
    F, n, *_ = _ctx(G, pt)
    return _form_comm_grid(G, pt, _z_fields(G, F, conj=True), _dz_forms(G, F))


def _exp_zbar_dz(G, pt):
    F, n, z, t2, tau, taub = _ctx(G, pt)
    c, l = _zero_pair((n, n, G.dim))
    for i in range(n):
        for j in range(n):
            delta = 1.0 if i == j else 0.0
            l[i, j] = -1j / t2 * ((delta + np.conjugate(z[i]) * z[j]) * tau
                                  + np.conjugate(z[i]) * F.cvec(j))
    return c, l


def _wedge_of(u, v):
    return np.einsum("a,b->ab", u, v) - np.einsum("a,b->ab", v, u)


def _eng_dz_dz_wedge(G, pt):
    from .semiquant import wedge1
    F, n, *_ = _ctx(G, pt)
    d = G.dim
    c = np.zeros((n, n, d, d), dtype=np.complex128)
    l = np.zeros((n, n, d, d), dtype=np.complex128)
    forms = _dz_forms(G, F)
    for i in range(n):
        for j in range(n):
            v = wedge1(forms[i], forms[j], G).at(pt)
            c[i, j] = v.c.val - _wedge_of(F.cvec(i), F.cvec(j))
            l[i, j] = v.lam().val
    return c, l


def _exp_zero_nndd(G, pt):
    F, n, *_ = _ctx(G, pt)
    return _zero_pair((n, n, G.dim, G.dim))


def _anticomm_bracket(F, n, z, t2, tau, taub, i, j):
    """The shared two-form bracket in the wedge anticommutator displays."""
    d = 2 * n
    delta = 1.0 if i == j else 0.0
    dzk = np.zeros((d, d), dtype=np.complex128)
    for k in range(n):
        dzk += _wedge_of(F.cvec(k), np.conjugate(F.cvec(k)))
    ci, cbj = F.cvec(i), np.conjugate(F.cvec(j))
    return ((delta + z[i] * np.conjugate(z[j])) * t2 * dzk
            + _wedge_of(tau, z[i] * cbj) + _wedge_of(np.conjugate(z[j]) * ci, taub))


def _eng_dz_dzbar_anticomm(G, pt):
    from .semiquant import wedge1
    F, n, z, t2, tau, taub = _ctx(G, pt)
    d = G.dim
    c = np.zeros((n, n, d, d), dtype=np.complex128)
    l = np.zeros((n, n, d, d), dtype=np.complex128)
    dzs, dzbs = _dz_forms(G, F), _dz_forms(G, F, conj=True)
    for i in range(n):
        for j in range(n):
            v = (wedge1(dzs[i], dzbs[j], G) + wedge1(dzbs[j], dzs[i], G)).at(pt)
            c[i, j] = v.c.val
            l[i, j] = v.lam().val
    return c, l


def _exp_dz_dzbar_anticomm(G, pt):
    F, n, z, t2, tau, taub = _ctx(G, pt)
    c, l = _zero_pair((n, n, G.dim, G.dim))
    for i in range(n):
        for j in range(n):
            l[i, j] = 1j / t2 * (_anticomm_bracket(F, n, z, t2, tau, taub, i, j)
                                 + _wedge_of(F.cvec(i), np.conjugate(F.cvec(j))))
    return c, l


def _q_factor_fields(G, F, inverse=False):
    """q = 1 + i lam t^-2 (or its inverse) as a graded scalar field."""
    from .geometry import ScalarField
    sgn = -1.0 if inverse else 1.0

    def fn(pt):
        t2 = F.t2_jet(pt)
        return LJet(Jet.const(G.dim, 1.0, 3), t2.reciprocal().scale(sgn * 1j))

    return ScalarField(G.chart, fn, graded=True)


def _eng_q_comm_scalar(G, pt):
    from .semiquant import star_product
    F, n, *_ = _ctx(G, pt)
    q = _q_factor_fields(G, F)
    c = np.zeros((n, n), dtype=np.complex128)
    l = np.zeros((n, n), dtype=np.complex128)
    for i in range(n):
        for j in range(n):
            zbi, zj = F.z_field(i, conj=True), F.z_field(j)
            v = star_product(q, star_product(zbi, zj, G), G).at(pt) - \
                star_product(zj, zbi, G).at(pt)
            c[i, j] = complex(v.c.value)
            l[i, j] = complex(v.lam().value)
    return c, l


def _exp_q_comm_scalar(G, pt):
    F, n, z, t2, tau, taub = _ctx(G, pt)
    # (lam t^-2 / i) delta_ij
    return np.zeros((n, n), dtype=np.complex128), -1j / t2 * np.eye(n)


def _scalar_left_on_form(G, a, xi):
    from .semiquant import module_action
    return module_action(a, xi, "left", G)


def _eng_q_comm_form(G, pt):
    from .semiquant import module_action
    F, n, *_ = _ctx(G, pt)
    q = _q_factor_fields(G, F)
    d = G.dim
    c = np.zeros((n, n, d), dtype=np.complex128)
    l = np.zeros((n, n, d), dtype=np.complex128)
    dzs = _dz_forms(G, F)
    for i in range(n):
        for j in range(n):
            zbi = F.z_field(i, conj=True)
            lhs = _scalar_left_on_form(G, q, _scalar_left_on_form(G, zbi, dzs[j]))
            rhs = module_action(zbi, dzs[j], "right", G)
            v = lhs.at(pt) - rhs.at(pt)
            c[i, j] = v.c.val
            l[i, j] = v.lam().val
    return c, l


def _exp_q_comm_form(G, pt):
    F, n, z, t2, tau, taub = _ctx(G, pt)
    c, l = _zero_pair((n, n, G.dim))
    for i in range(n):
        for j in range(n):
            delta = 1.0 if i == j else 0.0
            l[i, j] = -1j / t2 * (delta + np.conjugate(z[i]) * z[j]) * tau
    return c, l


def _eng_qinv_comm_form(G, pt):
    from .semiquant import module_action
    F, n, *_ = _ctx(G, pt)
    qi = _q_factor_fields(G, F, inverse=True)
    d = G.dim
    c = np.zeros((n, n, d), dtype=np.complex128)
    l = np.zeros((n, n, d), dtype=np.complex128)
    dzbs = _dz_forms(G, F, conj=True)
    for i in range(n):
        for j in range(n):
            zi = F.z_field(i)
            lhs = _scalar_left_on_form(G, qi, _scalar_left_on_form(G, zi, dzbs[j]))
            rhs = module_action(zi, dzbs[j], "right", G)
            v = lhs.at(pt) - rhs.at(pt)
            c[i, j] = v.c.val
            l[i, j] = v.lam().val
    return c, l


def _exp_qinv_comm_form(G, pt):
    F, n, z, t2, tau, taub = _ctx(G, pt)
    c, l = _zero_pair((n, n, G.dim))
    for i in range(n):
        for j in range(n):
            delta = 1.0 if i == j else 0.0
            l[i, j] = 1j / t2 * (delta + z[i] * np.conjugate(z[j])) * taub
    return c, l


def _eng_qinv_wedge_anticomm(G, pt):
    from .semiquant import wedge1
    F, n, z, t2, tau, taub = _ctx(G, pt)
    d = G.dim
    c = np.zeros((n, n, d, d), dtype=np.complex128)
    l = np.zeros((n, n, d, d), dtype=np.complex128)
    dzs, dzbs = _dz_forms(G, F), _dz_forms(G, F, conj=True)
    for i in range(n):
        for j in range(n):
            w1 = wedge1(dzs[i], dzbs[j], G).at(pt)
            w2 = wedge1(dzbs[j], dzs[i], G).at(pt)
            # (1 - i lam t^-2) . (dz w1 dzbar): scalar prefactor on a form
            qc = w1.c
            ql = w1.lam() - w1.c.scale(1j / t2)
            v_c = qc + w2.c
            v_l = ql + w2.lam()
            c[i, j] = v_c.val
            l[i, j] = v_l.val
    return c, l


def _exp_qinv_wedge_anticomm(G, pt):
    F, n, z, t2, tau, taub = _ctx(G, pt)
    c, l = _zero_pair((n, n, G.dim, G.dim))
    for i in range(n):
        for j in range(n):
            l[i, j] = 1j / t2 * _anticomm_bracket(F, n, z, t2, tau, taub, i, j)
    return c, l


def _eng_w_dwbar(G, pt):
    F, n, *_ = _ctx(G, pt)
    return _form_comm_grid(G, pt, _w_fields(G, F), _dw_forms(G, F, conj=True))


def _exp_w_dwbar(G, pt):
    F, n, z, t2, tau, taub = _ctx(G, pt)
    c, l = _zero_pair((n, n, G.dim))
    w = F.w_jets(pt).val
    wb = np.conjugate(w)
    dw = F.w_jets(pt).grad().val              # [i, a]
    dwb = np.conjugate(dw)
    for i in range(n):
        for j in range(n):
            delta = 1.0 if i == j else 0.0
            l[i, j] = 0.5j * ((2 * delta + w[i] * wb[j] * (1.0 / t2 - 2.0))
                              * (taub - tau) / 2.0
                              + w[i] * dwb[j] - wb[j] * dw[i])
    return c, l


def _eng_w_dw(G, pt):
    F, n, *_ = _ctx(G, pt)
    return _form_comm_grid(G, pt, _w_fields(G, F), _dw_forms(G, F))


def _exp_w_dw(G, pt):
    F, n, z, t2, tau, taub = _ctx(G, pt)
    c, l = _zero_pair((n, n, G.dim))
    w = F.w_jets(pt).val
    dw = F.w_jets(pt).grad().val
    for i in range(n):
        for j in range(n):
            l[i, j] = -0.5j * (w[i] * w[j] * (2 * taub + (taub - tau) / (2 * t2))
                               + w[i] * dw[j] + w[j] * dw[i])
    return c, l


def _eng_g1(G, pt):
    from .semiquant import g1_build
    v = g1_build(G).at(pt)
    return v.c.val, v.lam().val


def _exp_g1(G, pt):
    """The corrected complex-frame display of the wedge-killing quantum metric.

    The correction term is -(lam/2)(n+1) i (gammabar - gamma) in deformed
    tensor-product form; the sign is the one that annihilates the deformed
    wedge, consistent with the commutation-relation closed forms.
    """
    from .semiquant import QTensor, otimes1
    F, n, z, t2, tau, taub = _ctx(G, pt)

    def hermitian_row(jj):
        def fn(p):
            zz = F.z_jets(p)
            tt2 = F.t2_jet(p)
            gi = jet_einsum(",i->i", tt2, _unit(n, jj)) - jet_einsum(
                ",i->i", tt2 * tt2, jet_einsum("i,->i", zz.conj(), zz.take_index(jj)))
            cm = np.stack([F.cvec(k) for k in range(n)])
            return LJet(jet_einsum("i,ia->a", gi, cm))
        return fn

    def hermitian_col(ii):
        def fn(p):
            zz = F.z_jets(p)
            tt2 = F.t2_jet(p)
            gj = jet_einsum(",j->j", tt2, _unit(n, ii)) - jet_einsum(
                ",j->j", tt2 * tt2, jet_einsum(",j->j", zz.take_index(ii).conj(), zz))
            cmb = np.stack([np.conjugate(F.cvec(k)) for k in range(n)])
            return LJet(jet_einsum("j,ja->a", gj, cmb))
        return fn

    total = None
    for jj in range(n):
        term = otimes1(QTensor.from_oneform(G, hermitian_row(jj)),
                       QTensor.constant_oneform(G, np.conjugate(F.cvec(jj))))
        total = term if total is None else total + term
    for ii in range(n):
        total = total + otimes1(QTensor.from_oneform(G, hermitian_col(ii)),
                                QTensor.constant_oneform(G, F.cvec(ii)))
    v = total.at(pt)
    gam_ = F.gamma_jet(pt, bar=False).val
    gamb = F.gamma_jet(pt, bar=True).val
    return v.c.val, v.lam().val + 0.5 * (n + 1) * 1j * (gam_ - gamb)


def _eng_nablaq_dz(G, pt, sgn):
    from .semiquant import QTensor, nabla_Q
    F, n, *_ = _ctx(G, pt)
    d = G.dim
    c = np.zeros((n, d, d), dtype=np.complex128)
    l = np.zeros((n, d, d), dtype=np.complex128)
    for i in range(n):
        cv = F.cvec(i) if sgn > 0 else np.conjugate(F.cvec(i))
        v = nabla_Q(QTensor.constant_oneform(G, cv), G).at(pt)
        c[i] = v.c.val
        l[i] = v.lam().val
    return c, l


def _exp_nablaq_dz(G, pt, sgn):
    from .semiquant import QTensor, otimes1
    from .lambda_core import LambdaScalar
    F, n, *_ = _ctx(G, pt)
    d = G.dim
    c = np.zeros((n, d, d), dtype=np.complex128)
    l = np.zeros((n, d, d), dtype=np.complex128)
    tau_f = QTensor.from_oneform(
        G, lambda p: LJet(F.tau_jet(p).conj() if sgn < 0 else F.tau_jet(p)))
    for i in range(n):
        cv = F.cvec(i) if sgn > 0 else np.conjugate(F.cvec(i))
        dzi = QTensor.constant_oneform(G, cv)
        v = (otimes1(tau_f, dzi) + otimes1(dzi, tau_f)).scale(
            LambdaScalar(1, sgn * 1j)).at(pt)
        c[i] = v.c.val
        l[i] = v.lam().val
    return c, l


CATALOGUE.register("z-z-comm", _eng_z_z, _exp_zero_nn)
CATALOGUE.register("z-zbar-comm", _eng_z_zbar, _exp_z_zbar, alias="z-comm")
CATALOGUE.register("z-dz-comm", _eng_z_dz, _exp_zero_nnd)
CATALOGUE.register("zbar-dzbar-comm", _eng_zbar_dzbar, _exp_zero_nnd)
CATALOGUE.register("z-dzbar-comm", _eng_z_dzbar, _exp_z_dzbar)
CATALOGUE.register("zbar-dz-comm", _eng_zbar_dz, _exp_zbar_dz)
CATALOGUE.register("dz-dz-wedge", _eng_dz_dz_wedge, _exp_zero_nndd)
CATALOGUE.register("dz-dzbar-anticomm", _eng_dz_dzbar_anticomm, _exp_dz_dzbar_anticomm)
CATALOGUE.register("q-comm-scalar", _eng_q_comm_scalar, _exp_q_comm_scalar)
CATALOGUE.register("q-comm-form", _eng_q_comm_form, _exp_q_comm_form)
CATALOGUE.register("qinv-comm-form", _eng_qinv_comm_form, _exp_qinv_comm_form)
CATALOGUE.register("qinv-wedge-anticomm", _eng_qinv_wedge_anticomm, _exp_qinv_wedge_anticomm)
CATALOGUE.register("w-w-comm", _eng_w_w, _exp_zero_nn)
CATALOGUE.register("w-wbar-comm", _eng_w_wbar, _exp_w_wbar, alias="w-comm")
CATALOGUE.register("w-dwbar-comm", _eng_w_dwbar, _exp_w_dwbar)
CATALOGUE.register("w-dw-comm", _eng_w_dw, _exp_w_dw)
CATALOGUE.register("g1", _eng_g1, _exp_g1)
CATALOGUE.register("nablaQ-dz+", lambda G, p: _eng_nablaq_dz(G, p, +1),
                   lambda G, p: _exp_nablaq_dz(G, p, +1))
CATALOGUE.register("nablaQ-dz-", lambda G, p: _eng_nablaq_dz(G, p, -1),
                   lambda G, p: _exp_nablaq_dz(G, p, -1))


def cpn_expected(G: GeometryData, check_id: str, point):
    """Closed-form expected value (classical, first-order arrays) for a
    registered catalogue check at a point."""
    name = CATALOGUE.resolve(check_id)
    return CATALOGUE.entries[name][1](G, tuple(point))


def cpn_catalogue_residual(G: GeometryData, check_id: str, point) -> tuple:
    """(classical, first-order) max-abs residual of a catalogue check."""
    name = CATALOGUE.resolve(check_id)
    eng, exp = CATALOGUE.entries[name]
    ec, el = eng(G, tuple(point))
    xc, xl = exp(G, tuple(point))
    return (float(np.max(np.abs(ec - xc))), float(np.max(np.abs(el - xl))))
