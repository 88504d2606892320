"""First-order quantisation kernel.

Deformed products, bimodule actions, the deformed wedge, the quantum
connection with its generalized braiding, quantum metrics, the
generalized Ricci two-form and the quantum-Levi-Civita obstruction.

Representation
--------------
A rank-k ``QTensor`` over the tensor basis stores lam-graded coefficient
arrays ``c[m1..mk]`` in left-collected normal form: the element is
``c . (dx^{m1} (x) ... (x) dx^{mk})`` with the coefficient acting through
the deformed left module action. All operations are structure constants
derived from the bimodule relations

    a . xi = a xi + (lam/2) om^{ij} a_,i nabla_j xi
    xi . a = a xi - (lam/2) om^{ij} a_,i nabla_j xi
    (xi . a) (x) eta = xi (x) (a . eta)

so that moving a function across a tensor slot costs one connection
contraction at first order. Quantum forms (``form=True``) store classical
antisymmetric components per lam grade; the deformed wedge acts on those
components directly. ``basis="q0"`` marks the classical-tensor side of the
quantisation isomorphism (outputs of ``q_map``).
"""

from __future__ import annotations

import warnings
from itertools import permutations
from typing import Callable, Optional

import numpy as np

from .errors import ConsistencyError
from .geometry import GeometryData, PointFrame, ScalarField, TensorField, cov_deriv_jet
from .lambda_core import Jet, LJet, LambdaScalar, jet_einsum

_L = "abcdefghmnopqrs"


# -- graded star-einsum ----------------------------------------------------------

def _pick_free(spec: str, count: int) -> str:
    return "".join(c for c in "zyxwvut" if c not in spec)[:count]


def _fstar(spec: str, A: LJet, B: LJet, om: Jet) -> LJet:
    """Contraction of lam-graded jets with the (lam/2) om^{ij} d_i d_j correction.

    Computes the deformed product of coefficient fields under an einsum
    contraction: classical part ``einsum(spec, A, B)``, first-order part
    bilinear in the grades plus half the Poisson contraction of the
    classical gradients.
    """
    ins, out = spec.split("->")
    sa, sb = ins.split(",")
    c = jet_einsum(spec, A.c, B.c)
    terms = []
    if A.l is not None:
        terms.append(jet_einsum(spec, A.l, B.c))
    if B.l is not None:
        terms.append(jet_einsum(spec, A.c, B.l))
    x, y = _pick_free(spec, 2)
    da, db = A.c.grad(), B.c.grad()
    cross = jet_einsum(f"{sa}{x},{sb}{y}->{out}{x}{y}", da, db)
    terms.append(0.5 * jet_einsum(f"{out}{x}{y},{x}{y}->{out}", cross, om))
    l = terms[0]
    for t in terms[1:]:
        l = l + t
    return LJet(c, l)


def _collect_correction(c0: Jet, f: PointFrame) -> Jet:
    """(1/2) om^{st} Gam^u_{t m_j} d_s c0[.. u at j ..], summed over slots.

    The first-order cost of collecting classical coefficients to the left
    of a tensor-basis monomial.
    """
    rank = len(c0.shape)
    idx = _L[:rank]
    dc = c0.grad()
    total = None
    for j in range(rank):
        src = idx[:j] + "u" + idx[j + 1:]
        half = jet_einsum(f"{src}z,zt->{src}t", dc, f.om)
        term = jet_einsum(f"ut{idx[j]},{src}t->{idx}", f.gam, half)
        total = term if total is None else total + term
    return 0.5 * total


def _slot_gamma(c0: Jet, f: PointFrame) -> Jet:
    """M[m_vec, t] = Gam^u_{t m_j} c0[.. u at j ..] summed over slots."""
    rank = len(c0.shape)
    idx = _L[:rank]
    total = None
    for j in range(rank):
        src = idx[:j] + "u" + idx[j + 1:]
        term = jet_einsum(f"ut{idx[j]},{src}->{idx}t", f.gam, c0)
        total = term if total is None else total + term
    return total


# -- QTensor ---------------------------------------------------------------------

class QTensor:
    """Rank-k element of the deformed cotangent tensor or exterior power."""

    def __init__(self, G: GeometryData, rank: int, fn: Callable[[tuple], LJet],
                 form: bool = False, basis: str = "q1"):
        self.G = G
        self.rank = rank
        self.fn = fn
        self.form = form
        self.basis = basis

    def at(self, point) -> LJet:
        return self.fn(tuple(point))

    def values(self, point) -> tuple[np.ndarray, np.ndarray]:
        return self.at(point).values()

    def __add__(self, other: "QTensor") -> "QTensor":
        if (self.rank, self.form, self.basis) != (other.rank, other.form, other.basis):
            raise ValueError("mismatched quantum tensors")
        return QTensor(self.G, self.rank, lambda pt: self.fn(pt) + other.fn(pt),
                       self.form, self.basis)

    def __sub__(self, other: "QTensor") -> "QTensor":
        return self + other.scale(-1.0)

    def scale(self, z) -> "QTensor":
        """Multiply by a constant complex number or LambdaScalar."""
        return QTensor(self.G, self.rank, lambda pt: self.fn(pt).scale(z),
                       self.form, self.basis)

    # -- constructors -----------------------------------------------------------

    @classmethod
    def from_oneform(cls, G: GeometryData, comp_fn: Callable[[tuple], LJet]) -> "QTensor":
        """Classical one-form components -> left-collected normal form."""

        def fn(pt):
            v = comp_fn(tuple(pt))
            f = G.frame(pt)
            corr = _collect_correction(v.c, f)
            return LJet(v.c, corr if v.l is None else v.l + corr)

        return cls(G, 1, fn)

    @classmethod
    def from_oneform_field(cls, G: GeometryData, tf: TensorField) -> "QTensor":
        return cls.from_oneform(G, tf.at)

    @classmethod
    def constant_oneform(cls, G: GeometryData, coeffs) -> "QTensor":
        """One-form with constant coefficients; collection is free."""
        arr = np.asarray(coeffs, dtype=np.complex128)
        return cls(G, 1, lambda pt: LJet(Jet.const(G.dim, arr, 3)))

    @classmethod
    def from_form(cls, G: GeometryData, comp_fn: Callable[[tuple], LJet],
                  degree: int) -> "QTensor":
        """Quantum p-form from classical antisymmetric components per grade."""
        return cls(G, degree, lambda pt: comp_fn(tuple(pt)), form=True)

    def to_classical(self) -> "QTensor":
        """Rank-1 normal form back to classical components."""
        if self.rank != 1 or self.form:
            raise ValueError("to_classical applies to rank-1 tensor-basis elements")

        def fn(pt):
            v = self.at(pt)
            corr = _collect_correction(v.c, self.G.frame(pt))
            return LJet(v.c, (v.lam() - corr))

        return QTensor(self.G, 1, fn, basis="q0")


def _oneform_model(xi: QTensor, pt) -> LJet:
    """Classical (model) components of a quantum one-form."""
    if xi.rank != 1:
        raise ValueError("expected a one-form")
    v = xi.at(pt)
    if xi.form or xi.basis == "q0":
        return v
    corr = _collect_correction(v.c, xi.G.frame(pt))
    return LJet(v.c, v.lam() - corr)


# -- deformed products and actions ----------------------------------------------

def star_product(a: ScalarField, b: ScalarField, G: GeometryData) -> ScalarField:
    """a . b = ab + (lam/2) om^{ij} a_,i b_,j, graded over lam."""

    def fn(pt):
        return _fstar(",->", a.at(pt), b.at(pt), G.frame(pt).om)

    return ScalarField(G.chart, fn, graded=True)


def module_action(a: ScalarField, xi: QTensor, side: str, G: GeometryData) -> QTensor:
    """Left or right action of a function on a normal-form quantum tensor."""
    if xi.form or xi.basis != "q1":
        raise ValueError("module_action expects a tensor-basis quantum tensor")
    idx = _L[: xi.rank]

    if side == "left":
        def fn(pt):
            return _fstar(f",{idx}->{idx}", a.at(pt), xi.at(pt), G.frame(pt).om)
    elif side == "right":
        def fn(pt):
            f = G.frame(pt)
            av, xv = a.at(pt), xi.at(pt)
            base = _fstar(f"{idx},->{idx}", xv, av, f.om)
            slot = _slot_gamma(xv.c, f)
            mov = jet_einsum("i,it->t", av.c.grad(), f.om)
            corr = jet_einsum(f"{idx}t,t->{idx}", slot, mov)
            return LJet(base.c, base.lam() + corr)
    else:
        raise ValueError("side must be 'left' or 'right'")

    return QTensor(G, xi.rank, fn, basis="q1")


def otimes1(X: QTensor, Y: QTensor) -> QTensor:
    """Deformed tensor product over the quantised function algebra."""
    if X.form or Y.form or X.basis != "q1" or Y.basis != "q1":
        raise ValueError("otimes1 expects tensor-basis quantum tensors")
    G = X.G
    ia, ib = _L[: X.rank], _L[X.rank: X.rank + Y.rank]

    def fn(pt):
        f = G.frame(pt)
        A, B = X.at(pt), Y.at(pt)
        base = _fstar(f"{ia},{ib}->{ia}{ib}", A, B, f.om)
        # moving B's coefficients across X's slots
        slot = _slot_gamma(A.c, f)
        mov = jet_einsum(f"{ib}i,it->{ib}t", B.c.grad(), f.om)
        corr = jet_einsum(f"{ia}t,{ib}t->{ia}{ib}", slot, mov)
        return LJet(base.c, base.lam() + corr)

    return QTensor(G, X.rank + Y.rank, fn)


# -- wedge machinery --------------------------------------------------------------

def _wedge_arrays(A: Jet, B: Jet, p: int, q: int) -> Jet:
    """Components of the classical wedge of antisymmetric components."""
    if p == 0 or q == 0:
        sub = _L[: p + q]
        return jet_einsum(f"{sub[:p]},{sub[p:]}->{sub}", A, B)
    if p == 1 and q == 1:
        t = jet_einsum("a,b->ab", A, B)
        return t - t.reorder("ba->ab")
    idx = _L[: p + q]
    raw = jet_einsum(f"{idx[:p]},{idx[p:]}->{idx}", A, B)
    total = None
    for perm in permutations(range(p + q)):
        sgn = _perm_sign(perm)
        dst = "".join(idx[k] for k in perm)
        term = raw.reorder(f"{idx}->{dst}") if dst != idx else raw
        term = sgn * term
        total = term if total is None else total + term
    import math
    return (1.0 / (math.factorial(p) * math.factorial(q))) * total


def _perm_sign(perm) -> int:
    sgn = 1
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, ln = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            ln += 1
        if ln % 2 == 0:
            sgn = -sgn
    return sgn


class HFamily:
    """The dim^2 two-forms controlling the deformed wedge correction."""

    def __init__(self, G: GeometryData):
        self.G = G

    def array(self, point) -> Jet:
        """H[i,j,a,b] components at a point."""
        return self.G.frame(point).h_fam

    def form(self, i: int, j: int) -> TensorField:
        return TensorField.from_jet_fn(
            self.G.chart, 0, 2,
            lambda pt: self.G.frame(pt).h_fam.take_index((i, j)), form=True)


def h_family(G: GeometryData) -> HFamily:
    return HFamily(G)


def wedge1(xi: QTensor, eta: QTensor, G: Optional[GeometryData] = None) -> QTensor:
    """Deformed wedge of quantum forms of degrees p and q."""
    G = G or xi.G
    p = xi.rank
    q = eta.rank
    if p + q > G.dim:
        raise ValueError(f"wedge of degrees {p}+{q} exceeds chart dimension {G.dim}")

    def model(z: QTensor, pt) -> LJet:
        if z.rank == 1 and not z.form:
            return _oneform_model(z, pt)
        if not z.form:
            raise ValueError("wedge1 operands must be forms (or one-forms)")
        return z.at(pt)

    def fn(pt):
        f = G.frame(pt)
        A, B = model(xi, pt), model(eta, pt)
        c = _wedge_arrays(A.c, B.c, p, q)
        lam = _wedge_arrays(A.c, B.lam(), p, q) + _wedge_arrays(A.lam(), B.c, p, q)
        # functorial correction: (1/2) om^{ij} nabla_i A ^ nabla_j B
        dA = cov_deriv_jet(A.c, f.gam, 0, p)
        dB = cov_deriv_jet(B.c, f.gam, 0, q)
        if p == 1 and q == 1:
            half = jet_einsum("ai,ij->aj", dA, f.om)
            t = jet_einsum("aj,bj->ab", half, dB)
            lam = lam + 0.5 * (t - t.reorder("ba->ab"))
        else:
            for i in range(G.dim):
                for j in range(G.dim):
                    om_ij = f.om.take_index((i, j))
                    w = _wedge_arrays(dA.take_index(i, axis=p), dB.take_index(j, axis=q), p, q)
                    lam = lam + 0.5 * jet_einsum(f",{_L[:p+q]}->{_L[:p+q]}", om_ij, w)
        # quantum correction through the H family: the sign pairing with the
        # reported H is pinned by the graded Leibniz rule of d (and by the
        # closed-form wedge anticommutator on the projective space)
        sign = -1.0 if (p % 2 == 1) else 1.0
        if p == 1 and q == 1:
            hterm = jet_einsum("ij,ijab->ab", jet_einsum("i,j->ij", A.c, B.c), f.h_fam)
            lam = lam + sign * hterm
        else:
            for i in range(G.dim):
                for j in range(G.dim):
                    hij = f.h_fam.take_index((i, j))
                    ia = A.c.take_index(i, axis=0) if p >= 1 else A.c
                    jb = B.c.take_index(j, axis=0) if q >= 1 else B.c
                    w = _wedge_arrays(ia, jb, p - 1, q - 1)
                    w2 = _wedge_arrays(hij, w, 2, p + q - 2)
                    lam = lam + sign * w2
        return LJet(c, lam)

    return QTensor(G, p + q, fn, form=True)


def _qform_from_wedge_display(G: GeometryData, coeff_fn) -> QTensor:
    """Quantum two-form X_{mn} . (dx^m wedge1 dx^n) from its coefficient array.

    Expands the deformed wedge of cobasis elements and the left action of
    the coefficients, returning classical antisymmetric components per
    grade. This is also exactly the wedge map applied to a rank-2
    normal-form tensor.
    """

    def fn(pt):
        f = G.frame(pt)
        X = coeff_fn(tuple(pt))
        Xc = X.c
        c = Xc - Xc.reorder("ba->ab")
        lam = X.lam() - X.lam().reorder("ba->ab")
        # left-action cost: (1/2) om^{ij} d_i X_{mn} nabla_j (dx^m ^ dx^n)
        dX = Xc.grad()
        V = jet_einsum("ij,mja->mai", f.om, f.gam)
        t1 = -jet_einsum("mai,mbi->ab", V, dX)
        t3 = -jet_einsum("nbi,ani->ab", V, dX)
        lam = lam + 0.5 * (t1 - t1.reorder("ba->ab") + t3 - t3.reorder("ba->ab"))
        # deformed wedge of the cobasis: (1/2) om^{ij} Gam^m_{ia} Gam^n_{jb} + H^{mn}
        U1 = jet_einsum("ij,mia->mja", f.om, f.gam)
        U2 = jet_einsum("mja,njb->mnab", U1, f.gam)
        t = jet_einsum("mnab,mn->ab", U2, Xc)
        lam = lam + 0.5 * (t - t.reorder("ba->ab"))
        lam = lam - jet_einsum("mn,mnab->ab", Xc, f.h_fam)
        return LJet(c, lam)

    return QTensor(G, 2, fn, form=True)


def wedge1_map(X: QTensor) -> QTensor:
    """The deformed wedge applied to a rank-2 tensor-basis element."""
    if X.rank != 2 or X.form or X.basis != "q1":
        raise ValueError("wedge1_map expects a rank-2 tensor-basis element")
    return _qform_from_wedge_display(X.G, X.at)


# -- quantum connection ------------------------------------------------------------

def _qdata(f: PointFrame) -> dict:
    return f.__dict__.setdefault("_qdata", {})


def nq_basis(f: PointFrame) -> LJet:
    """Normal-form coefficients N[i,m,n] of the quantised connection on dx^i.

    The quantised connection on the cobasis is

        nabla_Q dx^i = -(Gam^i_{mn}
            + (lam/2) om^{sj} (Gam^i_{mk,s} Gam^k_{jn}
                               - Gam^i_{kt} Gam^k_{sm} Gam^t_{jn}
                               - Gam^i_{jk} R^k_{nms})) dx^m (x) dx^n

    where the classical coefficient multiplies the first slot as a
    classical one-form (collecting it to the left costs a further
    correction) and R carries the commutator sign convention of
    ``PointFrame.riemann``. Both readings are pinned by the closed-form
    quantised connection on the projective space, which is sensitive to
    each of them separately.
    """
    cache = _qdata(f)
    if "nq" in cache:
        return cache["nq"]
    om, gam, dgam = f.om, f.gam, f.gam.grad()
    r = f.riemann
    # A = om^{sj} Gam^i_{mk,s} Gam^k_{jn}
    A = jet_einsum("imkj,kjn->imn", jet_einsum("sj,imks->imkj", om, dgam), gam)
    X1 = jet_einsum("ikt,ksm->itsm", gam, gam)
    Y = jet_einsum("sj,tjn->stn", om, gam)
    B = jet_einsum("itsm,stn->imn", X1, Y)
    Z = jet_einsum("sj,ijk->isk", om, gam)
    C = jet_einsum("isk,knms->imn", Z, r)
    n1 = -0.5 * (A - B - C)
    n0 = -gam
    # left-collection of the first-slot classical coefficient
    half = jet_einsum("st,utm->usm", om, gam)
    extra = jet_einsum("usm,iuns->imn", half, dgam)
    n1 = n1 - 0.5 * extra
    cache["nq"] = LJet(n0, n1)
    return cache["nq"]


def sigma_basis(f: PointFrame) -> np.ndarray:
    """First-order part s1[j,i,u,v] of the braiding on dx^j (x) dx^i.

    The classical part is the flip; the first-order part is evaluated from
    the defining difference of the two Leibniz rules.
    """
    cache = _qdata(f)
    if "sigma1" in cache:
        return cache["sigma1"]
    d = f.dim
    eye = np.eye(d)
    N = nq_basis(f)
    s1 = np.zeros((d, d, d, d), dtype=np.complex128)
    for j in range(d):
        xj = Jet.coordinate(d, f.point, j, 3)
        omj = f.om.take_index(j, axis=0)
        # dx^i . x^j in normal form, batched over i
        c = jet_einsum(",ir->ir", xj, eye)
        l = jet_einsum("t,itr->ir", omj, f.gam)
        A = _nablaQ1_batched(LJet(c, l), f)
        # (nabla_Q dx^i) . x^j, batched over i
        base = _fstar("imn,->imn", N, LJet(xj), f.om)
        V = jet_einsum("t,utm->um", omj, f.gam)
        corr = jet_einsum("um,iun->imn", V, N.c) + jet_einsum("un,imu->imn", V, N.c)
        Bv = (base.lam() + corr).val
        s1[j] = A.lam().val - Bv
    cache["sigma1"] = s1
    return s1


def _nablaQ1_batched(cf: LJet, f: PointFrame) -> LJet:
    """Quantised connection on a batch of one-forms given by normal-form
    coefficients cf[batch..., r]; output [batch..., m, n]."""
    N = nq_basis(f)
    nb = len(cf.c.shape) - 1
    b = "opqrs"[:nb]
    base = _fstar(f"{b}i,imn->{b}mn", cf, N, f.om)
    # d(coeff) (x) dx^i with left collection of the differential
    dc = cf.c.grad()                          # [b, r, k]
    dl = cf.lam().grad() if cf.l is not None else None
    d2 = cf.c.grad().grad()                   # [b, r, u, s]
    A = jet_einsum("st,utk->usk", f.om, f.gam)
    corr = 0.5 * jet_einsum(f"usk,{b}rus->{b}rk", A, d2)
    fc_l = corr if dl is None else dl + corr
    out_c = base.c + dc.reorder(f"{b}rk->{b}kr")
    out_l = base.lam() + fc_l.reorder(f"{b}rk->{b}kr")
    return LJet(out_c, out_l)


def nq2_basis(f: PointFrame) -> LJet:
    """Coefficients NQ2[m,n,r,s,t] of the quantised connection on the
    rank-2 cobasis monomials, braiding included."""
    cache = _qdata(f)
    if "nq2" in cache:
        return cache["nq2"]
    d = f.dim
    eye = np.eye(d)
    N = nq_basis(f)
    # term (i): (nabla_Q dx^m) (x) dx^n
    p1c = jet_einsum("mrs,nt->mnrst", N.c, eye)
    p1l = jet_einsum("mrs,nt->mnrst", N.lam(), eye)
    # term (ii): dx^m (x) (nabla_Q dx^n), collected
    zc = jet_einsum("nst,mr->mnrst", N.c, eye)
    dN = N.c.grad()                          # [n,s,t,i]
    mov = jet_einsum("ij,mjr->mri", f.om, f.gam)
    zl = jet_einsum("nst,mr->mnrst", N.lam(), eye) \
        + jet_einsum("mri,nsti->mnrst", mov, dN)
    # braid the first two output slots; the braiding array is indexed by
    # (differential slot, form slot), the extension feeds (element, direction)
    s1 = sigma_basis(f)
    bc = zc.reorder("mnvut->mnuvt")
    bl = zl.reorder("mnvut->mnuvt") + jet_einsum("mnrst,sruv->mnuvt", zc, s1)
    cache["nq2"] = LJet(p1c + bc, p1l + bl)
    return cache["nq2"]


def nabla_Q(xi: QTensor, G: Optional[GeometryData] = None) -> QTensor:
    """Quantised covariant derivative; the direction slot comes first.

    Rank-1 input must be in left-collected normal form (use
    ``QTensor.from_oneform`` for classical components). Extension to
    rank 2 uses the left Leibniz rule and the generalized braiding.
    """
    G = G or xi.G
    if xi.form and xi.rank != 1:
        raise ValueError("nabla_Q expects tensor-basis input")
    if xi.rank == 1:
        def fn(pt):
            return _nablaQ1_batched(xi.at(pt), G.frame(pt))
        return QTensor(G, 2, fn)
    if xi.rank == 2:
        def fn2(pt):
            f = G.frame(pt)
            cf = xi.at(pt)
            base = _fstar("mn,mnrst->rst", cf, nq2_basis(f), f.om)
            dc = cf.c.grad()                  # [m,n,k]
            d2 = cf.c.grad().grad()           # [m,n,u,s]
            A = jet_einsum("st,utk->usk", f.om, f.gam)
            corr = 0.5 * jet_einsum("usk,mnus->mnk", A, d2)
            dl = cf.lam().grad() if cf.l is not None else corr * 0.0
            out_c = base.c + dc.reorder("mnk->kmn")
            out_l = base.lam() + (dl + corr).reorder("mnk->kmn")
            return LJet(out_c, out_l)
        return QTensor(G, 3, fn2)
    raise ValueError("nabla_Q implemented for ranks 1 and 2")


def sigma_Q(a: ScalarField, xi: QTensor, G: Optional[GeometryData] = None) -> QTensor:
    """Generalized braiding applied to da (x) xi, by its defining difference."""
    G = G or xi.G
    right = module_action(a, xi, "right", G)
    term1 = nabla_Q(right, G)
    term2_body = nabla_Q(xi, G)

    def fn(pt):
        f = G.frame(pt)
        av = a.at(pt)
        t1 = term1.at(pt)
        nx = term2_body.at(pt)
        base = _fstar("mn,->mn", nx, av, f.om)
        slot = _slot_gamma(nx.c, f)
        mov = jet_einsum("i,it->t", av.c.grad(), f.om)
        corr = jet_einsum("mnt,t->mn", slot, mov)
        t2 = LJet(base.c, base.lam() + corr)
        return t1 - t2

    return QTensor(G, 2, fn)


def quantum_torsion(xi: QTensor, G: Optional[GeometryData] = None) -> QTensor:
    """Torsion of the quantised connection applied to a quantum one-form."""
    G = G or xi.G

    def coeff(pt):
        f = G.frame(pt)
        v = _oneform_model(xi, pt)
        # X_{mn} = (1/2)(xi_i T^i_{nm} + (lam/2)(nabla_i xi)_j om^{is} T^j_{nm;s})
        xc = 0.5 * jet_einsum("i,inm->mn", v.c, f.torsion)
        dxi = cov_deriv_jet(v.c, f.gam, 0, 1)          # [j, i]
        half = jet_einsum("ji,is->js", dxi, f.om)
        xl = 0.5 * jet_einsum("i,inm->mn", v.lam(), f.torsion) \
            + 0.25 * jet_einsum("js,jnms->mn", half, f.torsion_cov)
        return LJet(xc, xl)

    return _qform_from_wedge_display(G, coeff)


# -- quantum metrics ---------------------------------------------------------------

def _gq_coeff(f: PointFrame) -> LJet:
    """Normal-form coefficients of the functorial quantum metric.

    g_Q = (g_{im} dx^i) (x) dx^m
          + (lam/2) om^{ij} g_{pm} Gam^p_{iq} Gam^q_{jn} dx^m (x) dx^n

    with the first term a deformed tensor product of classical one-forms;
    collecting its coefficients to the left contributes the second
    correction below. Cross-checked against the inverse of the
    quantisation isomorphism applied to the classical metric.
    """
    U = jet_einsum("pm,piq->miq", f.g, f.gam)
    V = jet_einsum("miq,qjn->mijn", U, f.gam)
    K = 0.5 * jet_einsum("mijn,ij->mn", V, f.om)
    dg = f.g.grad()                        # g_{un},s
    half = jet_einsum("st,utm->usm", f.om, f.gam)
    K = K + 0.5 * jet_einsum("usm,uns->mn", half, dg)
    return LJet(f.g, K)


def g_q_build(G: GeometryData, check_compat: bool = True) -> QTensor:
    """Functorial quantum metric in left-collected normal form."""
    if check_compat:
        pt = tuple(0.1 + 0.01 * k for k in range(G.dim))
        f = G.frame(pt)
        mg = cov_deriv_jet(f.g, f.gam, 0, 2).val
        if np.max(np.abs(mg)) > 1e-8:
            warnings.warn(
                "connection does not preserve the metric; the quantum metric "
                "will not be central", stacklevel=2)
    return QTensor(G, 2, lambda pt: _gq_coeff(G.frame(pt)))


def gen_ricci(G: GeometryData, tol: float = 1e-8) -> TensorField:
    """Generalized Ricci two-form (components of the obstruction to the
    deformed wedge annihilating the quantum metric).

    Built by contracting the wedge-correction family with the metric and
    cross-checked against the direct index formula.
    """

    def fn(pt):
        f = G.frame(pt)
        r1, r2 = f.ricci2, f.ricci2_direct
        if np.max(np.abs(r1.val - r2.val)) > tol:
            raise ConsistencyError(
                "generalized Ricci construction routes disagree at "
                f"{pt}: {np.max(np.abs(r1.val - r2.val)):.3e}")
        return LJet(r1)

    return TensorField(G.chart, 0, 2, fn, form=True)


def g1_build(G: GeometryData) -> QTensor:
    """Quantum metric corrected so the deformed wedge annihilates it.

    The correction is half the generalized Ricci two-form, with the sign
    that makes the deformed wedge of the result vanish identically.
    """
    gq = g_q_build(G, check_compat=False)

    def fn(pt):
        f = G.frame(pt)
        v = gq.at(pt)
        return LJet(v.c, v.lam() + 0.5 * f.ricci2)

    return QTensor(G, 2, fn)


def q_map(X: QTensor, G: Optional[GeometryData] = None, direction: str = "q") -> QTensor:
    """Quantisation isomorphism between rank-2 tensor-basis elements and
    classical tensors with lam-graded coefficients (direction "q"), and
    its first-order inverse ("q-inverse")."""
    G = G or X.G
    if X.rank != 2 or X.form:
        raise ValueError("q_map applies to rank-2 elements")

    def corr(c0: Jet, f: PointFrame) -> Jet:
        A1 = jet_einsum("ij,mir->jmr", f.om, f.gam)
        A2 = jet_einsum("jmr,njs->mrns", A1, f.gam)
        p1 = jet_einsum("mrns,mn->rs", A2, c0)
        dc = c0.grad()
        B1 = jet_einsum("ij,mjr->imr", f.om, f.gam)
        p2 = jet_einsum("imr,msi->rs", B1, dc)
        B2 = jet_einsum("ij,njs->ins", f.om, f.gam)
        p3 = jet_einsum("ins,rni->rs", B2, dc)
        return 0.5 * (p1 - p2 - p3)

    if direction == "q":
        if X.basis != "q1":
            raise ValueError("q maps tensor-basis elements to classical ones")

        def fn(pt):
            f = G.frame(pt)
            v = X.at(pt)
            return LJet(v.c, v.lam() + corr(v.c, f))

        return QTensor(G, 2, fn, basis="q0")
    if direction == "q-inverse":
        def fn(pt):
            f = G.frame(pt)
            v = X.at(pt)
            return LJet(v.c, v.lam() - corr(v.c, f))

        return QTensor(G, 2, fn, basis="q1")
    raise ValueError("direction must be 'q' or 'q-inverse'")


def classical_metric_qtensor(G: GeometryData) -> QTensor:
    """The classical metric viewed on the classical side of the q map."""
    return QTensor(G, 2, lambda pt: LJet(G.frame(pt).g), basis="q0")


def qlc_residual(G: GeometryData) -> TensorField:
    """Obstruction to full metric compatibility of the quantum connection.

    res[m,n,k] combines the Levi-Civita derivative of the generalized
    Ricci two-form with the contorsion terms; it vanishes identically iff
    the unique torsion-free quantum connection preserves the corrected
    quantum metric entirely.
    """

    def fn(pt):
        f = G.frame(pt)
        drc = cov_deriv_jet(f.ricci2, f.gam_lc, 0, 2)      # [m,n,k]
        S = f.contorsion
        if np.max(np.abs(S.val)) < 1e-15:
            return LJet(drc)
        W = f.riemann_q + f.contorsion_cov.reorder("rkmi->rmki")
        SL = jet_einsum("rs,sjn->rjn", f.g, S)
        M = jet_einsum("ij,rjn->irn", f.om, SL)
        term = jet_einsum("irn,rmki->mnk", M, W)
        res = drc - term + term.reorder("nmk->mnk")
        return LJet(res)

    return TensorField(G.chart, 0, 3, fn)
