"""Scalar and jet arithmetic for the first-order deformation engine.

Scalars live in the truncated ring C[lam]/(lam^2): a classical part plus a
first-order coefficient, with lam^2 dropped in every product. First-order
residuals are always read off the lam slot exactly, never by a numerical
lam -> 0 limit.

Jets carry the value of a field together with its partial derivatives up
to third order at a chart point. All geometry providers evaluate through
jets, so derivatives of rational closed forms are exact to machine
rounding. Jets may be tensor-shaped: ``levels[k]`` has shape
``shape + (dim,)*k`` and is symmetric in the trailing derivative axes.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from .errors import DegenerateMetricError, JetDomainError, SingularScalarError

# einsum letters reserved for derivative axes; formulas use lowercase
_DLETTERS = "TUVW"

_CONST_ORDER = 99  # sentinel order for constants (derivatives all zero)


@dataclass(frozen=True)
class LambdaScalar:
    """Element a0 + lam*a1 of C[lam]/(lam^2)."""

    a0: complex = 0j
    a1: complex = 0j

    @property
    def re0(self) -> float:
        return self.a0.real

    @property
    def im0(self) -> float:
        return self.a0.imag

    @property
    def re1(self) -> float:
        return self.a1.real

    @property
    def im1(self) -> float:
        return self.a1.imag

    @staticmethod
    def coerce(x) -> "LambdaScalar":
        if isinstance(x, LambdaScalar):
            return x
        return LambdaScalar(complex(x), 0j)

    def __add__(self, other) -> "LambdaScalar":
        o = LambdaScalar.coerce(other)
        return LambdaScalar(self.a0 + o.a0, self.a1 + o.a1)

    __radd__ = __add__

    def __sub__(self, other) -> "LambdaScalar":
        o = LambdaScalar.coerce(other)
        return LambdaScalar(self.a0 - o.a0, self.a1 - o.a1)

    def __rsub__(self, other) -> "LambdaScalar":
        return LambdaScalar.coerce(other).__sub__(self)

    def __neg__(self) -> "LambdaScalar":
        return LambdaScalar(-self.a0, -self.a1)

    def __mul__(self, other) -> "LambdaScalar":
        o = LambdaScalar.coerce(other)
        # lam^2 = 0
        return LambdaScalar(self.a0 * o.a0, self.a0 * o.a1 + self.a1 * o.a0)

    __rmul__ = __mul__

    def inverse(self) -> "LambdaScalar":
        if self.a0 == 0:
            raise SingularScalarError("classical part vanishes, no inverse in the ring")
        i0 = 1.0 / self.a0
        return LambdaScalar(i0, -self.a1 * i0 * i0)

    def __truediv__(self, other) -> "LambdaScalar":
        return self * LambdaScalar.coerce(other).inverse()

    def __rtruediv__(self, other) -> "LambdaScalar":
        return LambdaScalar.coerce(other) * self.inverse()

    def conj(self) -> "LambdaScalar":
        # lam is treated as a real indeterminate; coefficients conjugate
        return LambdaScalar(self.a0.conjugate(), self.a1.conjugate())

    def at(self, lam: complex) -> complex:
        """Materialize with a numeric value for the deformation parameter."""
        return self.a0 + lam * self.a1


LAMBDA = LambdaScalar(0j, 1 + 0j)


def lambda_arith(a: LambdaScalar, b: Optional[LambdaScalar], op: str) -> LambdaScalar:
    """Ring operation dispatcher: op in {add, mul, div, conj}."""
    if op == "add":
        return a + b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    if op == "conj":
        return a.conj()
    raise ValueError(f"unknown LambdaScalar op {op!r}")


def _as_levels(dim: int, shape: tuple, order: int, arrays) -> tuple:
    out = []
    for k, arr in enumerate(arrays):
        want = shape + (dim,) * k
        a = np.asarray(arr, dtype=np.complex128)
        if a.shape != want:
            a = np.broadcast_to(a, want).astype(np.complex128)
        out.append(a)
    return tuple(out)


class Jet:
    """Truncated Taylor data of a (possibly tensor-shaped) field at a point.

    ``order`` is the number of stored derivative levels; arithmetic results
    carry the minimum order of their operands, and ``grad`` consumes one
    level. Level arrays are complex and symmetric in derivative axes.
    """

    __slots__ = ("dim", "order", "levels")

    def __init__(self, dim: int, levels: Sequence[np.ndarray], order: Optional[int] = None):
        self.dim = dim
        self.levels = tuple(np.asarray(l, dtype=np.complex128) for l in levels)
        self.order = len(self.levels) - 1 if order is None else order

    # -- constructors ------------------------------------------------------

    @classmethod
    def zeros(cls, dim: int, shape: tuple = (), order: int = 3) -> "Jet":
        return cls(dim, [np.zeros(shape + (dim,) * k, dtype=np.complex128)
                         for k in range(order + 1)])

    @classmethod
    def const(cls, dim: int, value, order: int = 3) -> "Jet":
        v = np.asarray(value, dtype=np.complex128)
        levels = [v] + [np.zeros(v.shape + (dim,) * k, dtype=np.complex128)
                        for k in range(1, order + 1)]
        return cls(dim, levels, order)

    @classmethod
    def coords(cls, dim: int, point, order: int = 3) -> "Jet":
        """Jet of the identity chart map; shape (dim,)."""
        p = np.asarray(point, dtype=np.complex128)
        levels = [p, np.eye(dim, dtype=np.complex128)]
        for k in range(2, order + 1):
            levels.append(np.zeros((dim,) * (k + 1), dtype=np.complex128))
        return cls(dim, levels, order)

    @classmethod
    def coordinate(cls, dim: int, point, k: int, order: int = 3) -> "Jet":
        levels = [np.asarray(complex(point[k]))]
        d1 = np.zeros(dim, dtype=np.complex128)
        d1[k] = 1.0
        levels.append(d1)
        for m in range(2, order + 1):
            levels.append(np.zeros((dim,) * m, dtype=np.complex128))
        return cls(dim, levels, order)

    # -- basic access ------------------------------------------------------

    @property
    def shape(self) -> tuple:
        return self.levels[0].shape

    @property
    def val(self) -> np.ndarray:
        return self.levels[0]

    @property
    def value(self) -> complex:
        return complex(self.levels[0])

    @property
    def d1(self) -> Optional[np.ndarray]:
        return self.levels[1] if self.order >= 1 else None

    @property
    def d2(self) -> Optional[np.ndarray]:
        return self.levels[2] if self.order >= 2 else None

    @property
    def d3(self) -> Optional[np.ndarray]:
        return self.levels[3] if self.order >= 3 else None

    def _coerce(self, other) -> "Jet":
        if isinstance(other, Jet):
            return other
        return Jet.const(self.dim, other, order=min(self.order, 3))

    # -- linear operations -------------------------------------------------

    def __add__(self, other) -> "Jet":
        o = self._coerce(other)
        n = min(self.order, o.order)
        return Jet(self.dim, [self.levels[k] + o.levels[k] for k in range(n + 1)], n)

    __radd__ = __add__

    def __sub__(self, other) -> "Jet":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Jet":
        return (-self) + other

    def __neg__(self) -> "Jet":
        return Jet(self.dim, [-l for l in self.levels], self.order)

    def scale(self, c: complex) -> "Jet":
        return Jet(self.dim, [c * l for l in self.levels], self.order)

    # -- products ----------------------------------------------------------

    def __mul__(self, other) -> "Jet":
        if isinstance(other, Jet):
            if self.shape == () and other.shape == ():
                return jet_einsum(",->", self, other)
            if self.shape == ():
                sub = _subscript(other.shape)
                return jet_einsum(f",{sub}->{sub}", self, other)
            if other.shape == ():
                sub = _subscript(self.shape)
                return jet_einsum(f"{sub},->{sub}", self, other)
            raise ValueError("ambiguous jet product for two tensor-shaped jets")
        return self.scale(complex(other))

    def __rmul__(self, other) -> "Jet":
        return self.scale(complex(other))

    def reciprocal(self) -> "Jet":
        v = self.value
        if v == 0:
            raise SingularScalarError("reciprocal of a jet with zero value")
        return self.compose((1.0 / v, -1.0 / v ** 2, 2.0 / v ** 3, -6.0 / v ** 4))

    def __truediv__(self, other) -> "Jet":
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return self.scale(1.0 / complex(other))

    def __rtruediv__(self, other) -> "Jet":
        return self.reciprocal().scale(complex(other))

    def __pow__(self, p) -> "Jet":
        if isinstance(p, int) or (isinstance(p, float) and p.is_integer()):
            k = int(p)
            if k < 0:
                return self.reciprocal() ** (-k)
            if k == 0:
                return Jet.const(self.dim, np.ones(self.shape), self.order)
            out = self
            for _ in range(k - 1):
                out = out * self
            return out
        v = self.value
        if v == 0:
            raise JetDomainError("non-integer power of a zero-valued jet")
        if v.imag == 0 and v.real < 0:
            raise JetDomainError("non-integer power of a negative real jet value")
        f0 = v ** p
        return self.compose((f0, p * v ** (p - 1), p * (p - 1) * v ** (p - 2),
                             p * (p - 1) * (p - 2) * v ** (p - 3)))

    def compose(self, derivs: Sequence[complex]) -> "Jet":
        """Chain rule with a univariate function given by value and derivatives.

        ``derivs = (f(u), f'(u), f''(u), f'''(u))`` evaluated at this jet's
        value. Scalar-shaped jets only.
        """
        if self.shape != ():
            raise ValueError("compose applies to scalar-shaped jets")
        f = [np.asarray(d, dtype=np.complex128) for d in derivs]
        out = [f[0]]
        if self.order >= 1:
            u1 = self.levels[1]
            out.append(f[1] * u1)
        if self.order >= 2:
            u2 = self.levels[2]
            out.append(f[2] * np.einsum("i,j->ij", u1, u1) + f[1] * u2)
        if self.order >= 3:
            u3 = self.levels[3]
            cross = np.einsum("ij,k->ijk", u2, u1)
            sym = cross + np.moveaxis(cross, -1, -2) + np.moveaxis(cross, -1, -3)
            out.append(f[3] * np.einsum("i,j,k->ijk", u1, u1, u1) + f[2] * sym + f[1] * u3)
        return Jet(self.dim, out, self.order)

    # -- structure ---------------------------------------------------------

    def grad(self) -> "Jet":
        """Partial derivatives as one extra trailing tensor axis; order drops."""
        if self.order < 1:
            raise JetDomainError("jet order exhausted, cannot differentiate")
        return Jet(self.dim, self.levels[1:], self.order - 1)

    def conj(self) -> "Jet":
        # valid because chart coordinates are real
        return Jet(self.dim, [np.conjugate(l) for l in self.levels], self.order)

    def reorder(self, spec: str) -> "Jet":
        """Relabel tensor axes with an einsum-style spec, e.g. 'ijk->kij'."""
        src, dst = spec.split("->")
        return Jet(self.dim,
                   [np.einsum(f"{src}...->{dst}...", l) for l in self.levels],
                   self.order)

    def take_index(self, idx, axis: int = 0) -> "Jet":
        """Slice one or more leading tensor axes at fixed indices."""
        if isinstance(idx, tuple):
            out = self
            for i in idx:
                out = out.take_index(i, axis=axis)
            return out
        return Jet(self.dim, [np.take(l, idx, axis=axis) for l in self.levels],
                   self.order)

    def matinv(self) -> "Jet":
        """Inverse of a square-matrix jet, solved level by level."""
        a = self.levels
        d0 = a[0]
        if d0.ndim != 2 or d0.shape[0] != d0.shape[1]:
            raise ValueError("matinv needs a square matrix jet")
        try:
            b0 = np.linalg.inv(d0)
        except np.linalg.LinAlgError as exc:
            raise DegenerateMetricError(f"singular matrix at evaluation point: {exc}")
        if not np.all(np.isfinite(b0)) or \
                np.max(np.abs(d0 @ b0 - np.eye(d0.shape[0]))) > 1e-6:
            raise DegenerateMetricError("matrix numerically singular at evaluation point")
        out = [b0]
        if self.order >= 1:
            b1 = -np.einsum("im,mnK,nj->ijK", b0, a[1], b0)
            out.append(b1)
        if self.order >= 2:
            t = np.einsum("mnKL,nj->mjKL", a[2], b0)
            t += np.einsum("mnK,njL->mjKL", a[1], b1)
            t += np.einsum("mnL,njK->mjKL", a[1], b1)
            out.append(-np.einsum("im,mjKL->ijKL", b0, t))
        if self.order >= 3:
            b2 = out[2]
            t = np.einsum("mnKLM,nj->mjKLM", a[3], b0)
            c21 = np.einsum("mnKL,njM->mjKLM", a[2], b1)
            t += c21 + np.moveaxis(c21, -1, -2) + np.moveaxis(c21, -1, -3)
            c12 = np.einsum("mnK,njLM->mjKLM", a[1], b2)
            t += c12 + np.moveaxis(c12, -3, -2) + np.moveaxis(c12, -3, -1)
            out.append(-np.einsum("im,mjKLM->ijKLM", b0, t))
        return Jet(self.dim, out, self.order)


def _subscript(shape: tuple) -> str:
    return "abcdefghijklmnopqrs"[: len(shape)]


def jet_einsum(spec: str, a, b) -> "Jet":
    """Einsum of two jets with the Leibniz rule across derivative levels.

    ``spec`` refers to tensor axes only; derivative axes are appended and
    handled automatically. Plain arrays and numbers coerce to constants.
    """
    if not isinstance(a, Jet) and not isinstance(b, Jet):
        raise TypeError("jet_einsum needs at least one Jet operand")
    ref = a if isinstance(a, Jet) else b
    if not isinstance(a, Jet):
        a = Jet(ref.dim, [np.asarray(a, dtype=np.complex128)], _CONST_ORDER)
    if not isinstance(b, Jet):
        b = Jet(ref.dim, [np.asarray(b, dtype=np.complex128)], _CONST_ORDER)
    ins, out = spec.split("->")
    sa, sb = ins.split(",")
    order = min(a.order, b.order, 3)
    T, U, V = _DLETTERS[0], _DLETTERS[1], _DLETTERS[2]

    def lev(j: Jet, k: int) -> np.ndarray:
        if k < len(j.levels):
            return j.levels[k]
        return np.zeros(j.shape + (j.dim,) * k, dtype=np.complex128)

    a0, b0 = lev(a, 0), lev(b, 0)
    levels = [np.einsum(f"{sa},{sb}->{out}", a0, b0)]
    if order >= 1:
        levels.append(
            np.einsum(f"{sa}{T},{sb}->{out}{T}", lev(a, 1), b0)
            + np.einsum(f"{sa},{sb}{T}->{out}{T}", a0, lev(b, 1)))
    if order >= 2:
        l2 = (np.einsum(f"{sa}{T}{U},{sb}->{out}{T}{U}", lev(a, 2), b0)
              + np.einsum(f"{sa},{sb}{T}{U}->{out}{T}{U}", a0, lev(b, 2)))
        cross = np.einsum(f"{sa}{T},{sb}{U}->{out}{T}{U}", lev(a, 1), lev(b, 1))
        levels.append(l2 + cross + np.swapaxes(cross, -1, -2))
    if order >= 3:
        l3 = (np.einsum(f"{sa}{T}{U}{V},{sb}->{out}{T}{U}{V}", lev(a, 3), b0)
              + np.einsum(f"{sa},{sb}{T}{U}{V}->{out}{T}{U}{V}", a0, lev(b, 3)))
        c21 = np.einsum(f"{sa}{T}{U},{sb}{V}->{out}{T}{U}{V}", lev(a, 2), lev(b, 1))
        l3 += c21 + np.moveaxis(c21, -1, -2) + np.moveaxis(c21, -1, -3)
        c12 = np.einsum(f"{sa}{T},{sb}{U}{V}->{out}{T}{U}{V}", lev(a, 1), lev(b, 2))
        l3 += c12 + np.moveaxis(c12, -3, -2) + np.moveaxis(c12, -3, -1)
        levels.append(l3)
    return Jet(ref.dim, levels, order)


# -- univariate function table ----------------------------------------------

def _domain_positive(v: complex, name: str) -> None:
    if v == 0 or (v.imag == 0 and v.real <= 0):
        raise JetDomainError(f"{name} of a jet with non-positive real value {v}")


def _f_exp(v):
    e = cmath.exp(v)
    return (e, e, e, e)


def _f_ln(v):
    _domain_positive(v, "ln")
    return (cmath.log(v), 1 / v, -1 / v ** 2, 2 / v ** 3)


def _f_sqrt(v):
    _domain_positive(v, "sqrt")
    w = cmath.sqrt(v)
    return (w, 0.5 / w, -0.25 / w ** 3, 0.375 / w ** 5)


def _f_sin(v):
    return (cmath.sin(v), cmath.cos(v), -cmath.sin(v), -cmath.cos(v))


def _f_cos(v):
    return (cmath.cos(v), -cmath.sin(v), -cmath.cos(v), cmath.sin(v))


UNARY_FUNCS: dict[str, Callable[[complex], tuple]] = {
    "exp": _f_exp,
    "ln": _f_ln,
    "sqrt": _f_sqrt,
    "sin": _f_sin,
    "cos": _f_cos,
}


def jet_apply(name: str, u: Jet) -> Jet:
    """Apply a named smooth univariate function (or conj) to a scalar jet."""
    if name == "conj":
        return u.conj()
    try:
        table = UNARY_FUNCS[name]
    except KeyError:
        raise JetDomainError(f"unknown unary function {name!r}")
    return u.compose(table(u.value))


def jet_arith(a: Jet, b: Optional[Jet], op: str, func: Optional[str] = None) -> Jet:
    """Jet operation dispatcher: op in {add, mul, compose}."""
    if op == "add":
        return a + b
    if op == "mul":
        return a * b
    if op == "compose":
        return jet_apply(func, a)
    raise ValueError(f"unknown jet op {op!r}")


class LJet(NamedTuple):
    """A lam-graded jet: classical part plus optional first-order part."""

    c: Jet
    l: Optional[Jet] = None

    def lam(self) -> Jet:
        return self.l if self.l is not None else Jet.zeros(self.c.dim, self.c.shape,
                                                           max(self.c.order - 1, 0))

    def __add__(self, other: "LJet") -> "LJet":
        if self.l is None and other.l is None:
            return LJet(self.c + other.c, None)
        return LJet(self.c + other.c, self.lam() + other.lam())

    def __sub__(self, other: "LJet") -> "LJet":
        return self + other.scale(-1.0)

    def scale(self, z) -> "LJet":
        """Multiply by a constant complex number or LambdaScalar."""
        if isinstance(z, LambdaScalar):
            l = self.lam().scale(z.a0) + self.c.scale(z.a1)
            return LJet(self.c.scale(z.a0), l)
        return LJet(self.c.scale(complex(z)),
                    None if self.l is None else self.l.scale(complex(z)))

    def values(self) -> tuple[np.ndarray, np.ndarray]:
        zero = np.zeros(self.c.shape, dtype=np.complex128)
        return (self.c.val, self.l.val if self.l is not None else zero)
