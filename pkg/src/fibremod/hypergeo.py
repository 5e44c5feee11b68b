"""Generalized hypergeometric series and the differential field Q(z, F, theta F)."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import factorial

from gmpy2 import mpq
from sympy import QQ
from sympy.polys.fields import field

from .series import ONE, ZERO, Series2, SeriesError, rat, rat_str
from .weyl import ShiftOp


class HypergeoError(ValueError):
    pass


@dataclass(frozen=True)
class HGParams:
    upper: tuple
    lower: tuple

    def __init__(self, upper, lower=(ONE,)):
        object.__setattr__(self, "upper", tuple(rat(a) for a in upper))
        object.__setattr__(self, "lower", tuple(rat(b) for b in lower))

    def check_lower(self):
        for b in self.lower:
            if b <= 0 and b.denominator == 1:
                raise HypergeoError(f"lower parameter {b} is a non-positive integer")


@lru_cache(maxsize=4096)
def pochhammer(a, k: int):
    a = rat(a)
    p = ONE
    for i in range(k):
        p *= a + i
    return p


def pfq(params: HGParams, order: int, scale=1) -> Series2:
    """``pFq(upper; lower | scale * z)`` truncated at ``z^order`` (inclusive)."""
    params.check_lower()
    scale = rat(scale)
    coeffs = [ONE]
    c = ONE
    for k in range(order):
        num = ONE
        for a in params.upper:
            num *= a + k
        den = ONE * (k + 1)
        for b in params.lower:
            den *= b + k
        c = c * num / den * scale
        coeffs.append(c)
    return Series2.univariate(coeffs)


def log_companion(upper, order: int, scale=1) -> Series2:
    """The series ``G`` making ``F log z + G`` a solution when all lower parameters are 1.

    ``F`` is ``pfq(upper; 1, ..., 1)``; the argument is ``scale * z``.
    """
    upper = tuple(rat(a) for a in upper)
    p = len(upper)
    scale = rat(scale)
    coeffs = [ZERO]
    head = ONE
    harm = ZERO
    for k in range(1, order + 1):
        head = head * scale
        for a in upper:
            head *= a + k - 1
        head /= mpq(k) ** p
        for a in upper:
            harm += ONE / (a + k - 1)
        harm -= mpq(p, k)
        coeffs.append(head * harm)
    return Series2.univariate(coeffs)


def gauss_operator(params: HGParams, scale=1) -> ShiftOp:
    """``theta prod(theta + b_j - 1) - scale z prod(theta + a_i)`` in one variable."""
    t, z = ShiftOp.theta(1, 1), ShiftOp.z(1, 1)
    left = t
    for b in params.lower:
        left = left * (t + (b - 1))
    right = z * rat(scale)
    for a in params.upper:
        right = right * (t + a)
    return left - right


def shifted_params(params: HGParams) -> HGParams:
    """Parameters of the equation satisfied by ``z^(b1 - 1) F``."""
    b1 = params.lower[0]
    upper = tuple(a - b1 + 1 for a in params.upper)
    lower = (2 - b1,) + tuple(b - b1 + 1 for b in params.lower[1:])
    return HGParams(upper, lower)


def shift_rule_check(params: HGParams, order: int) -> bool:
    """``z^(b1-1) pFq`` is killed by the operator of the shifted parameters (integer ``b1 >= 1``)."""
    b1 = params.lower[0]
    if b1.denominator != 1 or b1 < 1:
        raise HypergeoError("shift_rule_check needs a positive integer b1")
    f = pfq(params, order).shift(int(b1) - 1)
    op = gauss_operator(shifted_params(params))
    return op.apply(f).is_zero()


def derivative_rule_check(params: HGParams, order: int) -> bool:
    """``d/dz pFq(a; b) = prod(a)/prod(b) pFq(a+1; b+1)``."""
    lhs = pfq(params, order + 1).derivative(1)
    factor = ONE
    for a in params.upper:
        factor *= a
    for b in params.lower:
        factor /= b
    shifted = HGParams(tuple(a + 1 for a in params.upper), tuple(b + 1 for b in params.lower))
    return lhs == pfq(shifted, order).scale(factor)


def limit_b_to_negint_series(a1, a2, n: int, order: int) -> Series2:
    """Coefficients of ``lim_{b -> -n} 2F1(a1, a2; b | z) / Gamma(b)``.

    Each term ``(a1)_k (a2)_k / ((b)_k k!) / Gamma(b)`` is expanded at
    ``b = -n + eps``: ``1/Gamma(b) = (-1)^n n! eps + O(eps^2)`` and
    ``(b)_k`` vanishes to first order exactly when ``k > n``.  Only the
    ``eps^0`` part survives.
    """
    a1, a2 = rat(a1), rat(a2)
    inv_gamma = (1, mpq((-1) ** n * factorial(n)))  # (eps order, leading coefficient)
    coeffs = []
    for k in range(order + 1):
        poch_order, poch = 0, ONE
        for i in range(k):
            if i == n:
                poch_order += 1
            else:
                poch *= i - n
        term_order = inv_gamma[0] - poch_order
        if term_order > 0:
            coeffs.append(ZERO)
            continue
        if term_order < 0:
            raise HypergeoError("unexpected pole in the limit")
        coeffs.append(pochhammer(a1, k) * pochhammer(a2, k) / factorial(k) * inv_gamma[1] / poch)
    return Series2.univariate(coeffs)


def limit_b_to_negint_check(a1, a2, n: int, order: int) -> bool:
    """Compare the limit with ``(a1)_{n+1}(a2)_{n+1}/(n+1)! z^(n+1) F(a1+n+1, a2+n+1; n+2 | z)``."""
    a1, a2 = rat(a1), rat(a2)
    lhs = limit_b_to_negint_series(a1, a2, n, order)
    pref = pochhammer(a1, n + 1) * pochhammer(a2, n + 1) / factorial(n + 1)
    rhs = pfq(HGParams((a1 + n + 1, a2 + n + 1), (n + 2,)), order).shift(n + 1).scale(pref)
    return lhs == rhs


# -- the differential field ---------------------------------------------------------

_FIELD, _Z, _F, _T = field("Z,F,T", QQ)


def _to_domain(x):
    x = rat(x)
    return QQ(int(x.numerator), int(x.denominator))


class DiffFieldElem:
    """Reduced fraction in ``Q(Z, F, T)`` with ``Z = z``, ``F = F(a1, a2; 1 | a0 z)``, ``T = theta F``."""

    __slots__ = ("value", "params")

    def __init__(self, value, params):
        self.params = tuple(rat(p) for p in params)
        if isinstance(value, DiffFieldElem):
            value = value.value
        elif not hasattr(value, "numer"):
            value = _FIELD(_to_domain(value))
        self.value = value

    # generators
    @classmethod
    def Z(cls, params):
        return cls(_Z, params)

    @classmethod
    def F(cls, params):
        return cls(_F, params)

    @classmethod
    def T(cls, params):
        return cls(_T, params)

    @classmethod
    def const(cls, c, params):
        return cls(_FIELD(_to_domain(c)), params)

    @classmethod
    def from_z_poly(cls, coeffs, params):
        """Polynomial ``sum coeffs[k] Z^k``."""
        v = _FIELD(0)
        for k, c in enumerate(coeffs):
            if c:
                v += _to_domain(c) * _Z ** k
        return cls(v, params)

    def _other(self, o):
        if isinstance(o, DiffFieldElem):
            if o.params != self.params:
                raise HypergeoError("parameter mismatch between field elements")
            return o.value
        return _FIELD(_to_domain(o))

    def __add__(self, o):
        return DiffFieldElem(self.value + self._other(o), self.params)

    __radd__ = __add__

    def __sub__(self, o):
        return DiffFieldElem(self.value - self._other(o), self.params)

    def __rsub__(self, o):
        return DiffFieldElem(self._other(o) - self.value, self.params)

    def __mul__(self, o):
        return DiffFieldElem(self.value * self._other(o), self.params)

    __rmul__ = __mul__

    def __truediv__(self, o):
        d = self._other(o)
        if d == 0:
            raise ZeroDivisionError("division by zero field element")
        return DiffFieldElem(self.value / d, self.params)

    def __rtruediv__(self, o):
        return DiffFieldElem(self._other(o) / self.value, self.params)

    def __neg__(self):
        return DiffFieldElem(-self.value, self.params)

    def __pow__(self, e: int):
        return DiffFieldElem(self.value ** int(e), self.params)

    def __eq__(self, o):
        if isinstance(o, DiffFieldElem):
            return self.params == o.params and self.value == o.value
        return self.value == _FIELD(_to_domain(o))

    def __hash__(self):
        return hash((self.params, self.value))

    def is_zero(self) -> bool:
        return self.value == 0

    @property
    def numer(self):
        return self.value.numer

    @property
    def denom(self):
        return self.value.denom

    def theta(self) -> "DiffFieldElem":
        return df_theta(self)

    def __str__(self):
        a0, a1, a2 = self.params
        return f"[a0={rat_str(a0)}, a1={rat_str(a1)}, a2={rat_str(a2)}] {self.to_text()}"

    def to_text(self) -> str:
        num = str(self.value.numer.as_expr()).replace("T", "TF")
        den = str(self.value.denom.as_expr()).replace("T", "TF")
        return num if den == "1" else f"({num})/({den})"

    __repr__ = __str__

    def z_poly_coeffs(self, part: str = "numer") -> list:
        """Coefficients in ``Z`` of the numerator or denominator when it is free of ``F, T``."""
        poly = self.value.numer if part == "numer" else self.value.denom
        out: dict = {}
        for (e1, e2, e3), c in poly.terms():
            if e2 or e3:
                raise HypergeoError("polynomial involves F or T")
            out[e1] = rat(c)
        top = max(out, default=0)
        return [out.get(k, ZERO) for k in range(top + 1)]

    def degrees(self, part: str = "numer") -> tuple:
        poly = self.value.numer if part == "numer" else self.value.denom
        return tuple(max((m[i] for m in poly.monoms()), default=0) for i in range(3))

    def eval(self, order: int) -> Series2:
        return df_eval(self, order)


def theta_of_T(params) -> DiffFieldElem:
    """``theta^2 F`` rewritten through the Gauss equation."""
    a0, a1, a2 = (rat(p) for p in params)
    Z, F, T = _Z, _F, _T
    v = (_to_domain(a0 * (a1 + a2)) * Z * T + _to_domain(a0 * a1 * a2) * Z * F) / (1 - _to_domain(a0) * Z)
    return DiffFieldElem(v, params)


def _poly_theta(poly, tT):
    ring_to_field = _FIELD.field_new
    dZ = poly.diff(poly.ring.gens[0])
    dF = poly.diff(poly.ring.gens[1])
    dT = poly.diff(poly.ring.gens[2])
    return ring_to_field(dZ) * _Z + ring_to_field(dF) * _T + ring_to_field(dT) * tT


def df_theta(e: DiffFieldElem) -> DiffFieldElem:
    """Extension of ``theta = z d/dz`` with ``theta Z = Z``, ``theta F = T`` and the Gauss rule for ``theta T``."""
    tT = theta_of_T(e.params).value
    p, q = e.value.numer, e.value.denom
    tp = _poly_theta(p, tT)
    if q == 1:
        return DiffFieldElem(tp, e.params)
    tq = _poly_theta(q, tT)
    pf, qf = _FIELD.field_new(p), _FIELD.field_new(q)
    return DiffFieldElem((tp * qf - pf * tq) / (qf * qf), e.params)


@lru_cache(maxsize=64)
def _base_series(params: tuple, order: int):
    a0, a1, a2 = params
    F = pfq(HGParams((a1, a2), (1,)), order, a0)
    return (Series2.univariate([0, 1], order), F, F.theta(1))


def _eval_poly(poly, params, order: int) -> Series2:
    zs, fs, ts = _base_series(params, order)
    cache: dict = {}

    def pw(base, idx, e):
        key = (idx, e)
        if key not in cache:
            cache[key] = base ** e
        return cache[key]

    total = Series2((order, 0))
    for (e1, e2, e3), c in poly.terms():
        term = Series2.constant(rat(c), (order, 0))
        if e1:
            if e1 > order:
                continue
            term = term.shift(e1)
        if e2:
            term = term * pw(fs, 1, e2)
        if e3:
            term = term * pw(ts, 2, e3)
        total = total + term
    return total


def df_eval(e: DiffFieldElem, order: int) -> Series2:
    """Series in ``z`` to ``order`` obtained by substituting the hypergeometric series."""
    num = _eval_poly(e.value.numer, e.params, order)
    den = _eval_poly(e.value.denom, e.params, order)
    if den.c[0][0] == 0:
        raise SeriesError("denominator does not evaluate to a unit series")
    return num * den.inverse()


def wronskian_closed_form_check(a0, a1, a2, order: int) -> bool:
    """``F theta(F log z + G) - (F log z + G) theta F = (1 - a0 z)^-(a1 + a2)``."""
    a0, a1, a2 = rat(a0), rat(a1), rat(a2)
    F = pfq(HGParams((a1, a2), (1,)), order, a0)
    G = log_companion((a1, a2), order, a0)
    w = F * F + F * G.theta(1) - G * F.theta(1)
    expected = Series2.univariate([1, -a0], order).pow_rational(-(a1 + a2))
    return w == expected
